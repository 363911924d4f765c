#pragma once

#include <string>
#include <vector>

namespace tutorsim {

struct ZipEntry {
  std::string name;  // forward slashes, relative
  std::string data;

  friend bool operator==(const ZipEntry&, const ZipEntry&) = default;
};

// Stored (uncompressed) archive with a fixed timestamp, so equal entries
// give equal bytes.
std::string write_zip(const std::vector<ZipEntry>& entries);

// Reads stored and deflated entries and verifies CRC-32. Rejects absolute
// names and names containing "..". Directory entries are skipped.
std::vector<ZipEntry> read_zip(const std::string& bytes);

}  // namespace tutorsim
