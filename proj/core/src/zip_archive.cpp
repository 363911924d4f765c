#include "tutorsim/zip_archive.hpp"

#include <cstdint>
#include <limits>

#include <zlib.h>

#include "tutorsim/error.hpp"

namespace tutorsim {

namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::uint16_t kVersion = 20;
constexpr std::uint16_t kUtf8Flag = 0x0800;
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;  // 1980-01-01

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

[[noreturn]] void corrupt(const std::string& what) {
  throw Error(ErrorCode::schema_error, "invalid zip archive: " + what);
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint16_t u16(std::size_t at) const {
    need(at, 2);
    return static_cast<std::uint16_t>(byte(at) | (byte(at + 1) << 8));
  }
  std::uint32_t u32(std::size_t at) const {
    need(at, 4);
    return byte(at) | (byte(at + 1) << 8) | (byte(at + 2) << 16) |
           (static_cast<std::uint32_t>(byte(at + 3)) << 24);
  }
  std::string slice(std::size_t at, std::size_t n) const {
    need(at, n);
    return bytes_.substr(at, n);
  }
  std::size_t size() const { return bytes_.size(); }

 private:
  std::uint32_t byte(std::size_t at) const { return static_cast<unsigned char>(bytes_[at]); }
  void need(std::size_t at, std::size_t n) const {
    if (at > bytes_.size() || n > bytes_.size() - at) corrupt("truncated");
  }
  const std::string& bytes_;
};

std::uint32_t crc_of(const std::string& data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t off = 0;
  while (off < data.size()) {
    const auto chunk = static_cast<uInt>(
        std::min<std::size_t>(data.size() - off, std::numeric_limits<uInt>::max()));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data.data() + off), chunk);
    off += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string inflate_raw(const std::string& input, std::size_t expected) {
  std::string out(expected, '\0');
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) corrupt("inflate init failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(input.data()));
  zs.avail_in = static_cast<uInt>(input.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  const auto produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected) corrupt("bad deflate stream");
  return out;
}

bool unsafe_name(const std::string& name) {
  if (name.empty() || name.front() == '/' || name.front() == '\\') return true;
  if (name.find(':') != std::string::npos) return true;
  std::size_t start = 0;
  while (start <= name.size()) {
    auto end = name.find_first_of("/\\", start);
    if (end == std::string::npos) end = name.size();
    if (name.compare(start, end - start, "..") == 0) return true;
    start = end + 1;
  }
  return false;
}

}  // namespace

std::string write_zip(const std::vector<ZipEntry>& entries) {
  std::string out;
  std::string central;
  for (const auto& e : entries) {
    if (unsafe_name(e.name)) throw Error(ErrorCode::validation_failed, "unsafe zip entry name");
    if (e.data.size() > 0xffffffffu || out.size() > 0xffffffffu)
      throw Error(ErrorCode::io_error, "archive exceeds the 4 GiB zip limit");
    const auto crc = crc_of(e.data);
    const auto size = static_cast<std::uint32_t>(e.data.size());
    const auto offset = static_cast<std::uint32_t>(out.size());
    const auto name_len = static_cast<std::uint16_t>(e.name.size());

    put32(out, kLocalSig);
    put16(out, kVersion);
    put16(out, kUtf8Flag);
    put16(out, 0);  // stored
    put16(out, 0);  // time
    put16(out, kDosDate);
    put32(out, crc);
    put32(out, size);
    put32(out, size);
    put16(out, name_len);
    put16(out, 0);
    out += e.name;
    out += e.data;

    put32(central, kCentralSig);
    put16(central, kVersion);
    put16(central, kVersion);
    put16(central, kUtf8Flag);
    put16(central, 0);
    put16(central, 0);
    put16(central, kDosDate);
    put32(central, crc);
    put32(central, size);
    put32(central, size);
    put16(central, name_len);
    put16(central, 0);  // extra
    put16(central, 0);  // comment
    put16(central, 0);  // disk
    put16(central, 0);  // internal attrs
    put32(central, 0);  // external attrs
    put32(central, offset);
    central += e.name;
  }
  const auto cd_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  put32(out, kEndSig);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, cd_offset);
  put16(out, 0);
  return out;
}

std::vector<ZipEntry> read_zip(const std::string& bytes) {
  Reader r(bytes);
  if (bytes.size() < 22) corrupt("too short");
  // The end record sits in the last 22 + 65535 bytes.
  std::size_t end = std::string::npos;
  const std::size_t lowest = bytes.size() > 22 + 0xffff ? bytes.size() - 22 - 0xffff : 0;
  for (std::size_t at = bytes.size() - 22 + 1; at-- > lowest;) {
    if (r.u32(at) == kEndSig) {
      end = at;
      break;
    }
  }
  if (end == std::string::npos) corrupt("no end of central directory");

  const std::size_t count = r.u16(end + 10);
  std::size_t at = r.u32(end + 16);
  std::vector<ZipEntry> entries;
  for (std::size_t i = 0; i < count; ++i) {
    if (r.u32(at) != kCentralSig) corrupt("bad central directory entry");
    const auto flags = r.u16(at + 8);
    const auto method = r.u16(at + 10);
    const auto crc = r.u32(at + 16);
    const auto csize = r.u32(at + 20);
    const auto usize = r.u32(at + 24);
    const auto nlen = r.u16(at + 28);
    const auto xlen = r.u16(at + 30);
    const auto clen = r.u16(at + 32);
    const auto local = r.u32(at + 42);
    std::string name = r.slice(at + 46, nlen);
    at += 46u + nlen + xlen + clen;

    if (flags & 0x1) corrupt("encrypted entries are not supported");
    if (!name.empty() && name.back() == '/') continue;
    if (unsafe_name(name)) corrupt("unsafe entry name '" + name + "'");
    if (r.u32(local) != kLocalSig) corrupt("bad local header for '" + name + "'");
    const std::size_t data_at = local + 30u + r.u16(local + 26) + r.u16(local + 28);
    std::string raw = r.slice(data_at, csize);

    std::string data;
    if (method == 0) data = std::move(raw);
    else if (method == 8) data = inflate_raw(raw, usize);
    else corrupt("unsupported compression method " + std::to_string(method));
    if (data.size() != usize || crc_of(data) != crc) corrupt("CRC mismatch for '" + name + "'");
    entries.push_back({std::move(name), std::move(data)});
  }
  return entries;
}

}  // namespace tutorsim
