#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "tutorsim/error.hpp"
#include "tutorsim/eval_harness.hpp"
#include "tutorsim/json_codec.hpp"

namespace tutorsim {

namespace {

constexpr std::array<Pipeline, 3> kReportOrder = {Pipeline::baseline, Pipeline::ours,
                                                  Pipeline::knowledge_only};

std::string pipeline_title(Pipeline p) {
  switch (p) {
    case Pipeline::baseline: return "Baseline";
    case Pipeline::ours: return "Ours";
    case Pipeline::knowledge_only: return "Knowledge-only";
  }
  return "Ours";
}

std::string fixed(double v, int digits = 1) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s(buf);
  if (s == "-0.0" || s == "-0.00") s.erase(0, 1);
  return s;
}

std::string pm(const MeanSd& m) { return fixed(m.mean) + " ± " + fixed(m.sd); }

nlohmann::json mean_sd_json(const MeanSd& m) {
  return {{"mean", m.mean}, {"sd", m.sd}, {"n", m.n}};
}

nlohmann::json aggregate_json(const Aggregate& a) {
  return {{"mean", a.mean}, {"median", a.median}, {"min", a.min}, {"max", a.max}, {"n", a.n}};
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str());
}

// The list itself, or the array under `key` of a versioned wrapper object.
const nlohmann::json& list_member(const nlohmann::json& j, const char* key,
                                  const std::filesystem::path& path) {
  if (j.is_array()) return j;
  check_schema(j);
  auto it = j.find(key);
  if (it == j.end() || !it->is_array())
    throw Error(ErrorCode::schema_error, path.string() + " has no '" + key + "' array");
  return *it;
}

}  // namespace

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  a.n = values.size();
  if (values.empty()) return a;
  a.mean = mean_sd(values).mean;
  a.median = median(values);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  a.min = *lo;
  a.max = *hi;
  return a;
}

BiasReport build_report(const std::vector<StudentProfile>& profiles,
                        const std::vector<EvalRecord>& records) {
  if (records.empty()) throw Error(ErrorCode::empty_records, "no evaluation records");
  std::map<std::string, const StudentProfile*> by_id;
  for (const auto& p : profiles) {
    if (!by_id.emplace(p.id, &p).second)
      throw Error(ErrorCode::validation_failed, "duplicate profile id '" + p.id + "'");
  }

  std::map<std::string, std::vector<const EvalRecord*>> grouped;
  for (const auto& r : records) {
    validate_record(r);
    auto it = by_id.find(r.profile_id);
    if (it == by_id.end())
      throw Error(ErrorCode::validation_failed,
                  "record from rater '" + r.rater_id + "' references unknown profile '" +
                      r.profile_id + "'");
    if (r.predicted_knowledge.size() != it->second->initial_knowledge.size())
      throw Error(ErrorCode::length_mismatch,
                  "record for '" + r.profile_id + "' predicts " +
                      std::to_string(r.predicted_knowledge.size()) + " components, profile has " +
                      std::to_string(it->second->initial_knowledge.size()));
    grouped[r.profile_id].push_back(&r);
  }

  BiasReport report;
  report.records = records.size();
  for (Pipeline pipeline : kReportOrder) {
    PipelineSummary summary;
    summary.pipeline = pipeline;
    std::vector<EvalRecord> pipeline_records;
    std::vector<double> knowledge_means;
    std::vector<double> trait_cells;
    for (const auto& p : profiles) {
      if (p.pipeline != pipeline) continue;
      auto g = grouped.find(p.id);
      if (g == grouped.end()) continue;
      ProfileBias pb;
      pb.profile_id = p.id;
      pb.name = p.name.empty() ? p.id : p.name;
      pb.pipeline = pipeline;
      pb.raters = g->second.size();
      std::vector<double> kb;
      std::array<std::vector<double>, 4> tb;
      std::array<std::vector<double>, 3> bel;
      for (const EvalRecord* r : g->second) {
        kb.push_back(knowledge_bias(p.initial_knowledge, r->predicted_knowledge));
        const auto errors = trait_bias(p.ratings, r->predicted_trait_sums);
        for (std::size_t t = 0; t < 4; ++t) tb[t].push_back(errors[t]);
        for (std::size_t b = 0; b < 3; ++b) bel[b].push_back(r->believability[b]);
        pipeline_records.push_back(*r);
      }
      pb.knowledge = mean_sd(kb);
      for (std::size_t t = 0; t < 4; ++t) {
        pb.trait_mae[t] = mean_sd(tb[t]).mean;
        trait_cells.push_back(pb.trait_mae[t]);
      }
      for (std::size_t b = 0; b < 3; ++b) pb.believability[b] = mean_sd(bel[b]);
      knowledge_means.push_back(pb.knowledge.mean);
      summary.profiles.push_back(std::move(pb));
    }
    if (summary.profiles.empty()) continue;
    summary.knowledge = aggregate(knowledge_means);
    summary.trait = aggregate(trait_cells);
    summary.believability = believability_summary(pipeline_records);
    report.pipelines.push_back(std::move(summary));
  }
  return report;
}

nlohmann::json report_json(const BiasReport& report) {
  nlohmann::json pipelines = nlohmann::json::array();
  for (const auto& s : report.pipelines) {
    nlohmann::json profiles = nlohmann::json::array();
    for (const auto& p : s.profiles) {
      nlohmann::json traits = nlohmann::json::object();
      for (std::size_t t = 0; t < 4; ++t) traits[std::string(trait_key(kTraits[t]))] = p.trait_mae[t];
      profiles.push_back({{"profile_id", p.profile_id},
                          {"name", p.name},
                          {"raters", p.raters},
                          {"knowledge_bias_percent", mean_sd_json(p.knowledge)},
                          {"trait_bias", traits},
                          {"believability",
                           {mean_sd_json(p.believability[0]), mean_sd_json(p.believability[1]),
                            mean_sd_json(p.believability[2])}}});
    }
    nlohmann::json bel = nlohmann::json::array();
    for (std::size_t b = 0; b < 3; ++b) {
      auto m = mean_sd_json(s.believability.statements[b]);
      m["profile_sd"] = s.believability.profile_sd[b];
      bel.push_back(m);
    }
    pipelines.push_back(
        {{"pipeline", to_string(s.pipeline)},
         {"profiles", profiles},
         {"knowledge_bias_percent", aggregate_json(s.knowledge)},
         {"trait_bias", aggregate_json(s.trait)},
         {"believability",
          {{"statements", bel},
           {"pearson_b1_b3", s.believability.pearson_b1_b3
                                 ? nlohmann::json(*s.believability.pearson_b1_b3)
                                 : nlohmann::json(nullptr)},
           {"profiles", s.believability.profiles}}}});
  }
  return {{"schema", kSchemaVersion}, {"records", report.records}, {"pipelines", pipelines}};
}

std::string report_markdown(const BiasReport& report) {
  std::ostringstream out;

  // Column set: every profile name, in first-appearance order across pipelines.
  std::vector<std::string> names;
  for (const auto& s : report.pipelines)
    for (const auto& p : s.profiles)
      if (std::find(names.begin(), names.end(), p.name) == names.end()) names.push_back(p.name);

  out << "## Knowledge bias (%)\n\n| Pipeline |";
  for (const auto& n : names) out << ' ' << n << " |";
  out << " Mean | Median |\n|---|";
  for (std::size_t i = 0; i < names.size(); ++i) out << "---|";
  out << "---|---|\n";
  for (const auto& s : report.pipelines) {
    out << "| " << pipeline_title(s.pipeline) << " |";
    for (const auto& n : names) {
      auto it = std::find_if(s.profiles.begin(), s.profiles.end(),
                             [&](const ProfileBias& p) { return p.name == n; });
      out << ' ' << (it == s.profiles.end() ? std::string("-") : pm(it->knowledge)) << " |";
    }
    out << ' ' << fixed(s.knowledge.mean) << " | " << fixed(s.knowledge.median) << " |\n";
  }

  out << "\n## Trait bias (mean absolute error, 0-12)\n";
  for (const auto& s : report.pipelines) {
    out << "\n### " << pipeline_title(s.pipeline) << "\n\n| Profile |";
    for (Trait t : kTraits) out << ' ' << trait_abbrev(t) << " |";
    out << "\n|---|---|---|---|---|\n";
    for (const auto& p : s.profiles) {
      out << "| " << p.name << " |";
      for (double v : p.trait_mae) out << ' ' << fixed(v) << " |";
      out << '\n';
    }
    out << "\nMean " << fixed(s.trait.mean) << ", median " << fixed(s.trait.median) << ", min "
        << fixed(s.trait.min) << ", max " << fixed(s.trait.max) << " over " << s.trait.n
        << " cells.\n";
  }

  out << "\n## Believability (1-5)\n\n| Pipeline | B1 | B2 | B3 | r(B1, B3) |\n"
      << "|---|---|---|---|---|\n";
  for (const auto& s : report.pipelines) {
    out << "| " << pipeline_title(s.pipeline) << " |";
    for (std::size_t b = 0; b < 3; ++b)
      out << ' ' << fixed(s.believability.statements[b].mean) << " ± "
          << fixed(s.believability.profile_sd[b]) << " |";
    out << ' '
        << (s.believability.pearson_b1_b3 ? fixed(*s.believability.pearson_b1_b3, 2)
                                          : std::string("-"))
        << " |\n";
  }
  return out.str();
}

RecordCorpus load_record_corpus(const std::string& directory) {
  namespace fs = std::filesystem;
  const fs::path dir(directory);
  if (!fs::is_directory(dir)) throw Error(ErrorCode::io_error, "not a directory: " + directory);

  RecordCorpus corpus;
  const auto pj = read_json_file(dir / "profiles.json");
  const auto& plist = list_member(pj, "profiles", dir / "profiles.json");
  for (const auto& p : plist) corpus.profiles.push_back(decode<StudentProfile>(p));

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    if (entry.path().filename() == "profiles.json") continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const auto j = read_json_file(f);
    const auto& list = list_member(j, "records", f);
    for (const auto& r : list) corpus.records.push_back(decode<EvalRecord>(r));
  }
  return corpus;
}

}  // namespace tutorsim
