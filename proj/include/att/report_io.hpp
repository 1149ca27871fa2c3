#pragma once

// Report serialization: one JSON object per line per iteration. The distances
// vector is included only when trace output was requested; diagnostics that
// need traces reject reports written without them.

#include <filesystem>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "att/diagnostics.hpp"
#include "att/distill.hpp"
#include "att/errors.hpp"
#include "att/eval.hpp"

namespace att {

inline nlohmann::json record_to_json(const IterationRecord& rec, bool trace_distances) {
  nlohmann::json j{{"iter", rec.iter},
                   {"expert_index", rec.expert_index},
                   {"start_epoch", rec.start_epoch},
                   {"selected_t", rec.selected_t},
                   {"loss", rec.loss},
                   {"lr_student_after", rec.lr_student_after},
                   {"diverged", rec.diverged},
                   {"skipped", rec.skipped}};
  if (trace_distances) j["distances"] = rec.distances;
  return j;
}

inline IterationRecord record_from_json(const nlohmann::json& j) {
  IterationRecord rec;
  rec.iter = j.at("iter").get<std::size_t>();
  rec.expert_index = j.at("expert_index").get<std::size_t>();
  rec.start_epoch = j.at("start_epoch").get<std::size_t>();
  rec.selected_t = j.at("selected_t").get<std::size_t>();
  rec.loss = j.at("loss").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                    : j.at("loss").get<double>();
  rec.lr_student_after = j.at("lr_student_after").is_null()
                             ? std::numeric_limits<double>::quiet_NaN()
                             : j.at("lr_student_after").get<double>();
  rec.diverged = j.at("diverged").get<bool>();
  rec.skipped = j.at("skipped").get<bool>();
  if (j.contains("distances")) rec.distances = j.at("distances").get<std::vector<double>>();
  return rec;
}

// Streaming JSONL writer usable as a distill report sink.
class ReportWriter {
 public:
  ReportWriter(const std::filesystem::path& path, bool trace_distances)
      : out_(path), trace_(trace_distances) {
    if (!out_) throw IoError("cannot open for write: " + path.string());
  }

  void operator()(const IterationRecord& rec) {
    out_ << record_to_json(rec, trace_).dump() << '\n';
    if (!out_) throw IoError("report write failed");
  }

 private:
  std::ofstream out_;
  bool trace_;
};

inline std::vector<IterationRecord> load_report_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<IterationRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": invalid JSON");
    }
    records.push_back(record_from_json(j));
  }
  return records;
}

inline void write_eval_csv(const EvalResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for write: " + path.string());
  out.precision(17);
  out << "arch,seed,accuracy\n";
  for (const auto& ae : result.per_arch) {
    for (std::size_t s = 0; s < ae.per_seed_acc.size(); ++s) {
      out << arch_name(ae.arch) << "," << s << "," << ae.per_seed_acc[s] << "\n";
    }
  }
  for (const auto& ae : result.per_arch) {
    out << arch_name(ae.arch) << ",mean," << ae.mean_acc << "\n";
    out << arch_name(ae.arch) << ",std," << ae.std_acc << "\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

inline void write_amp_csv(const AmpHistogram& hist, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for write: " + path.string());
  out << "interval_index,count,gamma,N_S\n";
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    out << i << "," << hist.counts[i] << "," << hist.gamma << "," << hist.n_s << "\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

inline void write_nopt_csv(const NoptTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for write: " + path.string());
  out << "iter,selected_t\n";
  for (const auto& [iter, t] : trace.points) out << iter << "," << t << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

inline void write_stability_csv(const StabilitySweepResult& result,
                                const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for write: " + path.string());
  out << "parameter,multiplier,successes,repeats\n";
  out.precision(17);
  for (std::size_t i = 0; i < result.multipliers.size(); ++i) {
    out << to_string(result.parameter) << "," << result.multipliers[i] << ","
        << result.successes[i] << "," << result.repeats << "\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace att
