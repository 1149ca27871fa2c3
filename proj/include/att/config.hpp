#pragma once

// Run configuration: a flat key = value text format whose hyperparameter keys
// (N_S, N_T, max_start_epoch, lr_img, lr_sc, lr, zca) match the vocabulary the
// shipped example configs are written in. Parsing is strict: unknown keys,
// bad values, and cross-field inconsistencies are all rejected with the
// offending field path before any work starts.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "att/arch.hpp"
#include "att/dataset.hpp"
#include "att/distill.hpp"
#include "att/errors.hpp"
#include "att/hash.hpp"
#include "att/idx.hpp"
#include "att/synth.hpp"
#include "att/trajectory.hpp"
#include "att/zca.hpp"

namespace att {

struct ExpertSettings {
  std::size_t count = 20;
  std::size_t epochs = 10;  // M
  TrainMeta meta;
};

struct EvalSettings {
  std::vector<std::string> archs;  // "linear" / "mlp1h"; empty = distill arch
  std::size_t n_seeds = 5;
  std::size_t train_steps = 200;
  bool use_learned_lr = true;
  double lr_override = 0.01;
};

struct PathsConfig {
  std::string buffer = "buffer.attb";
  std::string synth_out = "synth.atts";
  std::string report_out = "report.jsonl";
};

struct RunConfig {
  DatasetSpec dataset;
  ArchKind arch_kind = ArchKind::Linear;
  std::size_t hidden_dim = 16;
  ExpertSettings expert;
  MatchConfig match;
  SynthInit init_mode = SynthInit::Noise;
  EvalSettings eval;
  PathsConfig paths;
  std::string config_hash;  // hex, from the raw config text
};

namespace detail {

class KvParser {
 public:
  explicit KvParser(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash_pos = line.find('#');
      if (hash_pos != std::string::npos) line.erase(hash_pos);
      const auto trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("line " + std::to_string(line_no), "expected key = value");
      }
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) throw ConfigError("line " + std::to_string(line_no), "empty key");
      if (!entries_.emplace(key, value).second) {
        throw ConfigError(key, "duplicate key");
      }
    }
  }

  std::optional<std::string> raw(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    consumed_.insert(key);
    return it->second;
  }

  std::string str(const std::string& key, const std::string& fallback) {
    return raw(key).value_or(fallback);
  }

  double real(const std::string& key, double fallback) {
    const auto v = raw(key);
    if (!v) return fallback;
    try {
      std::size_t pos = 0;
      const double out = std::stod(*v, &pos);
      if (pos != v->size()) throw std::invalid_argument("trailing");
      return out;
    } catch (const std::exception&) {
      throw ConfigError(key, "expected a real number, got '" + *v + "'");
    }
  }

  long long integer(const std::string& key, long long fallback) {
    const auto v = raw(key);
    if (!v) return fallback;
    try {
      std::size_t pos = 0;
      const long long out = std::stoll(*v, &pos);
      if (pos != v->size()) throw std::invalid_argument("trailing");
      return out;
    } catch (const std::exception&) {
      throw ConfigError(key, "expected an integer, got '" + *v + "'");
    }
  }

  std::uint64_t uinteger(const std::string& key, std::uint64_t fallback) {
    const long long v = integer(key, static_cast<long long>(fallback));
    if (v < 0) throw ConfigError(key, "must be non-negative");
    return static_cast<std::uint64_t>(v);
  }

  bool flag(const std::string& key, bool fallback) {
    const auto v = raw(key);
    if (!v) return fallback;
    if (*v == "yes" || *v == "true" || *v == "1") return true;
    if (*v == "no" || *v == "false" || *v == "0") return false;
    throw ConfigError(key, "expected yes/no, got '" + *v + "'");
  }

  void reject_unknown() const {
    for (const auto& [key, value] : entries_) {
      if (!consumed_.contains(key)) throw ConfigError(key, "unknown key");
    }
  }

 private:
  static std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
  }

  std::map<std::string, std::string> entries_;
  std::set<std::string> consumed_;
};

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace detail

inline RunConfig parse_run_config(const std::string& text) {
  detail::KvParser kv(text);
  RunConfig cfg;

  cfg.dataset.name = kv.str("dataset", "");
  if (cfg.dataset.name != "blobs3" && cfg.dataset.name != "moons2" &&
      cfg.dataset.name != "digits8x8" && cfg.dataset.name != "idx") {
    throw ConfigError("dataset", "expected blobs3|moons2|digits8x8|idx, got '" +
                                     cfg.dataset.name + "'");
  }
  cfg.dataset.idx_images = kv.str("idx_images", "");
  cfg.dataset.idx_labels = kv.str("idx_labels", "");
  if (cfg.dataset.name == "idx" && (cfg.dataset.idx_images.empty() || cfg.dataset.idx_labels.empty())) {
    throw ConfigError("idx_images", "idx dataset needs idx_images and idx_labels");
  }
  cfg.dataset.split_seed = kv.uinteger("split_seed", 0);
  cfg.dataset.train_fraction = kv.real("train_fraction", 0.8);
  if (!(cfg.dataset.train_fraction > 0.0 && cfg.dataset.train_fraction < 1.0)) {
    throw ConfigError("train_fraction", "must be in (0, 1)");
  }
  const std::string norm = kv.str("normalization", "none");
  if (norm == "none") {
    cfg.dataset.normalization = Normalization::None;
  } else if (norm == "standardize") {
    cfg.dataset.normalization = Normalization::Standardize;
  } else {
    throw ConfigError("normalization", "expected none|standardize");
  }
  cfg.dataset.zca = kv.flag("zca", false);
  cfg.dataset.zca_epsilon = kv.real("zca_epsilon", 1e-6);
  if (cfg.dataset.zca_epsilon <= 0.0) throw ConfigError("zca_epsilon", "must be positive");

  const std::string arch = kv.str("arch", "linear");
  if (arch == "linear") {
    cfg.arch_kind = ArchKind::Linear;
  } else if (arch == "mlp1h") {
    cfg.arch_kind = ArchKind::Mlp1H;
  } else {
    throw ConfigError("arch", "expected linear|mlp1h");
  }
  cfg.hidden_dim = static_cast<std::size_t>(kv.uinteger("hidden_dim", 16));
  if (cfg.arch_kind == ArchKind::Mlp1H && cfg.hidden_dim < 1) {
    throw ConfigError("hidden_dim", "must be >= 1");
  }

  cfg.expert.count = static_cast<std::size_t>(kv.uinteger("experts", 20));
  if (cfg.expert.count < 1) throw ConfigError("experts", "must be >= 1");
  cfg.expert.epochs = static_cast<std::size_t>(kv.uinteger("expert_epochs", 10));
  cfg.expert.meta.step_size = kv.real("expert_lr", 0.05);
  if (cfg.expert.meta.step_size <= 0.0) throw ConfigError("expert_lr", "must be positive");
  cfg.expert.meta.batch_size = static_cast<std::uint32_t>(kv.uinteger("expert_batch", 64));
  if (cfg.expert.meta.batch_size < 1) throw ConfigError("expert_batch", "must be >= 1");

  const std::string mode = kv.str("mode", "att");
  if (mode == "att") {
    cfg.match.mode = MatchMode::Att;
  } else if (mode == "ftl") {
    cfg.match.mode = MatchMode::Ftl;
  } else {
    throw ConfigError("mode", "expected att|ftl");
  }
  cfg.match.n_s = static_cast<std::size_t>(kv.uinteger("N_S", 1));
  if (cfg.match.n_s < 1) throw ConfigError("N_S", "must be >= 1");
  cfg.match.n_t = static_cast<std::size_t>(kv.uinteger("N_T", 1));
  if (cfg.match.n_t < 1) throw ConfigError("N_T", "must be >= 1");
  cfg.match.max_start_epoch = static_cast<std::size_t>(kv.uinteger("max_start_epoch", 0));
  cfg.match.lr_img = kv.real("lr_img", 0.1);
  if (cfg.match.lr_img <= 0.0) throw ConfigError("lr_img", "must be positive");
  cfg.match.lr_sc = kv.real("lr_sc", 1e-4);
  if (cfg.match.lr_sc <= 0.0) throw ConfigError("lr_sc", "must be positive");
  cfg.match.lr_init = kv.real("lr", 0.01);
  if (cfg.match.lr_init <= 0.0) throw ConfigError("lr", "must be positive");
  cfg.match.iterations = static_cast<std::size_t>(kv.uinteger("iterations", 500));
  cfg.match.gamma = static_cast<long>(kv.integer("gamma", 2));
  if (cfg.match.gamma < 0) throw ConfigError("gamma", "must be >= 0");
  cfg.match.ipc = static_cast<std::size_t>(kv.uinteger("ipc", 1));
  if (cfg.match.ipc < 1) throw ConfigError("ipc", "must be >= 1");
  cfg.match.zca = cfg.dataset.zca;
  cfg.match.seed = kv.uinteger("seed", 0);

  const std::string init = kv.str("init", "noise");
  if (init == "noise") {
    cfg.init_mode = SynthInit::Noise;
  } else if (init == "real-sample") {
    cfg.init_mode = SynthInit::RealSample;
  } else {
    throw ConfigError("init", "expected noise|real-sample");
  }

  cfg.eval.archs = detail::split_list(kv.str("eval_archs", ""));
  for (const auto& a : cfg.eval.archs) {
    if (a != "linear" && a != "mlp1h") throw ConfigError("eval_archs", "expected linear|mlp1h");
  }
  cfg.eval.n_seeds = static_cast<std::size_t>(kv.uinteger("eval_seeds", 5));
  if (cfg.eval.n_seeds < 1) throw ConfigError("eval_seeds", "must be >= 1");
  cfg.eval.train_steps = static_cast<std::size_t>(kv.uinteger("eval_steps", 200));
  if (cfg.eval.train_steps < 1) throw ConfigError("eval_steps", "must be >= 1");
  cfg.eval.use_learned_lr = kv.flag("eval_use_learned_lr", true);
  cfg.eval.lr_override = kv.real("eval_lr", 0.01);
  if (cfg.eval.lr_override <= 0.0) throw ConfigError("eval_lr", "must be positive");

  cfg.paths.buffer = kv.str("buffer_path", "buffer.attb");
  cfg.paths.synth_out = kv.str("synth_path", "synth.atts");
  cfg.paths.report_out = kv.str("report_path", "report.jsonl");

  kv.reject_unknown();

  if (cfg.expert.epochs < cfg.match.max_start_epoch + cfg.match.n_t) {
    throw ConfigError("expert_epochs",
                      "must be >= max_start_epoch + N_T (" +
                          std::to_string(cfg.match.max_start_epoch + cfg.match.n_t) + ")");
  }

  Fingerprint256 fp;
  fp.update(text.data(), text.size());
  const Fingerprint digest = fp.digest();
  cfg.config_hash = hex_string(std::span(digest).first(8));
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

// Dataset, transforms, and resolved architectures for one run.
struct PreparedData {
  DatasetSplit split;
  Architecture arch;
  std::vector<Architecture> eval_archs;
  Fingerprint train_fingerprint{};
  std::optional<ZcaTransform> zca;
};

inline PreparedData prepare_data(const RunConfig& cfg) {
  LabeledBatch full;
  if (cfg.dataset.name == "blobs3") {
    full = toy::blobs3();
  } else if (cfg.dataset.name == "moons2") {
    full = toy::moons2();
  } else if (cfg.dataset.name == "digits8x8") {
    full = toy::digits8x8();
  } else {
    full = load_idx(cfg.dataset.idx_images, cfg.dataset.idx_labels);
  }

  PreparedData out;
  out.split = split_dataset(full, cfg.dataset.train_fraction, cfg.dataset.split_seed);
  if (cfg.dataset.normalization == Normalization::Standardize) standardize(out.split);
  if (cfg.dataset.zca) {
    out.zca = zca_fit(out.split.train.features, cfg.dataset.zca_epsilon);
    out.split.train.features = zca_apply(*out.zca, out.split.train.features);
    out.split.test.features = zca_apply(*out.zca, out.split.test.features);
  }
  out.train_fingerprint = dataset_fingerprint(out.split.train);

  const std::size_t input_dim = out.split.train.features.cols;
  const std::size_t num_classes = out.split.num_classes;
  auto resolve = [&](ArchKind kind) {
    return kind == ArchKind::Linear ? make_linear(input_dim, num_classes)
                                    : make_mlp1h(input_dim, cfg.hidden_dim, num_classes);
  };
  out.arch = resolve(cfg.arch_kind);
  validate_arch(out.arch);
  if (cfg.eval.archs.empty()) {
    out.eval_archs.push_back(out.arch);
  } else {
    for (const auto& name : cfg.eval.archs) {
      out.eval_archs.push_back(resolve(name == "linear" ? ArchKind::Linear : ArchKind::Mlp1H));
    }
  }

  const std::size_t min_per_class = [&] {
    std::vector<std::size_t> counts(num_classes, 0);
    for (int l : out.split.train.labels) ++counts[static_cast<std::size_t>(l)];
    std::size_t lo = counts[0];
    for (std::size_t c : counts) lo = std::min(lo, c);
    return lo;
  }();
  if (cfg.init_mode == SynthInit::RealSample && min_per_class < cfg.match.ipc) {
    throw ConfigError("ipc", "real-sample init needs >= ipc training samples per class (have " +
                                 std::to_string(min_per_class) + ")");
  }
  return out;
}

// Outputs live under <data_dir>/<config-hash>-s<seed>/. Relative paths in the
// config resolve against that run directory; absolute paths are used as-is.
inline std::filesystem::path run_dir(const std::filesystem::path& data_dir,
                                     const RunConfig& cfg) {
  return data_dir / (cfg.config_hash + "-s" + std::to_string(cfg.match.seed));
}

inline std::filesystem::path resolve_path(const std::filesystem::path& dir,
                                          const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : dir / path;
}

}  // namespace att
