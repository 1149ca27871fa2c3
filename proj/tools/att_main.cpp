// att: train expert trajectory buffers on a real dataset, distill a tiny
// synthetic dataset by trajectory matching with an adaptive matching step,
// evaluate the result on fresh networks, and emit diagnostics.
//
// Exit codes: 0 success, 2 config error, 3 divergence, 4 I/O error.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "att/att.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitIo = 4;

struct GlobalOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::size_t jobs = 0;  // 0 = hardware concurrency
};

fs::path data_dir() {
  if (const char* env = std::getenv("ATT_DATA_DIR")) return fs::path(env);
  return fs::path("att-data");
}

struct Session {
  att::RunConfig config;
  fs::path dir;

  explicit Session(const GlobalOpts& opts) : config(att::load_run_config(opts.config_path)) {
    if (opts.seed_override) config.match.seed = *opts.seed_override;
    dir = att::run_dir(data_dir(), config);
    fs::create_directories(dir);
  }

  fs::path buffer_path() const { return att::resolve_path(dir, config.paths.buffer); }
  fs::path synth_path() const { return att::resolve_path(dir, config.paths.synth_out); }
  fs::path report_path() const { return att::resolve_path(dir, config.paths.report_out); }
};

att::TrajectoryBuffer build_buffer(const Session& session, const att::PreparedData& data,
                                   std::size_t jobs) {
  const auto& cfg = session.config;
  att::TrajectoryBuffer buffer;
  buffer.dataset_fingerprint = data.train_fingerprint;
  buffer.experts.resize(cfg.expert.count);
  att::parallel_for(cfg.expert.count, jobs, [&](std::size_t i) {
    const std::uint64_t expert_seed =
        att::derive_seed(cfg.match.seed, att::seed_tag::kExpert, i);
    buffer.experts[i] = att::train_expert(data.arch, data.split.train, cfg.expert.epochs,
                                          cfg.expert.meta, expert_seed);
  });
  return buffer;
}

att::TrajectoryBuffer load_matching_buffer(const Session& session,
                                           const att::PreparedData& data) {
  const fs::path path = session.buffer_path();
  if (!fs::exists(path)) {
    throw att::IoError("buffer not found: " + path.string() + " (run `att buffer` first)");
  }
  att::TrajectoryBuffer buffer = att::load_buffer(path);
  if (buffer.dataset_fingerprint != data.train_fingerprint) {
    throw att::ConfigError("dataset", "buffer was built from a different dataset");
  }
  if (!(buffer.arch() == data.arch)) {
    throw att::ConfigError("arch", "buffer architecture does not match config");
  }
  if (buffer.epochs() < session.config.match.max_start_epoch + session.config.match.n_t) {
    throw att::ConfigError("expert_epochs", "buffer too short for max_start_epoch + N_T");
  }
  return buffer;
}

int cmd_buffer(const GlobalOpts& opts) {
  Session session(opts);
  const att::PreparedData data = att::prepare_data(session.config);
  const att::TrajectoryBuffer buffer = build_buffer(session, data, opts.jobs);
  const auto bytes = att::serialize_buffer(buffer);
  att::binio::write_file(session.buffer_path(), bytes);
  std::cout << "buffer: " << session.buffer_path().string() << "\n"
            << "  experts: " << buffer.experts.size() << "\n"
            << "  epochs (M): " << buffer.epochs() << "\n"
            << "  arch: " << att::arch_name(buffer.arch()) << "\n"
            << "  bytes: " << bytes.size() << "\n";
  return kExitOk;
}

int cmd_distill(const GlobalOpts& opts, const std::string& mode_override, bool trace_distances) {
  Session session(opts);
  att::RunConfig& cfg = session.config;
  if (mode_override == "att") cfg.match.mode = att::MatchMode::Att;
  if (mode_override == "ftl") cfg.match.mode = att::MatchMode::Ftl;

  const att::PreparedData data = att::prepare_data(cfg);
  const att::TrajectoryBuffer buffer = load_matching_buffer(session, data);

  att::SyntheticDataset synth =
      att::init_synth(cfg.match.ipc, data.arch.num_classes, data.arch.input_dim, cfg.init_mode,
                      data.split.train, cfg.match.lr_init, cfg.match.seed);

  att::ReportWriter writer(session.report_path(), trace_distances);
  const att::DistillReport report =
      att::distill(cfg.match, buffer, std::move(synth), std::ref(writer));
  att::save_synth(report.final_synth, data.train_fingerprint, session.synth_path());

  std::size_t t0_preferred = 0;
  for (const auto& rec : report.records) {
    if (rec.distances.empty()) continue;
    double best = rec.distances[1];
    for (std::size_t t = 2; t < rec.distances.size(); ++t) best = std::min(best, rec.distances[t]);
    if (rec.distances[0] < best) ++t0_preferred;
  }

  std::cout << "distill: " << report.records.size() << " iterations, mode "
            << (cfg.match.mode == att::MatchMode::Att ? "att" : "ftl") << "\n"
            << "  report: " << session.report_path().string() << "\n"
            << "  synth: " << session.synth_path().string() << "\n"
            << "  lr_student: " << report.final_synth.lr_student << "\n"
            << "  iterations preferring t=0: " << t0_preferred << "\n";
  if (att::report_diverged(report)) {
    std::cerr << "distill: run diverged at iteration " << report.records.back().iter << "\n";
    return kExitDiverged;
  }
  return kExitOk;
}

int cmd_eval(const GlobalOpts& opts, bool baseline, const std::string& out_csv) {
  Session session(opts);
  const att::RunConfig& cfg = session.config;
  const att::PreparedData data = att::prepare_data(cfg);

  att::SyntheticDataset synth;
  if (baseline) {
    synth = att::random_subset_baseline(data.split.train, cfg.match.ipc,
                                        att::derive_seed(cfg.match.seed, att::seed_tag::kEval),
                                        cfg.match.lr_init);
  } else {
    const att::LoadedSynth loaded = att::load_synth(session.synth_path());
    if (loaded.fingerprint != data.train_fingerprint) {
      throw att::ConfigError("dataset", "synth file was distilled from a different dataset");
    }
    if (loaded.synth.features.cols != data.arch.input_dim ||
        loaded.synth.num_classes() != data.arch.num_classes) {
      throw att::ConfigError("arch", "synth file shape does not match config architecture");
    }
    synth = loaded.synth;
  }

  att::EvalConfig eval_cfg;
  eval_cfg.archs = data.eval_archs;
  eval_cfg.n_seeds = cfg.eval.n_seeds;
  eval_cfg.train_steps = cfg.eval.train_steps;
  eval_cfg.use_learned_lr = cfg.eval.use_learned_lr;
  eval_cfg.lr_override = cfg.eval.lr_override;
  eval_cfg.test_set = data.split.test;
  eval_cfg.seed = cfg.match.seed;

  const att::EvalResult result = att::evaluate(synth, eval_cfg, opts.jobs);
  const fs::path csv = out_csv.empty()
                           ? session.dir / (baseline ? "eval-baseline.csv" : "eval.csv")
                           : fs::path(out_csv);
  att::write_eval_csv(result, csv);
  for (const auto& ae : result.per_arch) {
    std::cout << att::arch_name(ae.arch) << ": mean " << ae.mean_acc << " std " << ae.std_acc
              << "\n";
  }
  std::cout << "eval csv: " << csv.string() << "\n";
  return kExitOk;
}

int cmd_diagnose(const GlobalOpts& opts, const std::string& which, long gamma_flag,
                 const std::string& parameter, const std::vector<double>& multipliers,
                 std::size_t repeats, bool emit_svg) {
  Session session(opts);
  const att::RunConfig& cfg = session.config;

  if (which == "amp" || which == "trace") {
    att::DistillReport report;
    report.config = cfg.match;
    report.records = att::load_report_records(session.report_path());

    if (which == "amp") {
      const long gamma = gamma_flag >= 0 ? gamma_flag : cfg.match.gamma;
      const att::AmpHistogram hist = att::amp_histogram(report, gamma);
      const fs::path csv = session.dir / "amp.csv";
      att::write_amp_csv(hist, csv);
      std::cout << "amp histogram (gamma=" << gamma << ", N_S=" << hist.n_s << "): ";
      for (std::size_t c : hist.counts) std::cout << c << " ";
      std::cout << "\n  csv: " << csv.string() << "\n";
      if (emit_svg) {
        std::vector<double> values(hist.counts.begin(), hist.counts.end());
        att::svg::bar_chart(values, "mismatched iterations per interval",
                            session.dir / "amp.svg");
      }
      return kExitOk;
    }

    const att::NoptTrace trace = att::nopt_trace(report);
    const fs::path csv = session.dir / "nopt-trace.csv";
    att::write_nopt_csv(trace, csv);
    std::cout << "selected-step trace: " << trace.points.size() << " points, early mean "
              << trace.early_mean << ", late mean " << trace.late_mean << "\n"
              << "  csv: " << csv.string() << "\n";
    if (emit_svg) {
      std::vector<std::pair<double, double>> pts;
      pts.reserve(trace.points.size());
      for (const auto& [i, t] : trace.points) {
        pts.emplace_back(static_cast<double>(i), static_cast<double>(t));
      }
      att::svg::line_chart(pts, "selected matching step", session.dir / "nopt-trace.svg");
    }
    return kExitOk;
  }

  // stability: full sweep of fresh distillation runs
  const att::PreparedData data = att::prepare_data(cfg);
  const att::TrajectoryBuffer buffer = load_matching_buffer(session, data);
  const att::SweepParameter param =
      parameter == "lr_sc" ? att::SweepParameter::LrSc : att::SweepParameter::LrImg;
  const att::StabilitySweepResult result =
      att::stability_sweep(cfg.match, buffer, data.split.train, cfg.init_mode, param, multipliers,
                           repeats, opts.jobs);
  const fs::path csv = session.dir / "stability.csv";
  att::write_stability_csv(result, csv);
  for (std::size_t i = 0; i < result.multipliers.size(); ++i) {
    std::cout << att::to_string(param) << " x" << result.multipliers[i] << ": "
              << result.successes[i] << "/" << result.repeats << " successful\n";
  }
  std::cout << "stability csv: " << csv.string() << "\n";
  if (emit_svg) {
    std::vector<double> values(result.successes.begin(), result.successes.end());
    att::svg::bar_chart(values, "successful runs per multiplier", session.dir / "stability.svg");
  }
  return kExitOk;
}

int cmd_dataset(const GlobalOpts& opts, const std::string& out_csv) {
  Session session(opts);
  const att::PreparedData data = att::prepare_data(session.config);
  const fs::path train_csv = out_csv.empty() ? session.dir / "train.csv" : fs::path(out_csv);
  att::write_csv(data.split.train, train_csv);
  std::vector<std::size_t> counts(data.split.num_classes, 0);
  for (int l : data.split.train.labels) ++counts[static_cast<std::size_t>(l)];
  std::cout << "dataset " << session.config.dataset.name << ": train "
            << data.split.train.size() << ", test " << data.split.test.size() << "\n";
  for (std::size_t c = 0; c < counts.size(); ++c) {
    std::cout << "  class " << c << ": " << counts[c] << " train samples\n";
  }
  std::cout << "train csv: " << train_csv.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trajectory-matching dataset distillation"};
  app.require_subcommand(1);

  GlobalOpts opts;
  std::uint64_t seed_value = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opts.config_path, "run config file")->required();
    cmd->add_option("--seed", seed_value, "override the config seed")
        ->each([&](const std::string&) { opts.seed_override = seed_value; });
    cmd->add_option("--jobs", opts.jobs, "worker thread cap (0 = all cores)");
  };

  auto* buffer_cmd = app.add_subcommand("buffer", "train and save the expert trajectory buffer");
  add_common(buffer_cmd);

  auto* distill_cmd = app.add_subcommand("distill", "run the distillation loop");
  add_common(distill_cmd);
  std::string mode_override;
  distill_cmd->add_option("--mode", mode_override, "att|ftl (overrides config)")
      ->check(CLI::IsMember({"att", "ftl"}));
  bool trace_distances = false;
  distill_cmd->add_flag("--trace-distances", trace_distances,
                        "include full distance traces in the report");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a synthetic dataset");
  add_common(eval_cmd);
  bool baseline = false;
  eval_cmd->add_flag("--baseline", baseline, "evaluate a random real subset instead of the synth");
  std::string eval_csv;
  eval_cmd->add_option("--out", eval_csv, "output CSV path");

  auto* diag_cmd = app.add_subcommand("diagnose", "diagnostics from reports or fresh sweeps");
  add_common(diag_cmd);
  std::string which = "amp";
  diag_cmd->add_option("--which", which, "amp|trace|stability")
      ->check(CLI::IsMember({"amp", "trace", "stability"}));
  long gamma_flag = -1;
  diag_cmd->add_option("--gamma", gamma_flag, "mismatch tolerance (default: config gamma)");
  std::string parameter = "lr_img";
  diag_cmd->add_option("--parameter", parameter, "lr_img|lr_sc (stability)")
      ->check(CLI::IsMember({"lr_img", "lr_sc"}));
  std::vector<double> multipliers{0.5, 1.0, 2.0, 5.0};
  diag_cmd->add_option("--multipliers", multipliers, "stability multipliers");
  std::size_t repeats = 20;
  diag_cmd->add_option("--repeats", repeats, "stability repeats per multiplier");
  bool emit_svg = false;
  diag_cmd->add_flag("--svg", emit_svg, "also emit SVG plots");

  auto* dataset_cmd = app.add_subcommand("dataset", "load a dataset and export it as CSV");
  add_common(dataset_cmd);
  std::string dataset_csv;
  dataset_cmd->add_option("--out", dataset_csv, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (buffer_cmd->parsed()) return cmd_buffer(opts);
    if (distill_cmd->parsed()) return cmd_distill(opts, mode_override, trace_distances);
    if (eval_cmd->parsed()) return cmd_eval(opts, baseline, eval_csv);
    if (diag_cmd->parsed()) {
      return cmd_diagnose(opts, which, gamma_flag, parameter, multipliers, repeats, emit_svg);
    }
    if (dataset_cmd->parsed()) return cmd_dataset(opts, dataset_csv);
  } catch (const att::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const att::DivergedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const att::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const att::DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const att::LabelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const att::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
