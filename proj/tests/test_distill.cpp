#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"

using namespace att;
using att::testing::blobs_fixture;
using att::testing::blobs_initial_synth;
using att::testing::constructed_negative_lr_instance;

TEST_CASE("select_step: adaptive argmin over t >= 1, fixed mode takes n_s") {
  REQUIRE(select_step({5, 4, 3, 2, 1}, MatchMode::Att, 4) == 4);
  REQUIRE(select_step({0.1, 9, 9, 9}, MatchMode::Att, 3) == 1);  // t=0 excluded
  REQUIRE(select_step({5, 2, 2, 7}, MatchMode::Att, 3) == 1);    // tie -> smallest t
  REQUIRE(select_step({5, 4, 3, 2, 1}, MatchMode::Ftl, 4) == 4);
  REQUIRE(select_step({0.5, 0.1, 9}, MatchMode::Ftl, 2) == 2);
  REQUIRE_THROWS_AS(select_step({1, 2}, MatchMode::Att, 4), DimensionError);
}

TEST_CASE("select_step is invariant to positive rescaling") {
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n_s = 1 + rng.below(10);
    std::vector<double> distances(n_s + 1);
    for (double& d : distances) {
      d = rng.below(2) ? rng.uniform(0.0, 5.0) : static_cast<double>(rng.below(4));
    }
    const double scale = rng.uniform(0.1, 10.0);
    std::vector<double> scaled = distances;
    for (double& d : scaled) d *= scale;
    REQUIRE(select_step(distances, MatchMode::Att, n_s) ==
            select_step(scaled, MatchMode::Att, n_s));
  }
}

TEST_CASE("init_synth: real-sample rows come from the right class") {
  const auto& f = blobs_fixture();
  const SyntheticDataset synth =
      init_synth(1, 3, 2, SynthInit::RealSample, f.split.train, 0.02, 5);
  REQUIRE(synth.labels == std::vector<int>{0, 1, 2});
  for (std::size_t r = 0; r < 3; ++r) {
    bool found = false;
    for (std::size_t i = 0; i < f.split.train.size(); ++i) {
      if (f.split.train.labels[i] != synth.labels[r]) continue;
      bool equal = true;
      for (std::size_t d = 0; d < 2; ++d) {
        equal &= f.split.train.features(i, d) == synth.features(r, d);
      }
      if (equal) {
        found = true;
        break;
      }
    }
    REQUIRE(found);
  }
}

TEST_CASE("init_synth: noise mode is seeded and balanced") {
  const auto& f = blobs_fixture();
  const SyntheticDataset a = init_synth(2, 3, 2, SynthInit::Noise, f.split.train, 0.02, 9);
  const SyntheticDataset b = init_synth(2, 3, 2, SynthInit::Noise, f.split.train, 0.02, 9);
  REQUIRE(a == b);
  REQUIRE(a.labels == std::vector<int>{0, 0, 1, 1, 2, 2});
  REQUIRE(a.lr_student == 0.02);
  const SyntheticDataset c = init_synth(2, 3, 2, SynthInit::Noise, f.split.train, 0.02, 10);
  REQUIRE(a.features != c.features);
}

TEST_CASE("init_synth rejects short classes in real-sample mode") {
  LabeledBatch tiny;
  tiny.features = Matrix(3, 2);
  tiny.labels = {0, 0, 1};
  REQUIRE_THROWS_AS(init_synth(2, 2, 2, SynthInit::RealSample, tiny, 0.1, 1),
                    InsufficientSamplesError);
}

TEST_CASE("distill: zero iterations returns the initialization") {
  const auto& f = blobs_fixture();
  MatchConfig config = f.match;
  config.iterations = 0;
  const SyntheticDataset synth = blobs_initial_synth(1);
  const DistillReport report = distill(config, f.buffer, synth);
  REQUIRE(report.records.empty());
  REQUIRE(report.final_synth == synth);
}

TEST_CASE("distill: adaptive selection dominates the fixed step every iteration") {
  const auto& f = blobs_fixture();
  MatchConfig config = f.match;
  config.iterations = 60;
  const DistillReport report = distill(config, f.buffer, blobs_initial_synth(config.seed));
  REQUIRE(report.records.size() == 60);
  for (const auto& rec : report.records) {
    REQUIRE_FALSE(rec.skipped);
    REQUIRE(rec.distances.size() == config.n_s + 1);
    REQUIRE(rec.selected_t >= 1);
    REQUIRE(rec.selected_t <= config.n_s);
    for (std::size_t t = 1; t <= config.n_s; ++t) {
      REQUIRE(rec.distances[rec.selected_t] <= rec.distances[t]);
    }
  }
}

TEST_CASE("distill is bitwise deterministic per mode and seed") {
  const auto& f = blobs_fixture();
  MatchConfig config = f.match;
  config.iterations = 40;
  for (MatchMode mode : {MatchMode::Att, MatchMode::Ftl}) {
    config.mode = mode;
    const DistillReport a = distill(config, f.buffer, blobs_initial_synth(config.seed));
    const DistillReport b = distill(config, f.buffer, blobs_initial_synth(config.seed));
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      REQUIRE(a.records[i].selected_t == b.records[i].selected_t);
      REQUIRE(a.records[i].loss == b.records[i].loss);
      REQUIRE(a.records[i].lr_student_after == b.records[i].lr_student_after);
      REQUIRE(a.records[i].distances == b.records[i].distances);
    }
    REQUIRE(a.final_synth == b.final_synth);
  }
}

TEST_CASE("distill: fixed mode always matches at n_s, adaptive may not") {
  const auto& f = blobs_fixture();
  MatchConfig config = f.match;
  config.iterations = 50;
  config.mode = MatchMode::Ftl;
  const DistillReport ftl = distill(config, f.buffer, blobs_initial_synth(config.seed));
  for (const auto& rec : ftl.records) REQUIRE(rec.selected_t == config.n_s);

  config.mode = MatchMode::Att;
  const DistillReport adaptive = distill(config, f.buffer, blobs_initial_synth(config.seed));
  bool any_shorter = false;
  for (const auto& rec : adaptive.records) any_shorter |= rec.selected_t < config.n_s;
  REQUIRE(any_shorter);
}

TEST_CASE("distill emits every record through the sink in order") {
  const auto& f = blobs_fixture();
  MatchConfig config = f.match;
  config.iterations = 25;
  std::vector<std::size_t> seen;
  const DistillReport report =
      distill(config, f.buffer, blobs_initial_synth(config.seed),
              [&seen](const IterationRecord& rec) { seen.push_back(rec.iter); });
  REQUIRE(seen.size() == report.records.size());
  for (std::size_t i = 0; i < seen.size(); ++i) REQUIRE(seen[i] == i);
}

TEST_CASE("distill skips degenerate pairs and keeps going") {
  // A stationary expert: every snapshot identical, so start == target.
  const auto& f = blobs_fixture();
  TrajectoryBuffer stationary;
  stationary.dataset_fingerprint = f.buffer.dataset_fingerprint;
  ExpertTrajectory expert = f.buffer.experts[0];
  for (auto& snap : expert.snapshots) snap = expert.snapshots[0];
  stationary.experts.push_back(std::move(expert));

  MatchConfig config = f.match;
  config.iterations = 10;
  const DistillReport report = distill(config, stationary, blobs_initial_synth(1));
  REQUIRE(report.records.size() == 10);
  for (const auto& rec : report.records) {
    REQUIRE(rec.skipped);
    REQUIRE_FALSE(rec.diverged);
  }
}

TEST_CASE("distill detects a forced negative student lr and truncates") {
  const auto inst = constructed_negative_lr_instance();
  MatchConfig config;
  config.mode = MatchMode::Att;
  config.n_s = 1;
  config.n_t = 1;
  config.max_start_epoch = 0;
  config.lr_img = 0.01;
  config.lr_sc = 1e-2;  // lr_sc * d_lr ~ 0.22 >> lr_init
  config.lr_init = 0.01;
  config.iterations = 10;
  config.ipc = 1;
  config.seed = 3;

  const SyntheticDataset synth =
      init_synth(1, 2, 2, SynthInit::RealSample, inst.dataset, config.lr_init, config.seed);
  const DistillReport report = distill(config, inst.buffer, synth);
  REQUIRE(report.records.size() == 1);  // truncated at the diverging iteration
  REQUIRE(report.records.back().diverged);
  REQUIRE(report.records.back().lr_student_after <= 0.0);
}

TEST_CASE("distill validates buffer compatibility") {
  const auto& f = blobs_fixture();
  MatchConfig config = f.match;
  config.max_start_epoch = 20;  // beyond M - n_t
  REQUIRE_THROWS_AS(distill(config, f.buffer, blobs_initial_synth(1)), DimensionError);
}
