#include <catch2/catch_amalgamated.hpp>
#include <filesystem>

#include "test_util.hpp"

using namespace att;
namespace fs = std::filesystem;
using att::testing::blobs_fixture;

TEST_CASE("train_expert: zero epochs is just the initialization") {
  const auto& f = blobs_fixture();
  const ExpertTrajectory traj = train_expert(f.arch, f.split.train, 0, TrainMeta{}, 11);
  REQUIRE(traj.snapshots.size() == 1);
  REQUIRE(traj.snapshots[0] == init_params(f.arch, 11));
}

TEST_CASE("train_expert is deterministic") {
  const auto& f = blobs_fixture();
  const TrainMeta meta{0.05, 64, 0};
  const ExpertTrajectory a = train_expert(f.arch, f.split.train, 3, meta, 21);
  const ExpertTrajectory b = train_expert(f.arch, f.split.train, 3, meta, 21);
  REQUIRE(a.snapshots.size() == 4);
  for (std::size_t j = 0; j < a.snapshots.size(); ++j) {
    REQUIRE(a.snapshots[j] == b.snapshots[j]);
  }
  REQUIRE(a.snapshots[0] == init_params(f.arch, 21));
}

TEST_CASE("train_expert reaches high accuracy on blobs3") {
  const auto& f = blobs_fixture();
  const auto& expert = f.buffer.experts[0];
  const double acc = accuracy(f.arch, expert.snapshots.back(), f.split.train);
  REQUIRE(acc >= 0.95);
  const Matrix logits0 = forward(f.arch, expert.snapshots.front(), f.split.train);
  const Matrix logitsM = forward(f.arch, expert.snapshots.back(), f.split.train);
  REQUIRE(ce_loss(logitsM, f.split.train.labels) <= ce_loss(logits0, f.split.train.labels));
}

TEST_CASE("train_expert flags divergence with the epoch index") {
  const auto& f = blobs_fixture();
  const TrainMeta hot{1e6, 64, 0};
  try {
    train_expert(f.arch, f.split.train, 5, hot, 1);
    FAIL("expected divergence");
  } catch (const DivergedError& e) {
    REQUIRE(e.step() >= 1);
    REQUIRE(e.step() <= 5);
  }
}

TEST_CASE("sample_pair: single expert, zero start window") {
  const auto& f = blobs_fixture();
  TrajectoryBuffer one;
  one.experts.push_back(f.buffer.experts[0]);
  one.dataset_fingerprint = f.buffer.dataset_fingerprint;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const MatchPair pair = sample_pair(one, 2, 0, seed);
    REQUIRE(pair.expert_index == 0);
    REQUIRE(pair.start_epoch == 0);
    REQUIRE(pair.start == one.experts[0].snapshots[0]);
    REQUIRE(pair.target == one.experts[0].snapshots[2]);
  }
}

TEST_CASE("sample_pair returns exact snapshots and respects bounds") {
  const auto& f = blobs_fixture();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const MatchPair pair = sample_pair(f.buffer, f.match.n_t, f.match.max_start_epoch, seed);
    REQUIRE(pair.expert_index < f.buffer.experts.size());
    REQUIRE(pair.start_epoch <= f.match.max_start_epoch);
    const auto& expert = f.buffer.experts[pair.expert_index];
    REQUIRE(pair.start == expert.snapshots[pair.start_epoch]);
    REQUIRE(pair.target == expert.snapshots[pair.start_epoch + f.match.n_t]);
  }
  REQUIRE_THROWS_AS(sample_pair(f.buffer, 2, 9, 0), DimensionError);
}

TEST_CASE("sample_pair is uniform (chi-square at alpha=0.01)") {
  const auto& f = blobs_fixture();
  TrajectoryBuffer four;
  four.dataset_fingerprint = f.buffer.dataset_fingerprint;
  for (int i = 0; i < 4; ++i) four.experts.push_back(f.buffer.experts[i]);

  // 4 experts x 3 start epochs, 10^4 draws
  const std::size_t draws = 10000;
  std::vector<std::size_t> counts(12, 0);
  for (std::uint64_t seed = 0; seed < draws; ++seed) {
    const MatchPair pair = sample_pair(four, 2, 2, derive_seed(99, seed));
    ++counts[pair.expert_index * 3 + pair.start_epoch];
  }
  const double expected = static_cast<double>(draws) / 12.0;
  double chi2 = 0.0;
  for (std::size_t cell : counts) {
    const double d = static_cast<double>(cell) - expected;
    chi2 += d * d / expected;
  }
  // chi-square critical value, 11 degrees of freedom, alpha = 0.01
  REQUIRE(chi2 < 24.725);
}

TEST_CASE("buffer round trip is byte-identical") {
  const auto& f = blobs_fixture();
  TrajectoryBuffer two;
  two.dataset_fingerprint = f.buffer.dataset_fingerprint;
  two.experts = {f.buffer.experts[0], f.buffer.experts[1]};

  const std::vector<std::uint8_t> bytes = serialize_buffer(two);
  const TrajectoryBuffer loaded = parse_buffer(bytes);
  REQUIRE(loaded.experts.size() == 2);
  REQUIRE(loaded.dataset_fingerprint == two.dataset_fingerprint);
  for (std::size_t e = 0; e < 2; ++e) {
    REQUIRE(loaded.experts[e].seed == two.experts[e].seed);
    REQUIRE(loaded.experts[e].epochs == two.experts[e].epochs);
    REQUIRE(loaded.experts[e].snapshots == two.experts[e].snapshots);
    REQUIRE(loaded.experts[e].train_meta.step_size == two.experts[e].train_meta.step_size);
  }
  // save . load . save gives identical bytes
  REQUIRE(serialize_buffer(loaded) == bytes);

  const fs::path p = fs::temp_directory_path() / "att-test-buffer.attb";
  save_buffer(two, p);
  const TrajectoryBuffer from_disk = load_buffer(p);
  REQUIRE(serialize_buffer(from_disk) == bytes);
}

TEST_CASE("buffer format errors are distinct") {
  const auto& f = blobs_fixture();
  TrajectoryBuffer one;
  one.dataset_fingerprint = f.buffer.dataset_fingerprint;
  one.experts = {f.buffer.experts[0]};
  const std::vector<std::uint8_t> good = serialize_buffer(one);

  SECTION("corrupted payload byte fails the checksum") {
    auto bad = good;
    bad[bad.size() / 2] ^= 0x01;
    REQUIRE_THROWS_AS(parse_buffer(bad), ChecksumError);
  }
  SECTION("bumped version") {
    auto bad = good;
    bad[4] = 2;  // version lives right after the magic
    REQUIRE_THROWS_AS(parse_buffer(bad), VersionMismatchError);
  }
  SECTION("wrong magic") {
    auto bad = good;
    bad[0] = 'X';
    REQUIRE_THROWS_AS(parse_buffer(bad), MagicMismatchError);
  }
  SECTION("truncated file") {
    auto bad = good;
    bad.resize(bad.size() / 2);
    REQUIRE_THROWS_AS(parse_buffer(bad), TruncatedFileError);
  }
  SECTION("trailing garbage") {
    auto bad = good;
    bad.push_back(0);
    REQUIRE_THROWS_AS(parse_buffer(bad), FormatError);
  }
}

TEST_CASE("synth file round trip") {
  const auto& f = blobs_fixture();
  SyntheticDataset synth = att::testing::random_synth(f.arch, 2, 0.05, 77);
  const Fingerprint fp = f.buffer.dataset_fingerprint;
  const std::vector<std::uint8_t> bytes = serialize_synth(synth, fp);
  const LoadedSynth loaded = parse_synth(bytes);
  REQUIRE(loaded.synth == synth);
  REQUIRE(loaded.fingerprint == fp);
  REQUIRE(serialize_synth(loaded.synth, loaded.fingerprint) == bytes);

  auto bad = bytes;
  bad[bad.size() / 2] ^= 0x40;
  REQUIRE_THROWS_AS(parse_synth(bad), ChecksumError);
}

TEST_CASE("buffer validation rejects inhomogeneous experts") {
  const auto& f = blobs_fixture();
  TrajectoryBuffer mixed;
  mixed.experts = {f.buffer.experts[0]};
  ExpertTrajectory other = f.buffer.experts[1];
  other.arch = make_mlp1h(2, 4, 3);
  other.snapshots.assign(other.epochs + 1, ParamVector(param_count(other.arch)));
  mixed.experts.push_back(other);
  REQUIRE_THROWS_AS(validate_buffer(mixed), DimensionError);

  TrajectoryBuffer empty;
  REQUIRE_THROWS_AS(validate_buffer(empty), DimensionError);
}
