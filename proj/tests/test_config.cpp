#include <catch2/catch_amalgamated.hpp>
#include <filesystem>

#include "test_util.hpp"

using namespace att;
namespace fs = std::filesystem;

namespace {

const std::string kMinimal = R"(
dataset = blobs3
arch = linear
N_S = 10
N_T = 2
max_start_epoch = 3
expert_epochs = 8
iterations = 50
)";

}  // namespace

TEST_CASE("config parses with defaults") {
  const RunConfig cfg = parse_run_config(kMinimal);
  REQUIRE(cfg.dataset.name == "blobs3");
  REQUIRE(cfg.dataset.train_fraction == 0.8);
  REQUIRE(cfg.arch_kind == ArchKind::Linear);
  REQUIRE(cfg.match.n_s == 10);
  REQUIRE(cfg.match.n_t == 2);
  REQUIRE(cfg.match.max_start_epoch == 3);
  REQUIRE(cfg.match.iterations == 50);
  REQUIRE(cfg.match.gamma == 2);
  REQUIRE(cfg.match.mode == MatchMode::Att);
  REQUIRE(cfg.expert.count == 20);
  REQUIRE(cfg.eval.n_seeds == 5);
  REQUIRE(cfg.config_hash.size() == 16);
  REQUIRE(cfg.config_hash == parse_run_config(kMinimal).config_hash);
}

TEST_CASE("config rejects unknown keys with the field path") {
  try {
    parse_run_config(kMinimal + "lr_imgg = 3\n");
    FAIL("expected rejection");
  } catch (const ConfigError& e) {
    REQUIRE(e.field() == "lr_imgg");
  }
}

TEST_CASE("config rejects bad values with the field path") {
  auto expect_field = [](const std::string& text, const std::string& field) {
    try {
      parse_run_config(text);
      FAIL("expected rejection of " << field);
    } catch (const ConfigError& e) {
      REQUIRE(e.field() == field);
    }
  };
  expect_field(kMinimal + "lr_img = banana\n", "lr_img");
  expect_field(kMinimal + "lr_img = -0.5\n", "lr_img");
  expect_field(kMinimal + "zca = maybe\n", "zca");
  expect_field(kMinimal + "ipc = 0\n", "ipc");
  expect_field(kMinimal + "gamma = -1\n", "gamma");
  expect_field("dataset = nope\narch = linear\n", "dataset");
  expect_field(kMinimal + "train_fraction = 1.5\n", "train_fraction");
  expect_field(kMinimal + "mode = sometimes\n", "mode");
  expect_field(kMinimal + "N_S = 10\n", "N_S");  // duplicate key
}

TEST_CASE("config enforces the trajectory-length inequality") {
  const std::string bad = R"(
dataset = blobs3
arch = linear
N_S = 10
N_T = 4
max_start_epoch = 6
expert_epochs = 8
)";
  try {
    parse_run_config(bad);
    FAIL("expected rejection");
  } catch (const ConfigError& e) {
    REQUIRE(e.field() == "expert_epochs");
  }
}

TEST_CASE("zca flag lands in both dataset and match config") {
  const RunConfig cfg = parse_run_config(kMinimal + "zca = yes\n");
  REQUIRE(cfg.dataset.zca);
  REQUIRE(cfg.match.zca);
}

TEST_CASE("config hash differs across distinct texts") {
  const RunConfig a = parse_run_config(kMinimal);
  const RunConfig b = parse_run_config(kMinimal + "seed = 9\n");
  REQUIRE(a.config_hash != b.config_hash);
}

TEST_CASE("run_dir combines hash and seed; paths resolve relative to it") {
  RunConfig cfg = parse_run_config(kMinimal + "seed = 5\n");
  const fs::path dir = run_dir("/data", cfg);
  REQUIRE(dir == fs::path("/data") / (cfg.config_hash + "-s5"));
  cfg.match.seed = 6;  // CLI --seed override
  REQUIRE(run_dir("/data", cfg) == fs::path("/data") / (cfg.config_hash + "-s6"));

  REQUIRE(resolve_path(dir, "buffer.attb") == dir / "buffer.attb");
  REQUIRE(resolve_path(dir, "/abs/buffer.attb") == fs::path("/abs/buffer.attb"));
}

TEST_CASE("prepare_data resolves architecture dims from the dataset") {
  const RunConfig cfg = parse_run_config(kMinimal + "eval_archs = linear,mlp1h\n");
  const PreparedData data = prepare_data(cfg);
  REQUIRE(data.arch == make_linear(2, 3));
  REQUIRE(data.eval_archs.size() == 2);
  REQUIRE(data.eval_archs[1] == make_mlp1h(2, 16, 3));
  REQUIRE(data.split.train.size() == 480);
  REQUIRE(data.train_fingerprint == dataset_fingerprint(data.split.train));
}

TEST_CASE("prepare_data rejects ipc beyond the per-class supply") {
  const RunConfig cfg = parse_run_config(R"(
dataset = blobs3
arch = linear
N_S = 4
N_T = 1
expert_epochs = 4
ipc = 200
init = real-sample
)");
  REQUIRE_THROWS_AS(prepare_data(cfg), ConfigError);
}

TEST_CASE("prepare_data applies zca when requested") {
  const RunConfig plain = parse_run_config(kMinimal);
  const RunConfig whitened = parse_run_config(kMinimal + "zca = yes\n");
  const PreparedData a = prepare_data(plain);
  const PreparedData b = prepare_data(whitened);
  REQUIRE_FALSE(a.zca.has_value());
  REQUIRE(b.zca.has_value());
  REQUIRE(a.split.train.features != b.split.train.features);
  REQUIRE(a.train_fingerprint != b.train_fingerprint);
}

TEST_CASE("shipped configs parse and carry the published hyperparameter rows") {
  const fs::path dir(ATT_CONFIG_DIR);

  const RunConfig blobs = load_run_config(dir / "blobs3-ipc1.cfg");
  REQUIRE(blobs.match.n_s == 30);
  REQUIRE(blobs.match.ipc == 1);
  REQUIRE(blobs.init_mode == SynthInit::RealSample);

  const RunConfig ipc1 = load_run_config(dir / "cifar10-ipc1-shape.cfg");
  REQUIRE(ipc1.match.n_s == 80);
  REQUIRE(ipc1.match.n_t == 4);
  REQUIRE(ipc1.match.max_start_epoch == 2);
  REQUIRE(ipc1.match.lr_img == 1e2);
  REQUIRE(ipc1.match.lr_sc == 1e-7);
  REQUIRE(ipc1.match.lr_init == 1e-2);
  REQUIRE(ipc1.match.zca);

  const RunConfig ipc10 = load_run_config(dir / "cifar10-ipc10-shape.cfg");
  REQUIRE(ipc10.match.n_s == 30);
  REQUIRE(ipc10.match.n_t == 2);
  REQUIRE(ipc10.match.max_start_epoch == 20);
  REQUIRE(ipc10.match.lr_img == 1e4);
  REQUIRE(ipc10.match.lr_sc == 1e-4);
  REQUIRE(ipc10.match.lr_init == 1e-2);
  REQUIRE(ipc10.match.ipc == 10);

  const RunConfig ipc50 = load_run_config(dir / "cifar10-ipc50-shape.cfg");
  REQUIRE(ipc50.match.n_s == 50);
  REQUIRE(ipc50.match.max_start_epoch == 40);
  REQUIRE(ipc50.match.lr_init == 1e-3);
  REQUIRE_FALSE(ipc50.match.zca);

  // every shipped config must parse and validate
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".cfg") {
      REQUIRE_NOTHROW(load_run_config(entry.path()));
    }
  }
}
