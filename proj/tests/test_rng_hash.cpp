#include <catch2/catch_amalgamated.hpp>

#include "att/hash.hpp"
#include "att/rng.hpp"

using namespace att;

TEST_CASE("rng is deterministic per seed") {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

  Rng c(43);
  Rng d(42);
  bool any_diff = false;
  for (int i = 0; i < 10; ++i) any_diff |= (c.next_u64() != d.next_u64());
  REQUIRE(any_diff);
}

TEST_CASE("rng uniform range and below bound") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
  for (int i = 0; i < 10000; ++i) REQUIRE(rng.below(13) < 13);
}

TEST_CASE("rng normal moments") {
  Rng rng(11);
  const int n = 100000;
  double sum = 0.0;
  double sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  REQUIRE(std::fabs(mean) < 0.02);
  REQUIRE(std::fabs(var - 1.0) < 0.03);
}

TEST_CASE("derive_seed separates streams") {
  REQUIRE(derive_seed(1, 2) != derive_seed(1, 3));
  REQUIRE(derive_seed(1, 2) != derive_seed(2, 2));
  REQUIRE(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
  REQUIRE(derive_seed(5, seed_tag::kExpert, 0) == derive_seed(5, seed_tag::kExpert, 0));
}

TEST_CASE("rng shuffle is a seeded permutation") {
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<int> w = v;
  Rng a(3);
  Rng b(3);
  a.shuffle(v);
  b.shuffle(w);
  REQUIRE(v == w);
  std::sort(v.begin(), v.end());
  REQUIRE(v == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("crc32 matches the standard check value") {
  const char* s = "123456789";
  REQUIRE(crc32(std::span(reinterpret_cast<const std::uint8_t*>(s), 9)) == 0xCBF43926u);

  Crc32 streamed;
  streamed.update(s, 4);
  streamed.update(s + 4, 5);
  REQUIRE(streamed.value() == 0xCBF43926u);
}

TEST_CASE("fingerprint distinguishes content") {
  LabeledBatch a;
  a.features = Matrix(2, 2);
  a.features(0, 0) = 1.0;
  a.labels = {0, 1};
  LabeledBatch b = a;

  REQUIRE(dataset_fingerprint(a) == dataset_fingerprint(b));

  b.features(1, 1) = 1e-300;  // single tiny change
  REQUIRE(dataset_fingerprint(a) != dataset_fingerprint(b));

  b = a;
  b.labels[1] = 0;
  REQUIRE(dataset_fingerprint(a) != dataset_fingerprint(b));
}

TEST_CASE("hex_string formats bytes") {
  const std::uint8_t bytes[3] = {0x00, 0xab, 0xff};
  REQUIRE(hex_string(std::span(bytes, 3)) == "00abff");
}
