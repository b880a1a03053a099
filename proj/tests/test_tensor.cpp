#include <catch2/catch_amalgamated.hpp>

#include "odlab/rng.hpp"
#include "odlab/tensor.hpp"

using namespace odlab;

TEST_CASE("tensor shape/data invariant", "[tensor]") {
  Tensor t({2, 3});
  REQUIRE(t.size() == 6);
  REQUIRE(t.rank() == 2);
  for (std::size_t k = 0; k < t.size(); ++k) REQUIRE(t[k] == 0.0);

  REQUIRE_THROWS_AS(Tensor({2, 3}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("tensor indexing is row-major", "[tensor]") {
  Tensor t({2, 3}, {0, 1, 2, 3, 4, 5});
  REQUIRE(t(0, 2) == 2.0);
  REQUIRE(t(1, 0) == 3.0);

  Tensor u({2, 2, 2}, {0, 1, 2, 3, 4, 5, 6, 7});
  REQUIRE(u(1, 0, 1) == 5.0);
  REQUIRE(u(1, 1, 1) == 7.0);
}

TEST_CASE("tensor finiteness check", "[tensor]") {
  Tensor t({3}, {1.0, 2.0, 3.0});
  REQUIRE(t.all_finite());
  t[1] = std::numeric_limits<double>::infinity();
  REQUIRE_FALSE(t.all_finite());
  t[1] = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_FALSE(t.all_finite());
}

TEST_CASE("rng streams are reproducible and key-separated", "[tensor]") {
  Rng a = Rng::keyed(42, "stream", 7);
  Rng b = Rng::keyed(42, "stream", 7);
  Rng c = Rng::keyed(42, "stream", 8);
  bool all_equal = true, any_equal_to_c = false;
  for (int i = 0; i < 100; ++i) {
    const std::uint64_t va = a.next_u64();
    const std::uint64_t vb = b.next_u64();
    const std::uint64_t vc = c.next_u64();
    all_equal = all_equal && va == vb;
    any_equal_to_c = any_equal_to_c || va == vc;
  }
  REQUIRE(all_equal);
  REQUIRE_FALSE(any_equal_to_c);
}

TEST_CASE("rng unit stays in [0,1) and is roughly uniform", "[tensor]") {
  Rng rng(123);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.unit();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  REQUIRE(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("rng below(n) covers the full range", "[tensor]") {
  Rng rng(9);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 5000; ++i) counts[std::size_t(rng.below(5))]++;
  for (int c : counts) REQUIRE(c > 800);
}
