#include "doctest.h"

#include <cmath>
#include <vector>

#include "himforge/rng.hpp"

using namespace himforge;

namespace {

std::vector<std::uint64_t> draws(Rng r, int n) {
  std::vector<std::uint64_t> v;
  for (int i = 0; i < n; ++i) v.push_back(r.next_u64());
  return v;
}

}  // namespace

TEST_CASE("forking the same label from equal parents gives identical streams") {
  const Rng a(42), b(42);
  CHECK(draws(a.fork("a"), 16) == draws(b.fork("a"), 16));
  CHECK(a.fork("x").fork("y").path() == "x/y");
}

TEST_CASE("sibling labels give different streams across 1000 seeds") {
  int differing = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const Rng r(s);
    differing += draws(r.fork("a"), 16) != draws(r.fork("b"), 16);
  }
  CHECK(differing >= 999);
}

TEST_CASE("forking does not perturb the parent stream") {
  Rng r(5), ref(5);
  (void)r.next_u64();
  (void)ref.next_u64();
  Rng child = r.fork("a");
  for (int i = 0; i < 10; ++i) (void)child.next_u64();
  CHECK(draws(r, 16) == draws(ref, 16));
}

TEST_CASE("child streams ignore how much the parent consumed") {
  Rng fresh(9);
  Rng used(9);
  for (int i = 0; i < 100; ++i) (void)used.uniform();
  CHECK(draws(fresh.fork("k"), 8) == draws(used.fork("k"), 8));
}

TEST_CASE("sibling streams do not depend on each other's consumption order") {
  const Rng root(77);
  Rng a1 = root.fork("a"), b1 = root.fork("b");
  const auto a_first = draws(a1, 8);
  const auto b_second = draws(b1, 8);
  Rng b2 = root.fork("b"), a2 = root.fork("a");
  CHECK(draws(b2, 8) == b_second);
  CHECK(draws(a2, 8) == a_first);
}

TEST_CASE("empty fork label is rejected") {
  CHECK_THROWS(Rng(1).fork(""));
}

TEST_CASE("uniform and integer draws stay in range") {
  Rng r(3);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 20000; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const auto k = r.uniform_int(-3, 3);
    REQUIRE(k >= -3);
    REQUIRE(k <= 3);
    ++hits[k + 3];
  }
  for (int h : hits) CHECK(h > 2500);
}

TEST_CASE("normal draws have unit variance") {
  Rng r(8);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::sqrt(s2 / n - mean * mean) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("pick_weighted never selects zero-weight entries") {
  Rng r(4);
  for (int i = 0; i < 1000; ++i) CHECK(pick_weighted(r, {0.0, 2.0, 0.0, 1.0}) % 2 == 1);
}

TEST_CASE("FNV-1a matches published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}
