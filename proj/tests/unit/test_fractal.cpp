#include "doctest.h"

#include <cmath>
#include <vector>

#include "himforge/fractal.hpp"

using namespace himforge;

namespace {

// Zero-roughness reference: the averaging rule written out level by level.
std::vector<double> midpoint_reference(int n, const Corners& c) {
  const int side = (1 << n) + 1;
  std::vector<double> f(static_cast<std::size_t>(side) * side, 0.0);
  auto at = [&](int x, int y) -> double& { return f[static_cast<std::size_t>(y) * side + x]; };
  at(0, 0) = c[0];
  at(side - 1, 0) = c[1];
  at(0, side - 1) = c[2];
  at(side - 1, side - 1) = c[3];
  for (int step = side - 1; step > 1; step /= 2) {
    const int half = step / 2;
    for (int y = half; y < side; y += step) {
      for (int x = half; x < side; x += step) {
        at(x, y) = (at(x - half, y - half) + at(x + half, y - half) + at(x - half, y + half) + at(x + half, y + half)) / 4;
      }
    }
    for (int y = 0; y < side; y += half) {
      for (int x = (y / half) % 2 == 0 ? half : 0; x < side; x += step) {
        double s = 0;
        int k = 0;
        const int dx[] = {-half, half, 0, 0}, dy[] = {0, 0, -half, half};
        for (int i = 0; i < 4; ++i) {
          const int nx = x + dx[i], ny = y + dy[i];
          if (nx < 0 || ny < 0 || nx >= side || ny >= side) continue;
          s += at(nx, ny);
          ++k;
        }
        at(x, y) = s / k;
      }
    }
  }
  return f;
}

}  // namespace

TEST_CASE("zero roughness with equal corners gives a constant field") {
  Rng r(1);
  const HeightField f = diamond_square(3, {0.7, 0.7, 0.7, 0.7}, 0.0, 0.5, r);
  CHECK(f.side() == 9);
  for (double v : f.values().values()) CHECK(v == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("3x3 hand-evaluated averaging") {
  Rng r(1);
  const HeightField f = diamond_square(1, {0.0, 0.0, 4.0, 4.0}, 0.0, 0.5, r);
  CHECK(f.at(1, 1) == doctest::Approx(2.0));
  CHECK(f.at(1, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(f.at(1, 2) == doctest::Approx(10.0 / 3.0));
  CHECK(f.at(0, 1) == doctest::Approx(2.0));
  CHECK(f.at(2, 1) == doctest::Approx(2.0));
}

TEST_CASE("zero roughness equals the written-out midpoint rule") {
  for (int n = 0; n <= 5; ++n) {
    Rng r(2);
    const Corners c{0.1, -2.0, 3.5, 0.25};
    const HeightField f = diamond_square(n, c, 0.0, 0.5, r);
    const auto ref = midpoint_reference(n, c);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(f.values()[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("field is deterministic per rng and side is 2^n+1") {
  Rng a(9), b(9);
  CHECK(diamond_square(6, {0, 0, 0, 0}, 1.0, 0.5, a) == diamond_square(6, {0, 0, 0, 0}, 1.0, 0.5, b));
  for (int n = 0; n < 8; ++n) CHECK(HeightField(n).side() == (1 << n) + 1);
  CHECK_THROWS_AS(HeightField(-1), InvalidArgument);
}

TEST_CASE("mean absolute displacement per level tracks roughness * decay^k") {
  // level-k diamond points: value minus the mean of the square's corners;
  // E|U(-a,a)| = a/2
  const double roughness = 0.8, decay = 0.6;
  const int n = 3, seeds = 1500;
  std::vector<double> sum(n, 0.0);
  std::vector<int> cnt(n, 0);
  for (int s = 0; s < seeds; ++s) {
    Rng r(static_cast<std::uint64_t>(s));
    const HeightField f = diamond_square(n, {0, 0, 0, 0}, roughness, decay, r);
    const int side = f.side();
    int level = 0;
    for (int step = side - 1; step > 1; step /= 2, ++level) {
      const int half = step / 2;
      for (int y = half; y < side; y += step) {
        for (int x = half; x < side; x += step) {
          const double mean = (f.at(x - half, y - half) + f.at(x + half, y - half) + f.at(x - half, y + half) +
                               f.at(x + half, y + half)) / 4;
          sum[level] += std::abs(f.at(x, y) - mean);
          ++cnt[level];
        }
      }
    }
  }
  for (int k = 0; k < n; ++k) {
    const double expected = roughness * std::pow(decay, k) / 2.0;
    CHECK(sum[k] / cnt[k] == doctest::Approx(expected).epsilon(0.10));
  }
}

TEST_CASE("dirt overlay branches") {
  Rng r(4);
  const HeightField f = diamond_square(5, {0.0, 1.0, 0.5, 0.2}, 1.0, 0.5, r);
  const GrayImage zero = dirt_overlay(f, 0.3, 0.0);
  for (double v : zero.samples()) CHECK(v == 0.0);
  const GrayImage top = dirt_overlay(f, 1.0, 1.0);
  for (double v : top.samples()) CHECK(v == 0.0);

  const GrayImage id = dirt_overlay(f, 0.0, 1.0);
  double lo = 1e300, hi = -1e300;
  for (double v : f.values().values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (std::size_t i = 0; i < id.size(); ++i) CHECK(id[i] == doctest::Approx((f.values()[i] - lo) / (hi - lo)).epsilon(1e-12));
}

TEST_CASE("constant field gives an all-zero overlay") {
  Rng r(1);
  const HeightField f = diamond_square(3, {0.2, 0.2, 0.2, 0.2}, 0.0, 0.5, r);
  const GrayImage o = dirt_overlay(f, 0.0, 1.0);
  for (double v : o.samples()) CHECK(v == 0.0);
}

TEST_CASE("nonzero overlay fraction decreases with threshold") {
  Rng r(12);
  const HeightField f = diamond_square(7, {0.3, 0.6, 0.1, 0.9}, 1.0, 0.55, r);
  double prev = 2.0;
  for (int i = 0; i <= 20; ++i) {
    const GrayImage o = dirt_overlay(f, i / 20.0, 1.0);
    double nz = 0;
    for (double v : o.samples()) nz += v > 0.0;
    const double frac = nz / o.size();
    CHECK(frac <= prev);
    prev = frac;
  }
  CHECK(prev == 0.0);
}

TEST_CASE("invalid overlay parameters are rejected") {
  const HeightField f(2);
  CHECK_THROWS_AS(dirt_overlay(f, 1.5, 1.0), InvalidArgument);
  CHECK_THROWS_AS(dirt_overlay(f, 0.5, -1.0), InvalidArgument);
}
