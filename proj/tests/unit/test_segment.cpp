#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "himforge/analyze.hpp"
#include "himforge/render.hpp"
#include "himforge/segment.hpp"

using namespace himforge;

namespace {

// Exhaustive split scan with exact integer arithmetic:
// between-class variance ~ (S0*w1 - S1*w0)^2 / (w0*w1), compared by cross-multiplication.
double otsu_oracle(const GrayImage& img, int bins) {
  std::vector<long long> idx;
  for (double v : img.samples()) idx.push_back(std::min<long long>(bins - 1, static_cast<long long>(v * bins)));
  __int128 best_num = -1, best_den = 1;
  int best_k = -1;
  for (int k = 1; k < bins; ++k) {
    long long w0 = 0, w1 = 0, s0 = 0, s1 = 0;
    for (long long b : idx) {
      if (b < k) {
        ++w0;
        s0 += b;
      } else {
        ++w1;
        s1 += b;
      }
    }
    if (w0 == 0 || w1 == 0) continue;
    const __int128 d = static_cast<__int128>(s0) * w1 - static_cast<__int128>(s1) * w0;
    const __int128 num = d * d, den = static_cast<__int128>(w0) * w1;
    if (best_k < 0 || num * best_den > best_num * den) {
      best_num = num;
      best_den = den;
      best_k = k;
    }
  }
  return (best_k - 0.5) / bins;
}

GrayImage random_levels(Rng& r, int w, int h, int levels) {
  std::vector<double> v(static_cast<std::size_t>(w) * h);
  for (double& x : v) x = static_cast<double>(r.uniform_int(0, levels - 1)) / (levels - 1);
  return GrayImage(w, h, std::move(v));
}

}  // namespace

TEST_CASE("sigmoid examples") {
  ScalarField f(5, 1);
  f[0] = 0.0;
  f[1] = 50.0;
  f[2] = -50.0;
  f[3] = 2.5;
  f[4] = -2.5;
  const GrayImage p = sigmoid_map(f);
  CHECK(p[0] == 0.5);
  CHECK(std::abs(p[1] - 1.0) <= 1e-15);
  CHECK(p[2] >= 0.0);
  CHECK(p[2] < 1e-15);
  CHECK(p[3] + p[4] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("sigmoid is symmetric and strictly increasing") {
  Rng r(1);
  std::vector<double> xs;
  for (int i = 0; i < 2000; ++i) xs.push_back(r.uniform(-30.0, 30.0));
  std::sort(xs.begin(), xs.end());
  ScalarField f(static_cast<int>(xs.size()), 1), g(static_cast<int>(xs.size()), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    f[i] = xs[i];
    g[i] = -xs[i];
  }
  const GrayImage p = sigmoid_map(f), q = sigmoid_map(g);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK(p[i] + q[i] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(p[i] > 0.0);
    CHECK(p[i] < 1.0);
    if (i > 0 && xs[i] > xs[i - 1] && std::abs(xs[i]) < 15.0) CHECK(p[i] > p[i - 1]);
  }
}

TEST_CASE("sigmoid bounds handling") {
  ScalarField f(2, 1);
  f[0] = std::numeric_limits<double>::infinity();
  f[1] = -std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(sigmoid_map(f), InvalidArgument);
  const GrayImage p = sigmoid_map(f, true);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == 0.0);
  f[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(sigmoid_map(f, true), InvalidArgument);
}

TEST_CASE("threshold is strict at 0.51") {
  CHECK(threshold_probability(GrayImage(8, 8, 0.51)).count() == 0);
  CHECK(threshold_probability(GrayImage(8, 8, 0.511)).count() == 64);
  CHECK_THROWS_AS(threshold_probability(GrayImage(2, 2, 0.5), 1.0), InvalidArgument);
  CHECK_THROWS_AS(threshold_probability(GrayImage(2, 2, 0.5), -0.1), InvalidArgument);
  CHECK_NOTHROW(threshold_probability(GrayImage(2, 2, 0.5), 0.0));
}

TEST_CASE("thresholding a binary map is idempotent and monotone in t") {
  Rng r(2);
  for (int trial = 0; trial < 20; ++trial) {
    BinaryMask m(20, 20);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = r.bernoulli(0.5);
    CHECK(threshold_probability(mask_to_probability(m)) == m);

    std::vector<double> v(400);
    for (double& x : v) x = r.uniform();
    const GrayImage p(20, 20, v);
    const double t1 = r.uniform(0.0, 0.99), t2 = r.uniform(t1, 0.999);
    const BinaryMask a = threshold_probability(p, t1), b = threshold_probability(p, t2);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (b[i]) CHECK(a[i]);
    }
  }
}

TEST_CASE("otsu on two deltas separates them") {
  std::vector<double> v(100);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i % 2 ? 1.0 : 0.0;
  const double t = otsu_threshold(GrayImage(10, 10, v));
  CHECK(t > 0.0);
  CHECK(t < 1.0);
  CHECK_THROWS_AS(otsu_threshold(GrayImage(4, 4, 0.3)), DegenerateHistogram);
  CHECK_THROWS_AS(otsu_threshold(GrayImage(4, 4, 0.3), 1), InvalidArgument);
}

TEST_CASE("otsu matches the exhaustive split scan") {
  Rng r(3);
  for (int trial = 0; trial < 60; ++trial) {
    const int bins = trial % 3 == 0 ? 256 : 64;
    const int levels = static_cast<int>(r.uniform_int(2, 12));
    GrayImage img = random_levels(r, 32, 32, levels);
    if (trial % 2 == 1) {
      std::vector<double> v(img.samples().begin(), img.samples().end());
      for (double& x : v) x = r.uniform();
      img = GrayImage(32, 32, v);
    }
    const double t = otsu_threshold(img, bins);
    CHECK(t == otsu_oracle(img, bins));

    std::vector<double> shuffled(img.samples().begin(), img.samples().end());
    for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
      std::swap(shuffled[i], shuffled[static_cast<std::size_t>(r.uniform_int(0, static_cast<std::int64_t>(i)))]);
    }
    CHECK(otsu_threshold(GrayImage(32, 32, shuffled), bins) == t);
  }
}

TEST_CASE("box blur preserves constants and averages") {
  const GrayImage flat(9, 7, 0.4);
  const GrayImage b = box_blur(flat, 3);
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(b[i] == doctest::Approx(0.4));
  const GrayImage spike(5, 1, std::vector<double>{0, 0, 1, 0, 0});
  const GrayImage s = box_blur(spike, 1);
  // separable: the vertical pass on a 1-row image sees the row three times
  CHECK(s[1] == doctest::Approx(1.0 / 3.0));
  CHECK(s[2] == doctest::Approx(1.0 / 3.0));
  CHECK(s[0] == doctest::Approx(0.0));
  CHECK(box_blur(spike, 0) == spike);
  CHECK_THROWS_AS(box_blur(spike, -1), InvalidArgument);
}

TEST_CASE("baseline segments a clean sphere render") {
  Recipe rec = preset_recipe("sio2");
  rec.dirt_probability = 0.0;
  const SceneSpec scene = build_scene(rec, Rng(31));
  const RenderOutput out = render_pair(scene);
  const GrayImage prob = baseline_segment(out.beauty);
  for (double v : prob.samples()) CHECK((v == 0.0 || v == 1.0));
  const MetricsReport m = metrics(confusion(threshold_probability(prob), out.label_mask));
  REQUIRE(m.f1.has_value());
  CHECK(*m.f1 >= 0.9);
  CHECK(baseline_segment(out.beauty) == prob);
  // fixed point of thresholding at any t in [0,1)
  for (double t : {0.0, 0.3, 0.51, 0.99}) CHECK(mask_to_probability(threshold_probability(prob, t)) == prob);
}

TEST_CASE("background-only render has a degenerate histogram") {
  SceneSpec s;
  s.extent = 100.0;
  s.camera = {{0.0, 0.0, 100.0}, 64};
  const GrayImage img = render_beauty(s);
  CHECK_THROWS_AS(baseline_segment(img), DegenerateHistogram);
}

TEST_CASE("invert flips the decision") {
  Recipe rec = preset_recipe("sio2");
  rec.dirt_probability = 0.0;
  const GrayImage img = render_beauty(build_scene(rec, Rng(32)));
  BaselineParams p;
  const GrayImage a = baseline_segment(img, p);
  p.invert = true;
  const GrayImage b = baseline_segment(img, p);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] + b[i] == 1.0);
}
