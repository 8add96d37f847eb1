#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "himforge/pipeline.hpp"

using namespace himforge;

namespace {

GrayImage random_image(Rng& r, int w, int h) {
  std::vector<double> v(static_cast<std::size_t>(w) * h);
  for (double& x : v) x = r.uniform();
  return GrayImage(w, h, std::move(v));
}

BinaryMask threshold_half(const GrayImage& g) {
  BinaryMask m(g.width(), g.height());
  for (std::size_t i = 0; i < g.size(); ++i) m[i] = g[i] >= 0.5 ? 1 : 0;
  return m;
}

GrayImage as_image(const BinaryMask& m) {
  std::vector<double> v(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) v[i] = m[i] ? 1.0 : 0.0;
  return GrayImage(m.width(), m.height(), std::move(v));
}

}  // namespace

TEST_CASE("bilinear resize examples") {
  Rng r(1);
  const GrayImage img = random_image(r, 13, 7);
  CHECK(resize_bilinear(img, 13, 7) == img);

  const GrayImage row(2, 1, std::vector<double>{0.0, 1.0});
  const GrayImage wide = resize_bilinear(row, 3, 1);
  CHECK(wide[0] == 0.0);
  CHECK(wide[1] == doctest::Approx(0.5));
  CHECK(wide[2] == 1.0);

  const GrayImage one(1, 1, 0.3);
  const GrayImage spread = resize_bilinear(one, 4, 5);
  for (double v : spread.samples()) CHECK(v == doctest::Approx(0.3));
}

TEST_CASE("bilinear upsampling stays inside the input range and keeps corners") {
  Rng r(2);
  const GrayImage img = random_image(r, 507, 507);
  const GrayImage up = resize_bilinear(img, 2031, 2031);
  CHECK(up.width() == 2031);
  CHECK(up.height() == 2031);
  const auto [lo, hi] = std::minmax_element(img.samples().begin(), img.samples().end());
  const auto [ulo, uhi] = std::minmax_element(up.samples().begin(), up.samples().end());
  CHECK(*ulo >= *lo);
  CHECK(*uhi <= *hi);
  CHECK(up.at(0, 0) == img.at(0, 0));
  CHECK(up.at(2030, 0) == img.at(506, 0));
  CHECK(up.at(0, 2030) == img.at(0, 506));
  CHECK(up.at(2030, 2030) == img.at(506, 506));
  // 1015 * 506 / 2030 = 253 exactly, so this pixel copies a source pixel
  CHECK(up.at(1015, 1015) == img.at(253, 253));
}

TEST_CASE("bilinear output is a local convex combination") {
  Rng r(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = static_cast<int>(r.uniform_int(2, 12)), h = static_cast<int>(r.uniform_int(2, 12));
    const int nw = static_cast<int>(r.uniform_int(2, 30)), nh = static_cast<int>(r.uniform_int(2, 30));
    const GrayImage img = random_image(r, w, h);
    const GrayImage out = resize_bilinear(img, nw, nh);
    for (int y = 0; y < nh; ++y) {
      for (int x = 0; x < nw; ++x) {
        const double sx = x * (w - 1.0) / (nw - 1.0), sy = y * (h - 1.0) / (nh - 1.0);
        const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
        const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
        const double lo = std::min({img.at(x0, y0), img.at(x1, y0), img.at(x0, y1), img.at(x1, y1)});
        const double hi = std::max({img.at(x0, y0), img.at(x1, y0), img.at(x0, y1), img.at(x1, y1)});
        CHECK(out.at(x, y) >= lo - 1e-12);
        CHECK(out.at(x, y) <= hi + 1e-12);
      }
    }
  }
}

TEST_CASE("nearest resize keeps masks binary and labels dense") {
  Rng r(4);
  BinaryMask m(9, 9);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = r.bernoulli(0.4);
  const BinaryMask big = resize_nearest(m, 31, 17);
  for (auto v : big.values()) CHECK((v == 0 || v == 1));
  CHECK(resize_nearest(m, 9, 9) == m);

  const LabelMap lab(4, 1, {1, 0, 2, 3});
  const LabelMap small = resize_nearest(lab, 2, 1);
  // source columns 0 and 3 survive and are renumbered densely
  CHECK(small.count() == 2);
  CHECK(small.at(0, 0) == 1);
  CHECK(small.at(1, 0) == 2);
}

TEST_CASE("gaussian noise statistics") {
  const GrayImage flat(512, 512, 0.5);
  Rng r(5);
  CHECK(add_gaussian_noise(flat, 0.0, r) == flat);
  const GrayImage noisy = add_gaussian_noise(flat, 0.05, r);
  double sum = 0.0, sq = 0.0;
  for (double v : noisy.samples()) {
    sum += v;
    sq += v * v;
  }
  const double n = static_cast<double>(noisy.size());
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  CHECK(std::abs(mean - 0.5) <= 0.005);
  CHECK(sd == doctest::Approx(0.05).epsilon(0.10));

  const GrayImage wild = add_gaussian_noise(flat, 3.0, r);
  for (double v : wild.samples()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  Rng a(9), b(9);
  CHECK(add_gaussian_noise(flat, 0.1, a) == add_gaussian_noise(flat, 0.1, b));
  CHECK_THROWS_AS(add_gaussian_noise(flat, -0.1, a), InvalidArgument);
}

TEST_CASE("min-max normalization") {
  const GrayImage g(3, 1, std::vector<double>{0.2, 0.4, 0.6});
  const GrayImage n = normalize_minmax(g);
  CHECK(n[0] == 0.0);
  CHECK(n[1] == doctest::Approx(0.5));
  CHECK(n[2] == 1.0);
  const GrayImage flat = normalize_minmax(GrayImage(4, 4, 0.7));
  for (double v : flat.samples()) CHECK(v == 0.0);
}

TEST_CASE("clahe on constant and two-level images") {
  const GrayImage flat(32, 32, 0.37);
  CHECK(clahe(flat) == flat);

  std::vector<double> v(64 * 64);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (i % 64) < 32 ? 0.2 : 0.8;
  const GrayImage two(64, 64, v);
  const GrayImage eq = clahe(two, {1, 1, 1e6, 256});
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(eq[i] == doctest::Approx(v[i] < 0.5 ? 0.5 : 1.0));
}

TEST_CASE("clahe tables are monotone and outputs stay in range") {
  Rng r(6);
  for (int trial = 0; trial < 5; ++trial) {
    const GrayImage img = random_image(r, 96, 80);
    const ClaheParams p{4, 3, 1.5 + trial, 64};
    const ClaheMappings maps = clahe_mappings(img, p);
    CHECK(maps.tables.size() == 12);
    for (const auto& t : maps.tables) {
      if (t.empty()) continue;
      CHECK(t.size() == 64);
      for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] >= t[i - 1]);
      CHECK(t.front() >= 0.0);
      CHECK(t.back() <= 1.0);
    }
    const GrayImage eq = clahe(img, p);
    for (double x : eq.samples()) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
  }
  CHECK_THROWS_AS(clahe(GrayImage(8, 8, 0.1), {1, 1, 1.0, 256}), InvalidArgument);
  CHECK_THROWS_AS(clahe(GrayImage(8, 8, 0.1), {0, 1, 2.0, 256}), InvalidArgument);
  CHECK_THROWS_AS(clahe(GrayImage(8, 8, 0.1), {1, 1, 2.0, 1}), InvalidArgument);
  CHECK_THROWS_AS(clahe(GrayImage(4, 4, 0.1), {8, 8, 2.0, 256}), InvalidArgument);
}

TEST_CASE("augment group identities") {
  Rng r(7);
  const GrayImage img = random_image(r, 20, 20);
  const BinaryMask mask = threshold_half(random_image(r, 20, 20));
  Rng noise(1);

  AugmentSpec quarter;
  quarter.rotation_quarter_turns = 1;
  auto [i1, m1] = augment(img, mask, quarter, noise);
  for (int k = 0; k < 3; ++k) std::tie(i1, m1) = augment(i1, m1, quarter, noise);
  CHECK(i1 == img);
  CHECK(m1 == mask);

  AugmentSpec flip;
  flip.flip_horizontal = true;
  auto [i2, m2] = augment(img, mask, flip, noise);
  std::tie(i2, m2) = augment(i2, m2, flip, noise);
  CHECK(i2 == img);
  CHECK(m2 == mask);
}

TEST_CASE("quarter turn is counter-clockwise") {
  std::vector<double> v(6, 0.0);
  v[2] = 1.0;  // top-right of a 3x2 image
  v[0] = 0.5;  // top-left
  const GrayImage img(3, 2, v);
  Rng r(0);
  AugmentSpec s;
  s.rotation_quarter_turns = 1;
  const auto [out, m] = augment(img, BinaryMask(3, 2), s, r);
  CHECK(out.width() == 2);
  CHECK(out.height() == 3);
  CHECK(out.at(0, 0) == 1.0);
  CHECK(out.at(0, 2) == 0.5);
}

TEST_CASE("mask path commutes with binarization and stays binary") {
  Rng r(8);
  for (int trial = 0; trial < 40; ++trial) {
    const BinaryMask mask = threshold_half(random_image(r, 24, 24));
    AugmentSpec s = random_augment_spec(r, 0.5, 1.5, 0.02);
    Rng n1(trial), n2(trial);
    const auto [img_out, mask_out] = augment(as_image(mask), mask, s, n1);
    for (auto v : mask_out.values()) CHECK((v == 0 || v == 1));
    // geometric part only: compare against the mask pushed through as an image
    s.zoom = 1.0;
    s.intensity_scale = 1.0;
    s.intensity_shift = 0.0;
    s.noise_sigma = 0.0;
    const auto [geo_img, geo_mask] = augment(as_image(mask), mask, s, n2);
    CHECK(threshold_half(geo_img) == geo_mask);
  }
}

TEST_CASE("intensity ops touch only the image") {
  Rng r(10);
  const GrayImage img = random_image(r, 16, 16);
  const BinaryMask mask = threshold_half(img);
  AugmentSpec s;
  s.intensity_scale = 1.5;
  s.intensity_shift = -0.1;
  s.noise_sigma = 0.05;
  Rng n(3);
  const auto [out, m] = augment(img, mask, s, n);
  CHECK(m == mask);
  for (double v : out.samples()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("invalid augment specs") {
  const GrayImage img(4, 4);
  const BinaryMask mask(4, 4);
  Rng r(1);
  AugmentSpec s;
  s.zoom = 0.0;
  CHECK_THROWS_AS(augment(img, mask, s, r), InvalidArgument);
  s.zoom = -1.0;
  CHECK_THROWS_AS(validate(s), InvalidArgument);
  s = {};
  s.rotation_quarter_turns = 4;
  CHECK_THROWS_AS(validate(s), InvalidArgument);
  s = {};
  s.intensity_scale = 0.0;
  CHECK_THROWS_AS(validate(s), InvalidArgument);
  s = {};
  s.noise_sigma = -1.0;
  CHECK_THROWS_AS(validate(s), InvalidArgument);
  CHECK_THROWS_AS(augment(img, BinaryMask(3, 4), AugmentSpec{}, r), InvalidArgument);
}

TEST_CASE("zoom keeps dimensions") {
  Rng r(11);
  const GrayImage img = random_image(r, 30, 30);
  const BinaryMask mask = threshold_half(img);
  for (double z : {0.5, 0.8, 1.3, 2.0}) {
    AugmentSpec s;
    s.zoom = z;
    const auto [o, m] = augment(img, mask, s, r);
    CHECK(o.width() == 30);
    CHECK(o.height() == 30);
    CHECK(m.width() == 30);
  }
}

TEST_CASE("degrade") {
  Rng r(12);
  const GrayImage img = random_image(r, 40, 40);
  Rng a(1), b(1);
  CHECK(degrade(img, 40, 0.0, a) == img);
  const GrayImage big = degrade(img, 160, 0.03, a);
  CHECK(big.width() == 160);
  CHECK(big.height() == 160);
  CHECK(degrade(img, 160, 0.03, b) == big);
}

TEST_CASE("degrade 507 to 2031") {
  Rng r(13);
  const GrayImage img = random_image(r, 507, 507);
  const GrayImage out = degrade(img, 2031, 0.03, r);
  CHECK(out.width() == 2031);
  CHECK(out.height() == 2031);
}
