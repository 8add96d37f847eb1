#include "doctest.h"

#include <cmath>
#include <limits>

#include "himforge/core.hpp"

using namespace himforge;

TEST_CASE("GrayImage rejects samples outside [0,1]") {
  CHECK_NOTHROW(GrayImage(2, 2, std::vector<double>{0.0, 0.25, 0.5, 1.0}));
  CHECK_THROWS_AS(GrayImage(1, 1, std::vector<double>{1.0000001}), InvalidArgument);
  CHECK_THROWS_AS(GrayImage(1, 1, std::vector<double>{-1e-12}), InvalidArgument);
  CHECK_THROWS_AS(GrayImage(1, 1, std::vector<double>{std::nan("")}), InvalidArgument);
  CHECK_THROWS_AS(GrayImage(2, 2, std::vector<double>{0.0}), InvalidArgument);
}

TEST_CASE("GrayImage::clamped pins values into range") {
  const auto img = GrayImage::clamped(3, 1, {-0.5, 0.5, 7.0});
  CHECK(img.at(0, 0) == 0.0);
  CHECK(img.at(1, 0) == 0.5);
  CHECK(img.at(2, 0) == 1.0);
}

TEST_CASE("rasters are values: copies never alias") {
  GrayImage a(4, 4, 0.25);
  GrayImage b = a;
  CHECK(a == b);
  BinaryMask m(3, 3);
  BinaryMask n = m;
  n.set(1, 1, true);
  CHECK_FALSE(m.test(1, 1));
  CHECK(m != n);
}

TEST_CASE("BinaryMask normalizes stored bits") {
  BinaryMask m(3, 1, {0, 7, 255});
  CHECK(m[0] == 0);
  CHECK(m[1] == 1);
  CHECK(m[2] == 1);
  CHECK(m.count() == 2);
}

TEST_CASE("LabelMap requires dense ids and derives count") {
  const LabelMap ok(3, 1, {0, 2, 1});
  CHECK(ok.count() == 2);
  CHECK_THROWS_AS(LabelMap(3, 1, {0, 3, 1}), InvalidArgument);
  const LabelMap empty(5, 5);
  CHECK(empty.count() == 0);
  const BinaryMask s = ok.support();
  CHECK(s.count() == 2);
  CHECK_FALSE(s.test(0, 0));
}

TEST_CASE("PixelScale must be positive and finite") {
  CHECK(PixelScale(0.976).nm_per_px() == doctest::Approx(0.976));
  CHECK_THROWS_AS(PixelScale(0.0), InvalidArgument);
  CHECK_THROWS_AS(PixelScale(-1.0), InvalidArgument);
  CHECK_THROWS_AS(PixelScale(std::numeric_limits<double>::infinity()), InvalidArgument);
}

TEST_CASE("Grid rejects negative dimensions") {
  CHECK_THROWS_AS(Grid<int>(-1, 2), InvalidArgument);
}
