#pragma once

#include <array>

#include "himforge/core.hpp"
#include "himforge/rng.hpp"

namespace himforge {

/// Square height field whose side is 2^n + 1.
class HeightField {
 public:
  explicit HeightField(int levels);

  int levels() const { return levels_; }
  int side() const { return values_.width(); }
  double& at(int x, int y) { return values_.at(x, y); }
  double at(int x, int y) const { return values_.at(x, y); }
  const ScalarField& values() const { return values_; }

  friend bool operator==(const HeightField&, const HeightField&) = default;

 private:
  int levels_;
  ScalarField values_;
};

/// Corner heights in the order top-left, top-right, bottom-left, bottom-right.
using Corners = std::array<double, 4>;

/// Diamond-square (random midpoint displacement) fractal.
///
/// Per level the diamond step sets each square centre to the mean of its four
/// corners, then the square step sets each edge midpoint to the mean of its
/// orthogonal neighbours that exist (three on the border, four inside). Each
/// new point receives a uniform(-a, +a) displacement; a starts at `roughness`
/// and is multiplied by `decay` after every level. Points are visited in
/// raster order so the draw sequence is fixed.
HeightField diamond_square(int levels, const Corners& corners, double roughness, double decay,
                           Rng& rng);

struct DirtParams {
  int levels = 9;
  double roughness = 1.0;
  double decay = 0.5;
  double threshold = 0.55;
  double gain = 0.6;
};

/// Min-max normalizes the field and keeps gain * max(0, v - threshold), clamped.
/// A field flat to within 1e-12 relative rounding yields zeros.
GrayImage dirt_overlay(const HeightField& field, double threshold, double gain);

/// Random corners in [0,1) followed by diamond_square and dirt_overlay.
GrayImage make_dirt_texture(const DirtParams& params, Rng& rng);

}  // namespace himforge
