#pragma once

#include "himforge/core.hpp"
#include "himforge/pipeline.hpp"

namespace himforge {

/// Probability threshold applied to every probability map.
inline constexpr double kDefaultThreshold = 0.51;

class DegenerateHistogram : public Error {
 public:
  using Error::Error;
};

/// p(x) = 1 / (1 + exp(-x)) per pixel. Unless `allow_unbounded`, infinite
/// inputs are rejected; NaN is always rejected.
GrayImage sigmoid_map(const ScalarField& logits, bool allow_unbounded = false);

/// Particle iff p > t (strict). t must lie in [0, 1).
BinaryMask threshold_probability(const GrayImage& prob, double t = kDefaultThreshold);

/// Otsu threshold over `bins` equal-width bins of [0,1].
///
/// Returns the centre of the last bin of the lower class for the split that
/// maximizes between-class variance; ties go to the lower split.
double otsu_threshold(const GrayImage& img, int bins = 256);

/// Separable box blur of the given radius with clamped borders.
GrayImage box_blur(const GrayImage& img, int radius);

struct BaselineParams {
  ClaheParams clahe;
  int smoothing_radius = 4;
  int smoothing_passes = 2;
  bool invert = false;
};

/// CLAHE, repeated box blur, Otsu; emitted as a {0,1} probability map.
GrayImage baseline_segment(const GrayImage& img, const BaselineParams& params = {});

GrayImage mask_to_probability(const BinaryMask& mask);

}  // namespace himforge
