#pragma once

// Segmentation clean-up: area opening, exact Euclidean distance transform,
// dynamics-controlled watershed and connected-component labeling.

#include "himforge/core.hpp"

namespace himforge {

class NoBackground : public Error {
 public:
  using Error::Error;
};

enum class Connectivity { kFour = 4, kEight = 8 };

Connectivity connectivity_from_int(int c);

/// Dense labels numbered in raster order of each component's first pixel.
LabelMap connected_components(const BinaryMask& mask, Connectivity conn = Connectivity::kEight);

/// Removes components with fewer than `min_area` pixels; others are untouched.
BinaryMask area_opening(const BinaryMask& mask, std::size_t min_area,
                        Connectivity conn = Connectivity::kEight);

/// Exact Euclidean distance from every foreground pixel to the nearest
/// background pixel (the image border is not background). Separable
/// lower-envelope parabola sweeps; values are sqrt of integer squared distances.
ScalarField distance_transform(const BinaryMask& mask);

/// Squared distances from the same sweep, as exact integers.
Grid<std::int64_t> squared_distance_transform(const BinaryMask& mask);

struct WatershedParams {
  double dynamic = 2.0;
  bool normalized = false;
  Connectivity connectivity = Connectivity::kEight;
};

/// Reconstruction by erosion of (relief + h) over relief, restricted to `domain`.
ScalarField hminima_suppress(const ScalarField& relief, const BinaryMask& domain, double h,
                             Connectivity conn);

/// Regional minima of `relief` inside `domain`, labeled densely in raster order.
LabelMap regional_minima(const ScalarField& relief, const BinaryMask& domain, Connectivity conn);

/// Distance-transform watershed.
///
/// Inverts the (optionally 0..255-normalized) distance map, suppresses minima
/// shallower than `dynamic` (a minimum whose dynamic equals it survives, up to
/// a 1e-12 relative tolerance), then priority-floods from the surviving minima
/// over the mask. Pixels are popped by (relief, raster index); every mask
/// pixel ends up in exactly one basin.
LabelMap watershed_split(const BinaryMask& mask, const WatershedParams& params);

/// area_opening followed by watershed_split. An empty mask yields count 0.
LabelMap postprocess_chain(const BinaryMask& mask, std::size_t min_area, const WatershedParams& params);

}  // namespace himforge
