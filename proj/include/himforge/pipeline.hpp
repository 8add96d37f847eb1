#pragma once

// Instrument-realism degradation and training-time pre-processing.

#include <utility>
#include <vector>

#include "himforge/core.hpp"
#include "himforge/rng.hpp"

namespace himforge {

/// Align-corners bilinear resampling: destination index i samples source
/// coordinate i * (src_len - 1) / (dst_len - 1); single-pixel axes map to 0.
GrayImage resize_bilinear(const GrayImage& img, int new_width, int new_height);
/// Nearest-neighbour resampling with the same coordinate mapping.
BinaryMask resize_nearest(const BinaryMask& mask, int new_width, int new_height);
LabelMap resize_nearest(const LabelMap& labels, int new_width, int new_height);

/// Adds independent N(0, sigma^2) per pixel, then clamps to [0,1].
GrayImage add_gaussian_noise(const GrayImage& img, double sigma, Rng& rng);

/// Min-max stretch to [0,1]; a constant image maps to all zeros.
GrayImage normalize_minmax(const GrayImage& img);

struct ClaheParams {
  int tiles_x = 8;
  int tiles_y = 8;
  double clip_limit = 2.0;
  int bins = 256;
};

/// Per-tile lookup tables (tiles_y rows of tiles_x tables, `bins` entries each).
/// A tile whose raw histogram has a single occupied bin gets an empty table,
/// meaning identity.
struct ClaheMappings {
  int tiles_x = 0;
  int tiles_y = 0;
  int bins = 0;
  std::vector<std::vector<double>> tables;
};

ClaheMappings clahe_mappings(const GrayImage& img, const ClaheParams& params);

/// Contrast-limited adaptive histogram equalization.
///
/// Each tile histogram is clipped at clip_limit * tile_pixels / bins, the
/// excess spread evenly over all bins, and mapped through
/// (cdf - cdf[0]) / (tile_pixels - cdf[0]). Pixels blend the four nearest
/// tile mappings bilinearly by tile centre; border tiles extend outward.
GrayImage clahe(const GrayImage& img, const ClaheParams& params = {});

struct AugmentSpec {
  int rotation_quarter_turns = 0;  // counter-clockwise, 0..3
  bool flip_horizontal = false;
  bool flip_vertical = false;
  double zoom = 1.0;
  double intensity_scale = 1.0;
  double intensity_shift = 0.0;
  double noise_sigma = 0.0;
};

void validate(const AugmentSpec& spec);

/// Geometric ops hit image (bilinear zoom) and mask (nearest) identically;
/// intensity scale/shift and noise apply to the image only. Zoom scales about
/// the centre and keeps dimensions, padding with zeros when shrinking.
std::pair<GrayImage, BinaryMask> augment(const GrayImage& img, const BinaryMask& mask,
                                         const AugmentSpec& spec, Rng& rng);

/// Draws a random AugmentSpec: any rotation/flip, zoom in [zoom_lo, zoom_hi],
/// intensity scale in [0.9, 1.1], shift in [-0.05, 0.05].
AugmentSpec random_augment_spec(Rng& rng, double zoom_lo, double zoom_hi, double noise_sigma);

/// Bilinear resize to target x target, then Gaussian noise.
GrayImage degrade(const GrayImage& img, int target, double sigma, Rng& rng);

}  // namespace himforge
