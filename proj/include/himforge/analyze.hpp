#pragma once

// Evaluation and statistics: pixel confusion metrics, per-particle
// measurements, size histograms and the patch-embedding comparison.

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "himforge/core.hpp"
#include "himforge/rng.hpp"

namespace himforge {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt);

inline constexpr double kGoodF1 = 0.7;

/// Metrics with a zero denominator are empty rather than 0.
struct MetricsReport {
  ConfusionCounts counts;
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;

  bool good() const { return f1.has_value() && *f1 >= kGoodF1; }
};

MetricsReport metrics(const ConfusionCounts& c);

struct BoundingBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;  // inclusive
  int y1 = 0;  // inclusive
};

struct ComponentStats {
  std::uint32_t id = 0;
  std::size_t area_px = 0;
  double sqrt_area_nm = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  BoundingBox bbox;
};

/// One record per nonzero id, ordered by id.
std::vector<ComponentStats> component_stats(const LabelMap& labels, const PixelScale& scale);

struct SizeHistogram {
  double bin_width = 0.0;
  std::vector<std::size_t> counts;  // bin k covers [k*w, (k+1)*w)
  std::size_t total = 0;
};

SizeHistogram size_histogram(const std::vector<ComponentStats>& stats, double bin_width);

/// Indices of strict local maxima of the counts (plateaus count once, at their
/// first bin), sorted by descending height then ascending index.
std::vector<std::size_t> histogram_peaks(const SizeHistogram& hist);

// ---------------------------------------------------------------------------
// Dataset comparison

enum class PatchMode { kSequential, kRandom };

struct Patch {
  int x = 0;
  int y = 0;
  GrayImage pixels;
};

/// Sequential mode tiles with stride `size` and drops partial tiles. Random
/// mode draws `count` patches at uniform positions fully inside the image.
std::vector<Patch> extract_patches(const GrayImage& img, int size, PatchMode mode, std::size_t count,
                                   const Rng& rng);

inline constexpr std::size_t kFeatureLength = 128;

/// Fixed layout: [0,64) 8x8 block means, [64,96) normalized 32-bin intensity
/// histogram over [0,1], [96,128) normalized 32-bin histogram of central
/// difference gradient magnitude over [0, 1/sqrt(2)] (borders clamped).
std::vector<double> patch_features(const GrayImage& patch);

struct PcaResult {
  std::vector<double> mean;
  std::vector<std::vector<double>> basis;  // k orthonormal rows, descending eigenvalue
  std::vector<double> eigenvalues;         // all d, descending
  std::vector<std::vector<double>> projected;
  double retained_variance = 0.0;

  std::size_t components() const { return basis.size(); }
  std::vector<double> reconstruct(const std::vector<double>& coords) const;
};

/// Covariance uses 1/n so the mean squared reconstruction error equals the sum
/// of discarded eigenvalues.
PcaResult pca(const std::vector<std::vector<double>>& vectors, double variance_target = 0.9);

struct TsneParams {
  double perplexity = 30.0;
  int iterations = 1000;
  double learning_rate = 200.0;
  double exaggeration = 12.0;
  int exaggeration_iterations = 250;
};

struct TsneResult {
  std::vector<std::array<double, 2>> positions;
  double kl_initial = 0.0;  // right after early exaggeration ends
  double kl_final = 0.0;
};

/// Conditional affinities p(j|i) with per-point bandwidths found by bisection.
/// Row-major n*n; every row sums to 1.
std::vector<double> tsne_conditional_affinities(const std::vector<std::vector<double>>& vectors,
                                                double perplexity);

/// Exact t-SNE. Requires n >= 10 and perplexity < (n - 1) / 3.
TsneResult tsne(const std::vector<std::vector<double>>& vectors, const TsneParams& params, const Rng& rng);

/// Mean silhouette coefficient of 2-D points under the given labels.
double silhouette_score(const std::vector<std::array<double, 2>>& points, const std::vector<int>& labels);

// ---------------------------------------------------------------------------
// Gallery

inline constexpr std::size_t kPaletteSize = 12;

std::array<std::uint8_t, 3> palette_color(std::uint32_t id);

struct GalleryEntry {
  std::string name;
  GrayImage image;
  std::optional<BinaryMask> mask;
  std::optional<LabelMap> labels;
  std::optional<MetricsReport> report;
};

/// Writes one overlay PNG per entry and index.html. Output depends only on
/// the entries.
void emit_gallery(const std::vector<GalleryEntry>& entries, const std::filesystem::path& out_dir);

}  // namespace himforge
