#include "himforge/segment.hpp"

#include <algorithm>
#include <cmath>

namespace himforge {

GrayImage sigmoid_map(const ScalarField& logits, bool allow_unbounded) {
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double x = logits[i];
    if (std::isnan(x)) throw InvalidArgument("NaN logit");
    if (std::isinf(x) && !allow_unbounded) throw InvalidArgument("infinite logit");
    // the branch avoids overflow of exp for large |x|
    out[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  return GrayImage(logits.width(), logits.height(), std::move(out));
}

BinaryMask threshold_probability(const GrayImage& prob, double t) {
  if (!(t >= 0.0 && t < 1.0)) throw InvalidArgument("threshold must lie in [0,1)");
  BinaryMask m(prob.width(), prob.height());
  for (std::size_t i = 0; i < prob.size(); ++i) m[i] = prob[i] > t ? 1 : 0;
  return m;
}

double otsu_threshold(const GrayImage& img, int bins) {
  if (bins < 2) throw InvalidArgument("Otsu needs at least 2 bins");
  std::vector<double> hist(static_cast<std::size_t>(bins), 0.0);
  for (double v : img.samples()) hist[std::min(bins - 1, static_cast<int>(v * bins))] += 1.0;
  const auto occupied = std::count_if(hist.begin(), hist.end(), [](double h) { return h > 0.0; });
  if (occupied < 2) throw DegenerateHistogram("image histogram has a single occupied bin");

  const double total = static_cast<double>(img.size());
  double sum_all = 0.0;
  for (int b = 0; b < bins; ++b) sum_all += b * hist[b];
  double w0 = 0.0, sum0 = 0.0;
  double best = -1.0;
  int best_split = 1;
  // split k puts bins [0,k) in the lower class
  for (int k = 1; k < bins; ++k) {
    w0 += hist[k - 1];
    sum0 += (k - 1) * hist[k - 1];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double m0 = sum0 / w0;
    const double m1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      best_split = k;
    }
  }
  return (best_split - 0.5) / bins;
}

GrayImage box_blur(const GrayImage& img, int radius) {
  if (radius < 0) throw InvalidArgument("blur radius must be >= 0");
  if (radius == 0) return img;
  const int w = img.width(), h = img.height();
  std::vector<double> tmp(img.size()), out(img.size());
  const double norm = 1.0 / (2 * radius + 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int d = -radius; d <= radius; ++d) s += img.at(std::clamp(x + d, 0, w - 1), y);
      tmp[static_cast<std::size_t>(y) * w + x] = s * norm;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int d = -radius; d <= radius; ++d) s += tmp[static_cast<std::size_t>(std::clamp(y + d, 0, h - 1)) * w + x];
      out[static_cast<std::size_t>(y) * w + x] = s * norm;
    }
  }
  return GrayImage::clamped(w, h, std::move(out));
}

GrayImage baseline_segment(const GrayImage& img, const BaselineParams& params) {
  if (params.smoothing_passes < 0) throw InvalidArgument("smoothing passes must be >= 0");
  GrayImage work = clahe(img, params.clahe);
  for (int i = 0; i < params.smoothing_passes; ++i) work = box_blur(work, params.smoothing_radius);
  const double t = otsu_threshold(work);
  std::vector<double> out(work.size());
  for (std::size_t i = 0; i < work.size(); ++i) {
    const bool above = work[i] > t;
    out[i] = (above != params.invert) ? 1.0 : 0.0;
  }
  return GrayImage(work.width(), work.height(), std::move(out));
}

GrayImage mask_to_probability(const BinaryMask& mask) {
  std::vector<double> out(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] ? 1.0 : 0.0;
  return GrayImage(mask.width(), mask.height(), std::move(out));
}

}  // namespace himforge
