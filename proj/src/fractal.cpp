#include "himforge/fractal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace himforge {
namespace {

int side_for(int levels) {
  if (levels < 0 || levels > 14) throw InvalidArgument("diamond-square level must be in [0,14]");
  return (1 << levels) + 1;
}

}  // namespace

HeightField::HeightField(int levels) : levels_(levels), values_(side_for(levels), side_for(levels)) {}

HeightField diamond_square(int levels, const Corners& corners, double roughness, double decay,
                           Rng& rng) {
  if (roughness < 0.0) throw InvalidArgument("roughness must be >= 0");
  if (!(decay > 0.0 && decay <= 1.0)) throw InvalidArgument("decay must be in (0,1]");
  HeightField f(levels);
  const int last = f.side() - 1;
  f.at(0, 0) = corners[0];
  f.at(last, 0) = corners[1];
  f.at(0, last) = corners[2];
  f.at(last, last) = corners[3];

  double amp = roughness;
  auto displacement = [&] { return rng.uniform(-amp, amp); };

  for (int step = last; step > 1; step /= 2) {
    const int half = step / 2;
    for (int y = half; y < f.side(); y += step) {
      for (int x = half; x < f.side(); x += step) {
        const double mean = 0.25 * (f.at(x - half, y - half) + f.at(x + half, y - half) +
                                     f.at(x - half, y + half) + f.at(x + half, y + half));
        f.at(x, y) = mean + displacement();
      }
    }
    for (int y = 0; y < f.side(); y += half) {
      const int x0 = (y / half) % 2 == 0 ? half : 0;
      for (int x = x0; x < f.side(); x += step) {
        double sum = 0.0;
        int n = 0;
        if (x - half >= 0) { sum += f.at(x - half, y); ++n; }
        if (x + half <= last) { sum += f.at(x + half, y); ++n; }
        if (y - half >= 0) { sum += f.at(x, y - half); ++n; }
        if (y + half <= last) { sum += f.at(x, y + half); ++n; }
        f.at(x, y) = sum / n + displacement();
      }
    }
    amp *= decay;
  }
  return f;
}

GrayImage dirt_overlay(const HeightField& field, double threshold, double gain) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw InvalidArgument("threshold must be in [0,1]");
  if (!(gain >= 0.0)) throw InvalidArgument("gain must be >= 0");
  const auto values = field.values().values();
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  std::vector<double> out(values.size(), 0.0);
  // averaging leaves ulp-level ripples on a flat field; don't stretch those to [0,1]
  const double scale = std::max(std::abs(lo), std::abs(*hi_it));
  if (range > 1e-12 * scale && range > 0.0) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double v = (values[i] - lo) / range;
      out[i] = std::clamp(gain * std::max(0.0, v - threshold), 0.0, 1.0);
    }
  }
  return GrayImage(field.side(), field.side(), std::move(out));
}

GrayImage make_dirt_texture(const DirtParams& params, Rng& rng) {
  Corners c{};
  for (double& v : c) v = rng.uniform();
  const HeightField f = diamond_square(params.levels, c, params.roughness, params.decay, rng);
  return dirt_overlay(f, params.threshold, params.gain);
}

}  // namespace himforge
