#include "himforge/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace himforge {
namespace {

double source_coord(int dst_index, int src_len, int dst_len) {
  if (dst_len == 1 || src_len == 1) return 0.0;
  return static_cast<double>(dst_index) * (src_len - 1) / (dst_len - 1);
}

void check_dims(int w, int h) {
  if (w < 1 || h < 1) throw InvalidArgument("resize dimensions must be >= 1");
}

template <typename T>
Grid<T> nearest(const Grid<T>& src, int w, int h) {
  check_dims(w, h);
  Grid<T> out(w, h);
  for (int y = 0; y < h; ++y) {
    const int sy = static_cast<int>(std::lround(source_coord(y, src.height(), h)));
    for (int x = 0; x < w; ++x) {
      const int sx = static_cast<int>(std::lround(source_coord(x, src.width(), w)));
      out.at(x, y) = src.at(sx, sy);
    }
  }
  return out;
}

// Bilinear sample with zero outside [0, w-1] x [0, h-1].
double sample_or_zero(const GrayImage& img, double sx, double sy) {
  if (sx < 0.0 || sy < 0.0 || sx > img.width() - 1 || sy > img.height() - 1) return 0.0;
  const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
  const int x1 = std::min(x0 + 1, img.width() - 1), y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = sx - x0, fy = sy - y0;
  return (1 - fy) * ((1 - fx) * img.at(x0, y0) + fx * img.at(x1, y0)) +
         fy * ((1 - fx) * img.at(x0, y1) + fx * img.at(x1, y1));
}

template <typename T>
Grid<T> rotate_ccw(const Grid<T>& g) {
  Grid<T> out(g.height(), g.width());
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) out.at(x, y) = g.at(g.width() - 1 - y, x);
  return out;
}

template <typename T>
Grid<T> flip(const Grid<T>& g, bool horizontal) {
  Grid<T> out(g.width(), g.height());
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x)
      out.at(x, y) = horizontal ? g.at(g.width() - 1 - x, y) : g.at(x, g.height() - 1 - y);
  return out;
}

struct TileSpan {
  int begin;
  int end;
  double center() const { return 0.5 * (begin + end - 1); }
};

std::vector<TileSpan> tile_spans(int len, int tiles) {
  std::vector<TileSpan> spans(static_cast<std::size_t>(tiles));
  for (int t = 0; t < tiles; ++t) {
    spans[t] = {static_cast<int>(static_cast<long long>(t) * len / tiles),
                static_cast<int>(static_cast<long long>(t + 1) * len / tiles)};
  }
  return spans;
}

// Neighbouring tile indices and the weight of the second one.
struct Blend {
  int lo;
  int hi;
  double w;
};

Blend blend_for(int p, const std::vector<TileSpan>& spans) {
  const int n = static_cast<int>(spans.size());
  if (p <= spans.front().center()) return {0, 0, 0.0};
  if (p >= spans.back().center()) return {n - 1, n - 1, 0.0};
  int i = 0;
  while (i + 1 < n && spans[i + 1].center() <= p) ++i;
  const double c0 = spans[i].center(), c1 = spans[i + 1].center();
  return {i, i + 1, (p - c0) / (c1 - c0)};
}

int bin_of(double v, int bins) { return std::min(bins - 1, static_cast<int>(v * bins)); }

}  // namespace

GrayImage resize_bilinear(const GrayImage& img, int new_width, int new_height) {
  check_dims(new_width, new_height);
  if (img.size() == 0) throw InvalidArgument("cannot resize an empty image");
  std::vector<double> out(static_cast<std::size_t>(new_width) * new_height);
  std::vector<int> x0s(new_width), x1s(new_width);
  std::vector<double> fxs(new_width);
  for (int x = 0; x < new_width; ++x) {
    const double sx = source_coord(x, img.width(), new_width);
    x0s[x] = std::min(static_cast<int>(sx), img.width() - 1);
    x1s[x] = std::min(x0s[x] + 1, img.width() - 1);
    fxs[x] = sx - x0s[x];
  }
  for (int y = 0; y < new_height; ++y) {
    const double sy = source_coord(y, img.height(), new_height);
    const int y0 = std::min(static_cast<int>(sy), img.height() - 1);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double fy = sy - y0;
    for (int x = 0; x < new_width; ++x) {
      const double fx = fxs[x];
      const double top = fx == 0.0 ? img.at(x0s[x], y0) : (1 - fx) * img.at(x0s[x], y0) + fx * img.at(x1s[x], y0);
      const double bot = fx == 0.0 ? img.at(x0s[x], y1) : (1 - fx) * img.at(x0s[x], y1) + fx * img.at(x1s[x], y1);
      out[static_cast<std::size_t>(y) * new_width + x] = fy == 0.0 ? top : (1 - fy) * top + fy * bot;
    }
  }
  return GrayImage::clamped(new_width, new_height, std::move(out));
}

BinaryMask resize_nearest(const BinaryMask& mask, int new_width, int new_height) {
  Grid<std::uint8_t> g = nearest<std::uint8_t>(mask, new_width, new_height);
  return BinaryMask(new_width, new_height, std::move(g).release());
}

LabelMap resize_nearest(const LabelMap& labels, int new_width, int new_height) {
  Grid<std::uint32_t> src(labels.width(), labels.height(),
                          std::vector<std::uint32_t>(labels.ids().begin(), labels.ids().end()));
  Grid<std::uint32_t> g = nearest(src, new_width, new_height);
  // downsampling can drop small ids, so compact them again
  std::vector<std::uint32_t> ids = std::move(g).release();
  std::vector<std::uint32_t> remap(labels.count() + 1, 0);
  for (auto v : ids) remap[v] = v == 0 ? 0 : 1;
  std::uint32_t next = 0;
  for (std::size_t k = 1; k < remap.size(); ++k) remap[k] = remap[k] ? ++next : 0;
  for (auto& v : ids) v = remap[v];
  return LabelMap(new_width, new_height, std::move(ids));
}

GrayImage add_gaussian_noise(const GrayImage& img, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw InvalidArgument("noise sigma must be >= 0");
  if (sigma == 0.0) return img;
  std::vector<double> out(img.samples().begin(), img.samples().end());
  for (double& v : out) v += sigma * rng.normal();
  return GrayImage::clamped(img.width(), img.height(), std::move(out));
}

GrayImage normalize_minmax(const GrayImage& img) {
  const auto s = img.samples();
  if (s.empty()) return img;
  const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  const double range = *hi - *lo;
  std::vector<double> out(s.size(), 0.0);
  if (range > 0.0) {
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = (s[i] - *lo) / range;
  }
  return GrayImage::clamped(img.width(), img.height(), std::move(out));
}

ClaheMappings clahe_mappings(const GrayImage& img, const ClaheParams& p) {
  if (p.tiles_x < 1 || p.tiles_y < 1) throw InvalidArgument("CLAHE tile counts must be >= 1");
  if (!(p.clip_limit > 1.0)) throw InvalidArgument("CLAHE clip limit must be > 1");
  if (p.bins < 2) throw InvalidArgument("CLAHE needs at least 2 bins");
  if (img.width() < p.tiles_x || img.height() < p.tiles_y) {
    throw InvalidArgument("image smaller than the CLAHE tiling");
  }
  const auto xs = tile_spans(img.width(), p.tiles_x);
  const auto ys = tile_spans(img.height(), p.tiles_y);
  ClaheMappings m{p.tiles_x, p.tiles_y, p.bins, {}};
  m.tables.reserve(static_cast<std::size_t>(p.tiles_x) * p.tiles_y);
  std::vector<double> hist(static_cast<std::size_t>(p.bins));
  for (const auto& ty : ys) {
    for (const auto& tx : xs) {
      std::fill(hist.begin(), hist.end(), 0.0);
      for (int y = ty.begin; y < ty.end; ++y)
        for (int x = tx.begin; x < tx.end; ++x) hist[bin_of(img.at(x, y), p.bins)] += 1.0;
      const double n = static_cast<double>(tx.end - tx.begin) * (ty.end - ty.begin);
      const auto occupied = std::count_if(hist.begin(), hist.end(), [](double h) { return h > 0.0; });
      if (occupied <= 1) {
        m.tables.emplace_back();
        continue;
      }
      const double limit = p.clip_limit * n / p.bins;
      double excess = 0.0;
      for (double& h : hist) {
        if (h > limit) {
          excess += h - limit;
          h = limit;
        }
      }
      const double spread = excess / p.bins;
      std::vector<double> table(static_cast<std::size_t>(p.bins));
      double cdf = 0.0;
      double cdf0 = 0.0;
      for (int b = 0; b < p.bins; ++b) {
        cdf += hist[b] + spread;
        if (b == 0) cdf0 = cdf;
        table[b] = cdf;
      }
      const double denom = n - cdf0;
      for (double& t : table) t = denom > 0.0 ? std::clamp((t - cdf0) / denom, 0.0, 1.0) : 0.0;
      m.tables.push_back(std::move(table));
    }
  }
  return m;
}

GrayImage clahe(const GrayImage& img, const ClaheParams& p) {
  const ClaheMappings m = clahe_mappings(img, p);
  const auto xs = tile_spans(img.width(), p.tiles_x);
  const auto ys = tile_spans(img.height(), p.tiles_y);
  auto map = [&](int tx, int ty, double v) {
    const auto& t = m.tables[static_cast<std::size_t>(ty) * p.tiles_x + tx];
    return t.empty() ? v : t[bin_of(v, p.bins)];
  };
  std::vector<Blend> bx(img.width());
  for (int x = 0; x < img.width(); ++x) bx[x] = blend_for(x, xs);
  std::vector<double> out(img.size());
  for (int y = 0; y < img.height(); ++y) {
    const Blend by = blend_for(y, ys);
    for (int x = 0; x < img.width(); ++x) {
      const double v = img.at(x, y);
      const Blend& b = bx[x];
      const double top = (1 - b.w) * map(b.lo, by.lo, v) + b.w * map(b.hi, by.lo, v);
      const double bot = (1 - b.w) * map(b.lo, by.hi, v) + b.w * map(b.hi, by.hi, v);
      out[static_cast<std::size_t>(y) * img.width() + x] = (1 - by.w) * top + by.w * bot;
    }
  }
  return GrayImage::clamped(img.width(), img.height(), std::move(out));
}

void validate(const AugmentSpec& s) {
  if (s.rotation_quarter_turns < 0 || s.rotation_quarter_turns > 3) {
    throw InvalidArgument("rotation must be 0-3 quarter turns");
  }
  if (!(s.zoom > 0.0)) throw InvalidArgument("zoom must be > 0");
  if (!(s.intensity_scale > 0.0)) throw InvalidArgument("intensity scale must be > 0");
  if (!(s.noise_sigma >= 0.0)) throw InvalidArgument("noise sigma must be >= 0");
}

std::pair<GrayImage, BinaryMask> augment(const GrayImage& img, const BinaryMask& mask,
                                         const AugmentSpec& spec, Rng& rng) {
  validate(spec);
  if (!mask.same_shape(img.width(), img.height())) throw InvalidArgument("image and mask differ in size");
  ScalarField g = img.field();
  Grid<std::uint8_t> m = mask;
  for (int k = 0; k < spec.rotation_quarter_turns; ++k) {
    g = rotate_ccw(g);
    m = rotate_ccw(m);
  }
  if (spec.flip_horizontal) {
    g = flip(g, true);
    m = flip(m, true);
  }
  if (spec.flip_vertical) {
    g = flip(g, false);
    m = flip(m, false);
  }
  if (spec.zoom != 1.0) {
    const GrayImage src(g);
    const Grid<std::uint8_t> msrc = m;
    const double cx = 0.5 * (src.width() - 1), cy = 0.5 * (src.height() - 1);
    for (int y = 0; y < src.height(); ++y) {
      const double sy = cy + (y - cy) / spec.zoom;
      for (int x = 0; x < src.width(); ++x) {
        const double sx = cx + (x - cx) / spec.zoom;
        g.at(x, y) = sample_or_zero(src, sx, sy);
        const long nx = std::lround(sx), ny = std::lround(sy);
        m.at(x, y) = msrc.contains(static_cast<int>(nx), static_cast<int>(ny))
                         ? msrc.at(static_cast<int>(nx), static_cast<int>(ny))
                         : 0;
      }
    }
  }
  for (double& v : g.values()) v = v * spec.intensity_scale + spec.intensity_shift;
  GrayImage out = GrayImage::clamped(std::move(g));
  out = add_gaussian_noise(out, spec.noise_sigma, rng);
  return {std::move(out), BinaryMask(m.width(), m.height(), std::move(m).release())};
}

AugmentSpec random_augment_spec(Rng& rng, double zoom_lo, double zoom_hi, double noise_sigma) {
  AugmentSpec s;
  s.rotation_quarter_turns = static_cast<int>(rng.uniform_int(0, 3));
  s.flip_horizontal = rng.bernoulli(0.5);
  s.flip_vertical = rng.bernoulli(0.5);
  s.zoom = rng.uniform(zoom_lo, zoom_hi);
  s.intensity_scale = rng.uniform(0.9, 1.1);
  s.intensity_shift = rng.uniform(-0.05, 0.05);
  s.noise_sigma = noise_sigma;
  return s;
}

GrayImage degrade(const GrayImage& img, int target, double sigma, Rng& rng) {
  GrayImage out = (img.width() == target && img.height() == target) ? img : resize_bilinear(img, target, target);
  return add_gaussian_noise(out, sigma, rng);
}

}  // namespace himforge
