#pragma once

// Brute-force reference implementations and random generators shared by the
// unit tests and the acceptance runner. Nothing here calls the library code it
// is meant to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <vector>

#include "himforge/analyze.hpp"
#include "himforge/core.hpp"
#include "himforge/rng.hpp"

namespace oracle {

using himforge::BinaryMask;
using himforge::Rng;

inline BinaryMask random_mask(Rng& rng, int w, int h, double density) {
  BinaryMask m(w, h);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform() < density ? 1 : 0;
  return m;
}

/// Random blobs: a union of discs, so components have interesting shapes.
inline BinaryMask random_blobs(Rng& rng, int w, int h, int discs, double r_lo, double r_hi) {
  BinaryMask m(w, h);
  for (int k = 0; k < discs; ++k) {
    const double cx = rng.uniform(0, w), cy = rng.uniform(0, h), r = rng.uniform(r_lo, r_hi);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m.set(x, y, true);
      }
    }
  }
  return m;
}

inline BinaryMask disc_mask(int w, int h, double cx, double cy, double r) {
  BinaryMask m(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m.set(x, y, true);
    }
  }
  return m;
}

/// BFS flood fill; labels in raster order of each component's first pixel.
inline std::vector<std::uint32_t> flood_fill_labels(const BinaryMask& m, int conn, std::uint32_t* count = nullptr) {
  const int w = m.width(), h = m.height();
  std::vector<std::uint32_t> lab(m.size(), 0);
  std::uint32_t next = 0;
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      if (!m.test(x0, y0) || lab[static_cast<std::size_t>(y0) * w + x0] != 0) continue;
      ++next;
      std::deque<std::pair<int, int>> q{{x0, y0}};
      lab[static_cast<std::size_t>(y0) * w + x0] = next;
      while (!q.empty()) {
        const auto [x, y] = q.front();
        q.pop_front();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            if (conn == 4 && dx != 0 && dy != 0) continue;
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h || !m.test(nx, ny)) continue;
            auto& l = lab[static_cast<std::size_t>(ny) * w + nx];
            if (l == 0) {
              l = next;
              q.emplace_back(nx, ny);
            }
          }
        }
      }
    }
  }
  if (count != nullptr) *count = next;
  return lab;
}

inline BinaryMask area_filter(const BinaryMask& m, std::size_t min_area, int conn) {
  std::uint32_t n = 0;
  const auto lab = flood_fill_labels(m, conn, &n);
  std::vector<std::size_t> area(n + 1, 0);
  for (auto l : lab) ++area[l];
  BinaryMask out(m.width(), m.height());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = (lab[i] != 0 && area[lab[i]] >= min_area) ? 1 : 0;
  return out;
}

/// Exhaustive nearest-background squared distance.
inline std::vector<std::int64_t> brute_sq_edt(const BinaryMask& m) {
  const int w = m.width(), h = m.height();
  std::vector<std::pair<int, int>> bg;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!m.test(x, y)) bg.emplace_back(x, y);
    }
  }
  std::vector<std::int64_t> d(m.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!m.test(x, y)) continue;
      std::int64_t best = std::numeric_limits<std::int64_t>::max();
      for (const auto& [bx, by] : bg) {
        const std::int64_t dx = x - bx, dy = y - by;
        best = std::min(best, dx * dx + dy * dy);
      }
      d[static_cast<std::size_t>(y) * w + x] = best;
    }
  }
  return d;
}

/// Textbook iterated geodesic erosion until stability.
inline himforge::ScalarField iterative_reconstruction(const himforge::ScalarField& relief, const BinaryMask& dom,
                                                      double h, int conn) {
  const int w = relief.width(), hh = relief.height();
  himforge::ScalarField r = relief;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (dom[i]) r[i] = relief[i] + h;
  }
  for (bool changed = true; changed;) {
    changed = false;
    for (int y = 0; y < hh; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!dom.test(x, y)) continue;
        double lo = r.at(x, y);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (conn == 4 && dx != 0 && dy != 0) continue;
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= hh || !dom.test(nx, ny)) continue;
            lo = std::min(lo, r.at(nx, ny));
          }
        }
        const double v = std::max(relief.at(x, y), lo);
        if (v != r.at(x, y)) {
          r.at(x, y) = v;
          changed = true;
        }
      }
    }
  }
  return r;
}

/// Count of regional-minimum plateaus of `f` inside `dom`.
inline std::size_t count_regional_minima(const himforge::ScalarField& f, const BinaryMask& dom, int conn) {
  const int w = f.width(), h = f.height();
  std::vector<char> seen(f.size(), 0);
  std::size_t count = 0;
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      if (!dom.test(x0, y0) || seen[static_cast<std::size_t>(y0) * w + x0]) continue;
      const double v = f.at(x0, y0);
      bool minimal = true;
      std::deque<std::pair<int, int>> q{{x0, y0}};
      seen[static_cast<std::size_t>(y0) * w + x0] = 1;
      while (!q.empty()) {
        const auto [x, y] = q.front();
        q.pop_front();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if ((dx == 0 && dy == 0) || (conn == 4 && dx != 0 && dy != 0)) continue;
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h || !dom.test(nx, ny)) continue;
            const double nv = f.at(nx, ny);
            if (nv < v) minimal = false;
            auto& s = seen[static_cast<std::size_t>(ny) * w + nx];
            if (nv == v && !s) {
              s = 1;
              q.emplace_back(nx, ny);
            }
          }
        }
      }
      if (minimal) ++count;
    }
  }
  return count;
}

inline himforge::ConfusionCounts tally(const BinaryMask& pred, const BinaryMask& gt) {
  himforge::ConfusionCounts c;
  for (int y = 0; y < pred.height(); ++y) {
    for (int x = 0; x < pred.width(); ++x) {
      const bool p = pred.test(x, y), g = gt.test(x, y);
      c.tp += p && g;
      c.tn += !p && !g;
      c.fp += p && !g;
      c.fn += !p && g;
    }
  }
  return c;
}

/// Two isotropic Gaussian blobs in `dim` dimensions with centres `sep` sigmas apart.
inline std::vector<std::vector<double>> two_blobs(Rng& rng, int per_blob, int dim, double sep,
                                                  std::vector<int>* labels) {
  std::vector<std::vector<double>> pts;
  for (int b = 0; b < 2; ++b) {
    for (int i = 0; i < per_blob; ++i) {
      std::vector<double> p(dim);
      for (int d = 0; d < dim; ++d) p[d] = rng.normal() + (b == 1 && d == 0 ? sep : 0.0);
      pts.push_back(std::move(p));
      if (labels != nullptr) labels->push_back(b);
    }
  }
  return pts;
}

/// Textbook silhouette: s(i) = (b - a) / max(a, b).
inline double silhouette(const std::vector<std::array<double, 2>>& y, const std::vector<int>& lab) {
  const std::size_t n = y.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double same = 0.0, other = 0.0;
    int ns = 0, no = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = std::sqrt((y[i][0] - y[j][0]) * (y[i][0] - y[j][0]) + (y[i][1] - y[j][1]) * (y[i][1] - y[j][1]));
      if (lab[j] == lab[i]) {
        same += d;
        ++ns;
      } else {
        other += d;
        ++no;
      }
    }
    const double a = same / ns, b = other / no;
    total += (b - a) / std::max(a, b);
  }
  return total / n;
}

}  // namespace oracle
