#include "himforge/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

namespace himforge {
namespace {

constexpr std::int64_t kUnreached = std::numeric_limits<std::int64_t>::max();

struct Offset {
  int dx;
  int dy;
};

constexpr Offset kN4[] = {{0, -1}, {-1, 0}, {1, 0}, {0, 1}};
constexpr Offset kN8[] = {{-1, -1}, {0, -1}, {1, -1}, {-1, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}};

std::span<const Offset> neighbours(Connectivity c) {
  if (c == Connectivity::kFour) return kN4;
  return kN8;
}

class DisjointSet {
 public:
  std::uint32_t make() {
    parent_.push_back(static_cast<std::uint32_t>(parent_.size()));
    return parent_.back();
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::uint32_t> parent_;
};

// One-dimensional squared EDT over sites with finite cost (lower envelope of
// parabolas). Lines without any finite site stay unreached.
void edt_line(const std::vector<std::int64_t>& f, std::vector<std::int64_t>& d,
              std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kUnreached) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -std::numeric_limits<double>::infinity();
      z[1] = std::numeric_limits<double>::infinity();
      continue;
    }
    double s;
    for (;;) {
      const int p = v[k];
      s = (static_cast<double>(f[q] + static_cast<std::int64_t>(q) * q) -
           static_cast<double>(f[p] + static_cast<std::int64_t>(p) * p)) /
          (2.0 * (q - p));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    if (s <= z[k]) {
      // k == 0 and the new parabola dominates everywhere
      v[0] = q;
      z[0] = -std::numeric_limits<double>::infinity();
      z[1] = std::numeric_limits<double>::infinity();
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  if (k < 0) {
    std::fill(d.begin(), d.end(), kUnreached);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const std::int64_t diff = q - v[j];
    d[q] = diff * diff + f[v[j]];
  }
}

}  // namespace

Connectivity connectivity_from_int(int c) {
  if (c == 4) return Connectivity::kFour;
  if (c == 8) return Connectivity::kEight;
  throw InvalidArgument("connectivity must be 4 or 8");
}

LabelMap connected_components(const BinaryMask& mask, Connectivity conn) {
  const int w = mask.width(), h = mask.height();
  std::vector<std::uint32_t> prov(mask.size(), 0);
  DisjointSet sets;
  sets.make();  // slot 0 is background
  // raster-prior neighbours only
  static constexpr Offset kPrior4[] = {{-1, 0}, {0, -1}};
  static constexpr Offset kPrior8[] = {{-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
  const std::span<const Offset> prior =
      conn == Connectivity::kFour ? std::span<const Offset>(kPrior4) : std::span<const Offset>(kPrior8);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.test(x, y)) continue;
      std::uint32_t label = 0;
      for (const auto& o : prior) {
        const int nx = x + o.dx, ny = y + o.dy;
        if (!mask.contains(nx, ny)) continue;
        const std::uint32_t nl = prov[mask.index(nx, ny)];
        if (nl == 0) continue;
        if (label == 0) {
          label = nl;
        } else {
          sets.unite(label, nl);
        }
      }
      prov[mask.index(x, y)] = label != 0 ? label : sets.make();
    }
  }
  std::vector<std::uint32_t> dense_of_root(prov.size() + 1, 0);
  std::uint32_t next = 0;
  std::vector<std::uint32_t> ids(mask.size(), 0);
  for (std::size_t i = 0; i < prov.size(); ++i) {
    if (prov[i] == 0) continue;
    const std::uint32_t root = sets.find(prov[i]);
    if (dense_of_root[root] == 0) dense_of_root[root] = ++next;
    ids[i] = dense_of_root[root];
  }
  return LabelMap(w, h, std::move(ids));
}

BinaryMask area_opening(const BinaryMask& mask, std::size_t min_area, Connectivity conn) {
  if (min_area <= 1) return mask;
  const LabelMap cc = connected_components(mask, conn);
  std::vector<std::size_t> area(cc.count() + 1, 0);
  for (auto id : cc.ids()) ++area[id];
  BinaryMask out(mask.width(), mask.height());
  for (std::size_t i = 0; i < cc.size(); ++i) {
    const auto id = cc[i];
    out[i] = (id != 0 && area[id] >= min_area) ? 1 : 0;
  }
  return out;
}

Grid<std::int64_t> squared_distance_transform(const BinaryMask& mask) {
  const int w = mask.width(), h = mask.height();
  if (mask.size() > 0 && mask.count() == mask.size()) {
    throw NoBackground("distance transform needs at least one background pixel");
  }
  Grid<std::int64_t> g(w, h, 0);
  const int n = std::max(w, h);
  std::vector<std::int64_t> f, d;
  std::vector<int> v(static_cast<std::size_t>(n) + 1);
  std::vector<double> z(static_cast<std::size_t>(n) + 2);
  f.resize(h);
  d.resize(h);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = mask.test(x, y) ? kUnreached : 0;
    edt_line(f, d, v, z);
    for (int y = 0; y < h; ++y) g.at(x, y) = d[y];
  }
  f.resize(w);
  d.resize(w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[x] = g.at(x, y);
    edt_line(f, d, v, z);
    for (int x = 0; x < w; ++x) g.at(x, y) = d[x];
  }
  return g;
}

ScalarField distance_transform(const BinaryMask& mask) {
  const Grid<std::int64_t> sq = squared_distance_transform(mask);
  ScalarField out(mask.width(), mask.height());
  for (std::size_t i = 0; i < sq.size(); ++i) out[i] = std::sqrt(static_cast<double>(sq[i]));
  return out;
}

ScalarField hminima_suppress(const ScalarField& relief, const BinaryMask& domain, double h,
                             Connectivity conn) {
  if (!(h >= 0.0)) throw InvalidArgument("dynamic must be >= 0");
  if (!relief.same_shape(domain)) throw InvalidArgument("relief and domain differ in size");
  ScalarField r = relief;
  if (h == 0.0) return r;
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!domain[i]) continue;
    r[i] = relief[i] + h;
    pq.emplace(r[i], i);
  }
  const auto nb = neighbours(conn);
  const int w = relief.width();
  // bottleneck-path propagation: r(n) = max(relief(n), min(r(n), r(p)))
  while (!pq.empty()) {
    const auto [val, i] = pq.top();
    pq.pop();
    if (val != r[i]) continue;
    const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
    for (const auto& o : nb) {
      const int nx = x + o.dx, ny = y + o.dy;
      if (!domain.contains(nx, ny)) continue;
      const std::size_t j = domain.index(nx, ny);
      if (!domain[j]) continue;
      const double cand = std::max(relief[j], val);
      if (cand < r[j]) {
        r[j] = cand;
        pq.emplace(cand, j);
      }
    }
  }
  return r;
}

LabelMap regional_minima(const ScalarField& relief, const BinaryMask& domain, Connectivity conn) {
  const int w = relief.width(), h = relief.height();
  const auto nb = neighbours(conn);
  std::vector<std::uint32_t> ids(relief.size(), 0);
  std::vector<std::uint8_t> visited(relief.size(), 0);
  std::vector<std::size_t> plateau, stack;
  std::uint32_t next = 0;
  for (std::size_t start = 0; start < relief.size(); ++start) {
    if (!domain[start] || visited[start]) continue;
    const double level = relief[start];
    plateau.clear();
    stack.assign(1, start);
    visited[start] = 1;
    bool minimal = true;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      plateau.push_back(i);
      const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
      for (const auto& o : nb) {
        const int nx = x + o.dx, ny = y + o.dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
        if (!domain[j]) continue;
        if (relief[j] < level) minimal = false;
        if (relief[j] == level && !visited[j]) {
          visited[j] = 1;
          stack.push_back(j);
        }
      }
    }
    if (minimal) {
      ++next;
      for (std::size_t i : plateau) ids[i] = next;
    }
  }
  return LabelMap(w, h, std::move(ids));
}

LabelMap watershed_split(const BinaryMask& mask, const WatershedParams& params) {
  if (!(params.dynamic >= 0.0)) throw InvalidArgument("dynamic must be >= 0");
  ScalarField dist = distance_transform(mask);
  const double dmax = dist.empty() ? 0.0 : *std::max_element(dist.values().begin(), dist.values().end());
  if (dmax == 0.0) return LabelMap(mask.width(), mask.height());
  if (params.normalized) {
    for (double& v : dist.values()) v = v * 255.0 / dmax;
  }
  const double top = params.normalized ? 255.0 : dmax;
  ScalarField relief(mask.width(), mask.height(), 0.0);
  for (std::size_t i = 0; i < relief.size(); ++i) relief[i] = mask[i] ? top - dist[i] : 0.0;

  // minima whose dynamic equals the parameter must survive, so the raise stays
  // just below it
  const double h = std::max(0.0, params.dynamic * (1.0 - 1e-12) - 1e-12);
  const ScalarField suppressed = hminima_suppress(relief, mask, h, params.connectivity);
  const LabelMap seeds = regional_minima(suppressed, mask, params.connectivity);

  std::vector<std::uint32_t> ids(seeds.ids().begin(), seeds.ids().end());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] != 0) pq.emplace(suppressed[i], i);
  }
  const auto nb = neighbours(params.connectivity);
  const int w = mask.width();
  while (!pq.empty()) {
    const std::size_t i = pq.top().second;
    pq.pop();
    const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
    for (const auto& o : nb) {
      const int nx = x + o.dx, ny = y + o.dy;
      if (!mask.contains(nx, ny)) continue;
      const std::size_t j = mask.index(nx, ny);
      if (!mask[j] || ids[j] != 0) continue;
      ids[j] = ids[i];
      pq.emplace(suppressed[j], j);
    }
  }
  return LabelMap(mask.width(), mask.height(), std::move(ids));
}

LabelMap postprocess_chain(const BinaryMask& mask, std::size_t min_area, const WatershedParams& params) {
  const BinaryMask opened = area_opening(mask, min_area, params.connectivity);
  return watershed_split(opened, params);
}

}  // namespace himforge
