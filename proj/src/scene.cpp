#include "himforge/scene.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <unordered_map>

namespace himforge {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Dims {
  double planar;
  double half_h;
};

Dims shape_dims(const Shape& s) {
  return std::visit(
      [](const auto& sh) -> Dims {
        using T = std::decay_t<decltype(sh)>;
        if constexpr (std::is_same_v<T, Sphere>) {
          return {sh.radius, sh.radius};
        } else if constexpr (std::is_same_v<T, Capsule>) {
          return {0.5 * sh.length + sh.radius, sh.radius};
        } else {
          Dims d{0.0, 0.0};
          for (const auto& v : sh.vertices) {
            d.planar = std::max(d.planar, std::hypot(v.x, v.y));
            d.half_h = std::max(d.half_h, std::abs(v.z));
          }
          return d;
        }
      },
      s);
}

void check_range(const Range& r, const char* what, bool positive) {
  if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
    throw InvalidArgument(std::string("recipe range '") + what + "' is not ordered");
  }
  if (positive && !(r.lo > 0.0)) {
    throw InvalidArgument(std::string("recipe range '") + what + "' must be positive");
  }
}

// Spatial hash for the rejection sampler; cells are min_separation wide so a
// candidate only needs to look at the 3x3 neighbouring cells.
class SeparationIndex {
 public:
  explicit SeparationIndex(double cell) : cell_(cell) {}

  bool accepts(double x, double y) const {
    const auto [cx, cy] = key(x, y);
    const double min2 = cell_ * cell_;
    for (long long dy = -1; dy <= 1; ++dy) {
      for (long long dx = -1; dx <= 1; ++dx) {
        auto it = cells_.find(pack(cx + dx, cy + dy));
        if (it == cells_.end()) continue;
        for (const auto& p : it->second) {
          const double ex = p.first - x;
          const double ey = p.second - y;
          if (ex * ex + ey * ey < min2) return false;
        }
      }
    }
    return true;
  }

  void insert(double x, double y) {
    const auto [cx, cy] = key(x, y);
    cells_[pack(cx, cy)].emplace_back(x, y);
  }

 private:
  std::pair<long long, long long> key(double x, double y) const {
    return {static_cast<long long>(std::floor(x / cell_)), static_cast<long long>(std::floor(y / cell_))};
  }
  static long long pack(long long a, long long b) { return a * 1'000'003LL + b; }

  double cell_;
  std::unordered_map<long long, std::vector<std::pair<double, double>>> cells_;
};

double log_uniform(Rng& rng, const Range& r) {
  if (r.lo == r.hi) return r.lo;
  return std::exp(rng.uniform(std::log(r.lo), std::log(r.hi)));
}

Rect sample_crop(double extent, double zoom_lo, double zoom_hi, Rng& rng) {
  Rect crop;
  crop.side = extent * rng.uniform(zoom_lo, zoom_hi);
  if (zoom_lo == zoom_hi) crop.side = extent * zoom_lo;
  crop.x0 = rng.uniform(0.0, extent - crop.side);
  crop.y0 = rng.uniform(0.0, extent - crop.side);
  return crop;
}

}  // namespace

double planar_radius(const Shape& s) { return shape_dims(s).planar; }
double half_height(const Shape& s) { return shape_dims(s).half_h; }

void validate(const ParticleTemplate& t) {
  if (t.id.empty()) throw InvalidArgument("template id must be nonempty");
  std::visit(
      [&](const auto& sh) {
        using T = std::decay_t<decltype(sh)>;
        if constexpr (std::is_same_v<T, Sphere>) {
          if (!(sh.radius > 0.0)) throw InvalidArgument("sphere radius must be > 0: " + t.id);
        } else if constexpr (std::is_same_v<T, Capsule>) {
          if (!(sh.radius > 0.0) || !(sh.length > 0.0)) {
            throw InvalidArgument("capsule radius/length must be > 0: " + t.id);
          }
        } else {
          if (sh.faces.empty()) throw InvalidArgument("mesh has no faces: " + t.id);
          const int n = static_cast<int>(sh.vertices.size());
          for (const auto& f : sh.faces) {
            for (int v : f) {
              if (v < 0 || v >= n) throw InvalidArgument("mesh face index out of range: " + t.id);
            }
            const Vec3 a = sh.vertices[f[0]], b = sh.vertices[f[1]], c = sh.vertices[f[2]];
            if (!(norm(cross(b - a, c - a)) > 1e-12)) {
              throw InvalidArgument("mesh has a degenerate face: " + t.id);
            }
          }
        }
      },
      t.shape);
}

TriangleMesh make_rock_mesh(double radius, int subdivisions, double lumpiness, double flatten,
                            std::uint64_t seed) {
  const double p = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, p, 0}, {1, p, 0},  {-1, -p, 0}, {1, -p, 0}, {0, -1, p},  {0, 1, p},
                         {0, -1, -p}, {0, 1, -p}, {p, 0, -1},  {p, 0, 1},  {-p, 0, -1}, {-p, 0, 1}};
  for (auto& x : v) x = normalized(x);
  std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                       {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                       {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                       {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back(normalized(v[a] + v[b]));
      const int idx = static_cast<int>(v.size()) - 1;
      mid.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(f.size() * 4);
    for (const auto& t : f) {
      const int ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    f = std::move(next);
  }
  Rng rng(seed, {"rock"});
  struct Lump {
    Vec3 dir;
    double amp;
  };
  std::vector<Lump> lumps(5);
  for (auto& l : lumps) {
    l.dir = normalized(Vec3{rng.normal(), rng.normal(), rng.normal()});
    l.amp = rng.uniform(-1.0, 1.0);
  }
  TriangleMesh mesh;
  mesh.faces = f;
  mesh.vertices.reserve(v.size());
  for (const auto& d : v) {
    double r = 1.0;
    for (const auto& l : lumps) {
      const double c = dot(d, l.dir);
      r += lumpiness * l.amp * c * c;
    }
    r = std::max(r, 0.3);
    mesh.vertices.push_back({d.x * r * radius, d.y * r * radius, d.z * r * radius * flatten});
  }
  return mesh;
}

DistributionMap sample_distribution(std::size_t count, double extent, double min_separation,
                                    double zoom_lo, double zoom_hi, Rng& rng) {
  if (!(extent > 0.0)) throw InvalidArgument("extent must be > 0");
  if (!(min_separation >= 0.0)) throw InvalidArgument("min_separation must be >= 0");
  if (!(zoom_lo > 0.0 && zoom_lo <= zoom_hi && zoom_hi <= 1.0)) {
    throw InvalidArgument("zoom range must satisfy 0 < lo <= hi <= 1");
  }
  DistributionMap map;
  map.extent = extent;
  map.centers.reserve(count);
  if (min_separation == 0.0) {
    for (std::size_t i = 0; i < count; ++i) {
      const double x = rng.uniform(0.0, extent);
      const double y = rng.uniform(0.0, extent);
      map.centers.push_back({x, y, rng.uniform()});
    }
  } else {
    SeparationIndex index(min_separation);
    std::size_t attempts = 0;
    while (map.centers.size() < count) {
      if (++attempts > kPlacementAttemptBudget) {
        throw PlacementInfeasible("placement infeasible: placed " +
                                      std::to_string(map.centers.size()) + " of " +
                                      std::to_string(count) + " centers",
                                  map.centers.size());
      }
      const double x = rng.uniform(0.0, extent);
      const double y = rng.uniform(0.0, extent);
      if (!index.accepts(x, y)) continue;
      index.insert(x, y);
      map.centers.push_back({x, y, rng.uniform()});
    }
  }
  map.crop = sample_crop(extent, zoom_lo, zoom_hi, rng);
  return map;
}

std::vector<Instance> agglomerate(const std::vector<ParticleTemplate>& library,
                                  const std::vector<std::string>& base, int k, double contact_slack,
                                  Rng& rng) {
  if (k < 1) throw InvalidArgument("cluster size must be >= 1");
  if (base.empty()) throw InvalidArgument("agglomerate needs at least one template id");
  auto radius_of = [&](const std::string& id) {
    for (const auto& t : library) {
      if (t.id == id) return planar_radius(t.shape);
    }
    throw InvalidArgument("unknown template id: " + id);
  };
  std::vector<Instance> out;
  out.reserve(static_cast<std::size_t>(k));
  Vec3 pos{0.0, 0.0, 0.0};
  double prev_r = 0.0;
  for (int i = 0; i < k; ++i) {
    const std::string& id = base[static_cast<std::size_t>(i) % base.size()];
    const double r = radius_of(id);
    if (i > 0) {
      const double angle = rng.uniform(0.0, kTwoPi);
      const double d = (prev_r + r) * (1.0 - contact_slack);
      pos = pos + Vec3{std::cos(angle) * d, std::sin(angle) * d, 0.0};
    }
    out.push_back({id, pos, 1.0, rng.uniform(0.0, kTwoPi)});
    prev_r = r;
  }
  return out;
}

const ParticleTemplate& SceneSpec::find_template(const std::string& id) const {
  for (const auto& t : templates) {
    if (t.id == id) return t;
  }
  throw InvalidArgument("scene references undeclared template: " + id);
}

void validate(const SceneSpec& s) {
  if (!(s.extent > 0.0)) throw InvalidArgument("scene extent must be > 0");
  if (!(s.light.brightness > 0.0)) throw InvalidArgument("light brightness must be > 0");
  if (s.camera.resolution < 16) throw InvalidArgument("camera resolution must be >= 16");
  if (!(s.camera.crop.side > 0.0)) throw InvalidArgument("camera crop must be nonempty");
  for (const auto& t : s.templates) validate(t);
  for (const auto& i : s.instances) {
    s.find_template(i.template_id);
    if (!(i.scale > 0.0)) throw InvalidArgument("instance scale must be > 0");
  }
}

void validate(const Recipe& r) {
  if (!(r.extent > 0.0)) throw InvalidArgument("recipe extent must be > 0");
  if (r.count_min < 0 || r.count_min > r.count_max) throw InvalidArgument("particle count range invalid");
  if (!(r.min_separation >= 0.0)) throw InvalidArgument("min_separation must be >= 0");
  check_range(r.scale, "scale", true);
  check_range(r.brightness, "brightness", true);
  check_range(r.zoom, "zoom", true);
  check_range(r.sink, "sink", false);
  if (r.zoom.hi > 1.0) throw InvalidArgument("zoom must be <= 1");
  if (r.sink.lo < 0.0 || r.sink.hi > 1.0) throw InvalidArgument("sink must lie in [0,1]");
  if (r.templates.empty()) throw InvalidArgument("recipe needs at least one template");
  if (r.weights.size() != r.templates.size()) throw InvalidArgument("one weight per template required");
  double sum = 0.0;
  for (double w : r.weights) {
    if (!(w >= 0.0)) throw InvalidArgument("weights must be >= 0");
    sum += w;
  }
  if (!(sum > 0.0)) throw InvalidArgument("weights must have positive sum");
  for (const auto& t : r.templates) validate(t);
  const auto& a = r.agglomeration;
  if (!(a.probability >= 0.0 && a.probability <= 1.0)) throw InvalidArgument("cluster probability must be in [0,1]");
  if (a.min_size < 1 || a.min_size > a.max_size) throw InvalidArgument("cluster size range invalid");
  if (!(r.dirt_probability >= 0.0 && r.dirt_probability <= 1.0)) throw InvalidArgument("dirt probability must be in [0,1]");
  if (r.resolution < 16) throw InvalidArgument("resolution must be >= 16");
  if (r.degrade.target < 1 || !(r.degrade.sigma >= 0.0)) throw InvalidArgument("degradation parameters invalid");
  if (!(norm(r.light_direction) > 0.0)) throw InvalidArgument("light direction must be nonzero");
}

SceneSpec build_scene(const Recipe& recipe, const Rng& rng) {
  validate(recipe);
  SceneSpec scene;
  scene.extent = recipe.extent;
  scene.substrate_albedo = recipe.substrate_albedo;
  scene.templates = recipe.templates;
  scene.master_seed = rng.master_seed();
  scene.lineage = rng.lineage();

  Rng count_rng = rng.fork("count");
  Rng place_rng = rng.fork("distribution");
  Rng template_rng = rng.fork("templates");
  Rng scale_rng = rng.fork("scale");
  Rng rotation_rng = rng.fork("rotation");
  Rng sink_rng = rng.fork("sink");
  Rng cluster_rng = rng.fork("agglomerate");
  Rng light_rng = rng.fork("light");
  Rng dirt_rng = rng.fork("dirt");

  const auto count = static_cast<std::size_t>(count_rng.uniform_int(recipe.count_min, recipe.count_max));
  const DistributionMap map = sample_distribution(count, recipe.extent, recipe.min_separation,
                                                  recipe.zoom.lo, recipe.zoom.hi, place_rng);

  auto rest_z = [&](const std::string& id, double scale, double sink_fraction) {
    const double hz = half_height(scene.find_template(id).shape) * scale;
    // bottom of the shape sits sink_fraction of its height below the substrate
    return hz - sink_fraction * 2.0 * hz;
  };
  auto inside = [&](const Vec3& c) {
    return c.x >= 0.0 && c.y >= 0.0 && c.x <= recipe.extent && c.y <= recipe.extent;
  };

  const auto& cluster = recipe.agglomeration;
  for (const Vec3& c : map.centers) {
    if (cluster.probability > 0.0 && cluster_rng.bernoulli(cluster.probability)) {
      const int k = static_cast<int>(cluster_rng.uniform_int(cluster.min_size, cluster.max_size));
      std::vector<std::string> base;
      for (int i = 0; i < k; ++i) base.push_back(recipe.templates[pick_weighted(template_rng, recipe.weights)].id);
      const double s = log_uniform(scale_rng, recipe.scale);
      for (auto inst : agglomerate(recipe.templates, base, k, cluster.contact_slack, cluster_rng)) {
        inst.center = Vec3{c.x + s * inst.center.x, c.y + s * inst.center.y, 0.0};
        inst.scale = s;
        inst.center.z = rest_z(inst.template_id, s, sink_rng.uniform(recipe.sink.lo, recipe.sink.hi));
        if (inside(inst.center)) scene.instances.push_back(std::move(inst));
      }
    } else {
      Instance inst;
      inst.template_id = recipe.templates[pick_weighted(template_rng, recipe.weights)].id;
      inst.scale = log_uniform(scale_rng, recipe.scale);
      inst.rotation = rotation_rng.uniform(0.0, kTwoPi);
      // the map's normalized height selects the sink depth
      const double sink = recipe.sink.lo + c.z * (recipe.sink.hi - recipe.sink.lo);
      inst.center = Vec3{c.x, c.y, rest_z(inst.template_id, inst.scale, sink)};
      scene.instances.push_back(std::move(inst));
    }
  }

  scene.light.direction = normalized(recipe.light_direction);
  scene.light.brightness = recipe.brightness.lo == recipe.brightness.hi
                               ? recipe.brightness.lo
                               : light_rng.uniform(recipe.brightness.lo, recipe.brightness.hi);
  scene.camera.crop = map.crop;
  scene.camera.resolution = recipe.resolution;
  scene.dirt.enabled = dirt_rng.bernoulli(recipe.dirt_probability);
  scene.dirt.params = recipe.dirt;
  return scene;
}

Recipe preset_recipe(const std::string& name) {
  Recipe r;
  r.name = name;
  // 1982 nm over 2031 px reproduces the 0.976 nm pixel edge at full crop
  r.extent = 1982.0;
  r.resolution = 507;
  r.degrade = {2031, 0.03};
  if (name == "sio2") {
    r.substrate_albedo = 0.25;
    r.count_min = 60;
    r.count_max = 120;
    r.min_separation = 0.0;
    r.scale = {0.9, 1.1};
    r.templates = {
        {"sio2_large", Sphere{45.0}, Diffuse{0.95}},
        {"sio2_small", Sphere{22.0}, Diffuse{0.9}},
        {"sio2_bright", Sphere{30.0}, Glossy{0.9, 0.4, 20.0}},
    };
    r.weights = {0.45, 0.4, 0.15};
    r.zoom = {0.7, 1.0};
    r.dirt_probability = 0.5;
  } else if (name == "tio2") {
    r.substrate_albedo = 0.2;
    r.count_min = 30;
    r.count_max = 60;
    r.scale = {0.7, 1.4};
    for (int i = 0; i < 4; ++i) {
      r.templates.push_back({"tio2_rock" + std::to_string(i),
                             make_rock_mesh(28.0 + 4.0 * i, 2, 0.35, 0.7, 11 + static_cast<std::uint64_t>(i)),
                             EdgeEffect{0.45, 0.8, 1.5}});
      r.weights.push_back(1.0);
    }
    r.agglomeration = {0.6, 2, 5, 0.15};
    r.zoom = {0.6, 1.0};
    r.dirt_probability = 0.3;
  } else if (name == "ag") {
    r.substrate_albedo = 0.2;
    r.count_min = 15;
    r.count_max = 35;
    r.scale = {0.8, 1.25};
    r.templates = {
        {"ag_rod_short", Capsule{14.0, 120.0}, Glossy{0.85, 0.5, 30.0}},
        {"ag_rod", Capsule{12.0, 240.0}, Glossy{0.85, 0.5, 30.0}},
        {"ag_wire", Capsule{10.0, 480.0}, Glossy{0.85, 0.5, 30.0}},
    };
    r.weights = {0.4, 0.4, 0.2};
    r.zoom = {0.7, 1.0};
    r.dirt_probability = 0.2;
  } else {
    throw InvalidArgument("unknown preset recipe: " + name);
  }
  return r;
}

}  // namespace himforge
