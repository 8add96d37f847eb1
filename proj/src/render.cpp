#include "himforge/render.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "himforge/fractal.hpp"
#include "himforge/parallel.hpp"

namespace himforge {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const Vec3 kView{0.0, 0.0, 1.0};

bool slab(const Ray& ray, const Vec3& lo, const Vec3& hi, double& t0, double& t1) {
  t0 = 0.0;
  t1 = kInf;
  const double o[3] = {ray.origin.x, ray.origin.y, ray.origin.z};
  const double d[3] = {ray.dir.x, ray.dir.y, ray.dir.z};
  const double l[3] = {lo.x, lo.y, lo.z};
  const double h[3] = {hi.x, hi.y, hi.z};
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < l[a] || o[a] > h[a]) return false;
      continue;
    }
    double ta = (l[a] - o[a]) / d[a];
    double tb = (h[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

double component(const Vec3& v, int a) { return a == 0 ? v.x : (a == 1 ? v.y : v.z); }

}  // namespace

std::optional<double> intersect_triangle(const Ray& ray, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 p = cross(ray.dir, e2);
  const double det = dot(e1, p);
  if (std::abs(det) < 1e-300) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = ray.origin - a;
  const double u = dot(s, p) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 q = cross(s, e1);
  const double v = dot(ray.dir, q) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = dot(e2, q) * inv;
  if (!(t > 0.0)) return std::nullopt;
  return t;
}

std::optional<SurfaceHit> intersect_sphere(const Ray& ray, const Vec3& center, double radius) {
  const Vec3 oc = ray.origin - center;
  const double a = dot(ray.dir, ray.dir);
  const double b = dot(oc, ray.dir);
  const double c = dot(oc, oc) - radius * radius;
  const double disc = b * b - a * c;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  double t = (-b - sq) / a;
  if (!(t > 0.0)) t = (-b + sq) / a;
  if (!(t > 0.0)) return std::nullopt;
  return SurfaceHit{t, (ray.at(t) - center) / radius};
}

std::optional<SurfaceHit> intersect_capsule(const Ray& ray, const Vec3& pa, const Vec3& pb, double radius) {
  const Vec3 ba = pb - pa;
  const Vec3 oa = ray.origin - pa;
  const double baba = dot(ba, ba);
  const double bard = dot(ba, ray.dir);
  const double baoa = dot(ba, oa);
  const double rdoa = dot(ray.dir, oa);
  const double oaoa = dot(oa, oa);
  const double a = baba - bard * bard;
  const double b = baba * rdoa - baoa * bard;
  const double c = baba * oaoa - baoa * baoa - radius * radius * baba;
  const double h = b * b - a * c;
  std::optional<double> t_hit;
  if (h >= 0.0) {
    if (a > 0.0) {
      const double t = (-b - std::sqrt(h)) / a;
      const double y = baoa + t * bard;
      if (t > 0.0 && y > 0.0 && y < baba) t_hit = t;
    }
    if (!t_hit) {
      // nearest spherical cap
      double best = kInf;
      for (const Vec3& cap : {pa, pb}) {
        const Vec3 oc = ray.origin - cap;
        const double cb = dot(ray.dir, oc);
        const double cc = dot(oc, oc) - radius * radius;
        const double ch = cb * cb - cc;
        if (ch < 0.0) continue;
        const double t = -cb - std::sqrt(ch);
        if (t > 0.0 && t < best) best = t;
      }
      if (best < kInf) t_hit = best;
    }
  }
  if (!t_hit) return std::nullopt;
  const Vec3 p = ray.at(*t_hit);
  const double s = std::clamp(dot(p - pa, ba) / baba, 0.0, 1.0);
  return SurfaceHit{*t_hit, normalized(p - (pa + ba * s))};
}

MeshAccel::MeshAccel(const TriangleMesh& mesh) : mesh_(mesh) {
  if (mesh_.faces.empty()) throw InvalidArgument("mesh has no faces");
  Vec3 lo{kInf, kInf, kInf};
  Vec3 hi{-kInf, -kInf, -kInf};
  for (const auto& v : mesh_.vertices) {
    lo = {std::min(lo.x, v.x), std::min(lo.y, v.y), std::min(lo.z, v.z)};
    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), std::max(hi.z, v.z)};
  }
  const Vec3 ext = hi - lo;
  const double pad = 1e-9 * std::max({ext.x, ext.y, ext.z, 1.0});
  lo = lo - Vec3{pad, pad, pad};
  hi = hi + Vec3{pad, pad, pad};
  const Vec3 size = hi - lo;
  const double volume = size.x * size.y * size.z;
  // about two faces per cell
  const double h = std::cbrt(volume * 2.0 / static_cast<double>(mesh_.faces.size()));
  for (int a = 0; a < 3; ++a) {
    dims_[a] = std::clamp(static_cast<int>(std::ceil(component(size, a) / h)), 1, 64);
  }
  lo_ = lo;
  cell_ = {size.x / dims_[0], size.y / dims_[1], size.z / dims_[2]};
  cells_.resize(static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2]);
  auto clamp_cell = [&](double v, int a) {
    const int c = static_cast<int>(std::floor((v - component(lo_, a)) / component(cell_, a)));
    return std::clamp(c, 0, dims_[a] - 1);
  };
  for (int f = 0; f < static_cast<int>(mesh_.faces.size()); ++f) {
    const auto& face = mesh_.faces[f];
    int c0[3], c1[3];
    for (int a = 0; a < 3; ++a) {
      double fl = kInf, fh = -kInf;
      for (int k = 0; k < 3; ++k) {
        const double v = component(mesh_.vertices[face[k]], a);
        fl = std::min(fl, v);
        fh = std::max(fh, v);
      }
      c0[a] = clamp_cell(fl, a);
      c1[a] = clamp_cell(fh, a);
    }
    // bounding-box registration is conservative; cell order keeps ascending face ids
    for (int z = c0[2]; z <= c1[2]; ++z)
      for (int y = c0[1]; y <= c1[1]; ++y)
        for (int x = c0[0]; x <= c1[0]; ++x)
          cells_[(static_cast<std::size_t>(z) * dims_[1] + y) * dims_[0] + x].push_back(f);
  }
}

std::optional<double> MeshAccel::hit_face(const Ray& ray, int face) const {
  const auto& f = mesh_.faces[face];
  return intersect_triangle(ray, mesh_.vertices[f[0]], mesh_.vertices[f[1]], mesh_.vertices[f[2]]);
}

Vec3 MeshAccel::face_normal(int face) const {
  const auto& f = mesh_.faces[face];
  const Vec3 a = mesh_.vertices[f[0]], b = mesh_.vertices[f[1]], c = mesh_.vertices[f[2]];
  return normalized(cross(b - a, c - a));
}

std::optional<MeshHit> MeshAccel::intersect_all_faces(const Ray& ray) const {
  std::optional<MeshHit> best;
  for (int f = 0; f < static_cast<int>(mesh_.faces.size()); ++f) {
    if (auto t = hit_face(ray, f); t && (!best || *t < best->t)) best = MeshHit{*t, f};
  }
  return best;
}

std::optional<MeshHit> MeshAccel::intersect(const Ray& ray, double t_max) const {
  const Vec3 hi = lo_ + Vec3{cell_.x * dims_[0], cell_.y * dims_[1], cell_.z * dims_[2]};
  double t0, t1;
  if (!slab(ray, lo_, hi, t0, t1)) return std::nullopt;
  t1 = std::min(t1, t_max);
  if (t0 > t1) return std::nullopt;

  const Vec3 entry = ray.at(t0);
  int cell[3], step[3];
  double t_next[3], t_delta[3];
  for (int a = 0; a < 3; ++a) {
    const double d = component(ray.dir, a);
    const double w = component(cell_, a);
    const double l = component(lo_, a);
    cell[a] = std::clamp(static_cast<int>(std::floor((component(entry, a) - l) / w)), 0, dims_[a] - 1);
    if (d > 0.0) {
      step[a] = 1;
      t_next[a] = (l + (cell[a] + 1) * w - component(ray.origin, a)) / d;
      t_delta[a] = w / d;
    } else if (d < 0.0) {
      step[a] = -1;
      t_next[a] = (l + cell[a] * w - component(ray.origin, a)) / d;
      t_delta[a] = -w / d;
    } else {
      step[a] = 0;
      t_next[a] = kInf;
      t_delta[a] = kInf;
    }
  }

  std::optional<MeshHit> best;
  for (;;) {
    const auto& faces = cells_[(static_cast<std::size_t>(cell[2]) * dims_[1] + cell[1]) * dims_[0] + cell[0]];
    for (int f : faces) {
      const auto t = hit_face(ray, f);
      if (!t || *t > t_max) continue;
      if (!best || *t < best->t || (*t == best->t && f < best->face)) best = MeshHit{*t, f};
    }
    const int axis = t_next[0] < t_next[1] ? (t_next[0] < t_next[2] ? 0 : 2) : (t_next[1] < t_next[2] ? 1 : 2);
    const double cell_exit = t_next[axis];
    // a hit exactly on the exit plane may tie with a face only registered ahead
    if (best && best->t < cell_exit) return best;
    if (cell_exit > t1) break;
    cell[axis] += step[axis];
    if (cell[axis] < 0 || cell[axis] >= dims_[axis]) break;
    t_next[axis] += t_delta[axis];
  }
  return best;
}

namespace {

struct Prepared {
  enum class Kind { kSphere, kCapsule, kMesh };
  Kind kind;
  Vec3 center;
  double scale;
  double rotation;
  double planar;  // world-space bounding radius in xy
  double top;     // highest z reached
  const Shader* shader;
  double radius = 0.0;
  Vec3 seg_a, seg_b;
  std::shared_ptr<const MeshAccel> accel;
};

struct PixelHit {
  int instance = -1;  // 0-based, -1 = substrate
  Vec3 normal;
  Vec3 point;
};

class SceneTracer {
 public:
  explicit SceneTracer(const SceneSpec& scene) : scene_(scene) {
    validate(scene);
    std::vector<std::pair<std::string, std::shared_ptr<const MeshAccel>>> accels;
    for (const auto& t : scene.templates) {
      if (const auto* m = std::get_if<TriangleMesh>(&t.shape)) {
        accels.emplace_back(t.id, std::make_shared<MeshAccel>(*m));
      }
    }
    top_ = 0.0;
    for (const auto& inst : scene.instances) {
      const ParticleTemplate& t = scene.find_template(inst.template_id);
      Prepared p;
      p.center = inst.center;
      p.scale = inst.scale;
      p.rotation = inst.rotation;
      p.planar = planar_radius(t.shape) * inst.scale;
      p.top = inst.center.z + half_height(t.shape) * inst.scale;
      p.shader = &t.shader;
      if (const auto* s = std::get_if<Sphere>(&t.shape)) {
        p.kind = Prepared::Kind::kSphere;
        p.radius = s->radius * inst.scale;
      } else if (const auto* c = std::get_if<Capsule>(&t.shape)) {
        p.kind = Prepared::Kind::kCapsule;
        p.radius = c->radius * inst.scale;
        const Vec3 half = rotate_z({0.5 * c->length * inst.scale, 0.0, 0.0}, inst.rotation);
        p.seg_a = inst.center - half;
        p.seg_b = inst.center + half;
      } else {
        p.kind = Prepared::Kind::kMesh;
        for (const auto& [id, acc] : accels) {
          if (id == t.id) p.accel = acc;
        }
      }
      top_ = std::max(top_, p.top);
      prepared_.push_back(std::move(p));
    }
    build_grid();
  }

  PixelHit trace(const Vec3& xy) const {
    PixelHit out;
    out.point = {xy.x, xy.y, 0.0};
    out.normal = kView;
    const Ray ray{{xy.x, xy.y, top_ + 1.0}, {0.0, 0.0, -1.0}};
    // substrate plane z = 0 bounds the search
    double best_t = ray.origin.z;
    const int gx = cell_of(xy.x - crop_.x0, gx_);
    const int gy = cell_of(xy.y - crop_.y0, gy_);
    if (gx < 0 || gy < 0) return out;
    for (int idx : grid_[static_cast<std::size_t>(gy) * gx_ + gx]) {
      const Prepared& p = prepared_[idx];
      const double ex = xy.x - p.center.x, ey = xy.y - p.center.y;
      if (ex * ex + ey * ey > p.planar * p.planar) continue;
      std::optional<SurfaceHit> hit = intersect(p, ray);
      // ascending candidate order keeps the lower instance on exact ties
      if (hit && hit->t < best_t) {
        best_t = hit->t;
        out.instance = idx;
        out.normal = hit->normal;
        out.point = ray.at(hit->t);
      }
    }
    if (dot(out.normal, kView) < 0.0) out.normal = -out.normal;
    return out;
  }

  const std::vector<Prepared>& prepared() const { return prepared_; }

 private:
  static std::optional<SurfaceHit> intersect(const Prepared& p, const Ray& ray) {
    switch (p.kind) {
      case Prepared::Kind::kSphere:
        return intersect_sphere(ray, p.center, p.radius);
      case Prepared::Kind::kCapsule:
        return intersect_capsule(ray, p.seg_a, p.seg_b, p.radius);
      case Prepared::Kind::kMesh: {
        const Ray local{rotate_z(ray.origin - p.center, -p.rotation) / p.scale,
                        rotate_z(ray.dir, -p.rotation) / p.scale};
        const auto hit = p.accel->intersect(local);
        if (!hit) return std::nullopt;
        return SurfaceHit{hit->t, rotate_z(p.accel->face_normal(hit->face), p.rotation)};
      }
    }
    return std::nullopt;
  }

  int cell_of(double offset, int n) const {
    const int c = static_cast<int>(std::floor(offset / cell_size_));
    return (c < 0 || c >= n) ? -1 : c;
  }

  void build_grid() {
    crop_ = scene_.camera.crop;
    const int n = static_cast<int>(std::clamp<std::size_t>(
        static_cast<std::size_t>(std::sqrt(static_cast<double>(prepared_.size())) * 2.0), 1, 256));
    gx_ = gy_ = n;
    cell_size_ = crop_.side / n;
    grid_.assign(static_cast<std::size_t>(n) * n, {});
    for (int i = 0; i < static_cast<int>(prepared_.size()); ++i) {
      const Prepared& p = prepared_[i];
      const int x0 = std::clamp(static_cast<int>(std::floor((p.center.x - p.planar - crop_.x0) / cell_size_)), 0, n);
      const int x1 = std::clamp(static_cast<int>(std::floor((p.center.x + p.planar - crop_.x0) / cell_size_)), -1, n - 1);
      const int y0 = std::clamp(static_cast<int>(std::floor((p.center.y - p.planar - crop_.y0) / cell_size_)), 0, n);
      const int y1 = std::clamp(static_cast<int>(std::floor((p.center.y + p.planar - crop_.y0) / cell_size_)), -1, n - 1);
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) grid_[static_cast<std::size_t>(y) * n + x].push_back(i);
    }
  }

  const SceneSpec& scene_;
  std::vector<Prepared> prepared_;
  double top_ = 0.0;
  Rect crop_;
  int gx_ = 1, gy_ = 1;
  double cell_size_ = 1.0;
  std::vector<std::vector<int>> grid_;
};

Grid<PixelHit> trace_scene(const SceneTracer& tracer, const Camera& cam, int workers) {
  Grid<PixelHit> hits(cam.resolution, cam.resolution);
  parallel_for(static_cast<std::size_t>(cam.resolution), workers, [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < cam.resolution; ++x) hits.at(x, y) = tracer.trace(pixel_center(cam, x, y));
  });
  return hits;
}

double shade(const Shader& shader, const Vec3& n, const Light& light) {
  const double ndl = std::max(0.0, dot(n, light.direction));
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        double v = s.albedo * ndl * light.brightness;
        if constexpr (std::is_same_v<T, Glossy>) {
          const Vec3 h = normalized(light.direction + kView);
          v += s.specular_strength * std::pow(std::max(0.0, dot(n, h)), s.shininess) * light.brightness;
        } else if constexpr (std::is_same_v<T, EdgeEffect>) {
          v += s.edge_gain * std::pow(1.0 - std::abs(dot(n, kView)), s.edge_exponent) * light.brightness;
        }
        return v;
      },
      shader);
}

class DirtSampler {
 public:
  explicit DirtSampler(const SceneSpec& scene) : extent_(scene.extent) {
    if (scene.dirt.enabled) {
      Rng rng = scene.rng().fork("dirt-texture");
      texture_ = make_dirt_texture(scene.dirt.params, rng);
    }
  }

  // Bilinear lookup; texture row 0 lies along the top edge (y = extent).
  double at(double x, double y) const {
    if (texture_.size() == 0) return 0.0;
    const int side = texture_.width();
    const double u = std::clamp(x / extent_, 0.0, 1.0) * (side - 1);
    const double v = std::clamp(1.0 - y / extent_, 0.0, 1.0) * (side - 1);
    const int x0 = std::min(static_cast<int>(u), side - 2);
    const int y0 = std::min(static_cast<int>(v), side - 2);
    const double fx = u - x0, fy = v - y0;
    return (1 - fy) * ((1 - fx) * texture_.at(x0, y0) + fx * texture_.at(x0 + 1, y0)) +
           fy * ((1 - fx) * texture_.at(x0, y0 + 1) + fx * texture_.at(x0 + 1, y0 + 1));
  }

 private:
  double extent_;
  GrayImage texture_;
};

ScalarField radiance_from(const SceneSpec& scene, const SceneTracer& tracer, const Grid<PixelHit>& hits) {
  const DirtSampler dirt(scene);
  ScalarField out(hits.width(), hits.height());
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const PixelHit& h = hits[i];
    if (h.instance < 0) {
      out[i] = scene.substrate_albedo * scene.light.brightness + dirt.at(h.point.x, h.point.y);
    } else {
      out[i] = shade(*tracer.prepared()[h.instance].shader, h.normal, scene.light);
    }
  }
  return out;
}

std::pair<BinaryMask, LabelMap> labels_from(const Grid<PixelHit>& hits, std::size_t n_instances,
                                            std::vector<int>* visible) {
  std::vector<std::uint32_t> dense(n_instances, 0);
  std::vector<bool> seen(n_instances, false);
  for (std::size_t i = 0; i < hits.size(); ++i) {
    if (hits[i].instance >= 0) seen[hits[i].instance] = true;
  }
  std::uint32_t next = 0;
  for (std::size_t k = 0; k < n_instances; ++k) {
    if (seen[k]) {
      dense[k] = ++next;
      if (visible) visible->push_back(static_cast<int>(k));
    }
  }
  std::vector<std::uint32_t> ids(hits.size(), 0);
  BinaryMask raw(hits.width(), hits.height());
  for (std::size_t i = 0; i < hits.size(); ++i) {
    if (hits[i].instance >= 0) {
      ids[i] = dense[hits[i].instance];
      raw[i] = 1;
    }
  }
  return {erode3x3(raw), LabelMap(hits.width(), hits.height(), std::move(ids))};
}

}  // namespace

Vec3 pixel_center(const Camera& cam, int px, int py) {
  const double step = cam.crop.side / cam.resolution;
  return {cam.crop.x0 + (px + 0.5) * step, cam.crop.y0 + cam.crop.side - (py + 0.5) * step, 0.0};
}

BinaryMask erode3x3(const BinaryMask& mask) {
  BinaryMask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.test(x, y)) continue;
      bool keep = true;
      for (int dy = -1; dy <= 1 && keep; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (mask.contains(x + dx, y + dy) && !mask.test(x + dx, y + dy)) {
            keep = false;
            break;
          }
        }
      }
      out.set(x, y, keep);
    }
  }
  return out;
}

ScalarField render_radiance(const SceneSpec& scene, const RenderOptions& opts) {
  const SceneTracer tracer(scene);
  return radiance_from(scene, tracer, trace_scene(tracer, scene.camera, opts.workers));
}

GrayImage render_beauty(const SceneSpec& scene, const RenderOptions& opts) {
  return GrayImage::clamped(render_radiance(scene, opts));
}

std::pair<BinaryMask, LabelMap> render_label(const SceneSpec& scene, const RenderOptions& opts) {
  const SceneTracer tracer(scene);
  return labels_from(trace_scene(tracer, scene.camera, opts.workers), scene.instances.size(), nullptr);
}

RenderOutput render_pair(const SceneSpec& scene, const RenderOptions& opts) {
  const SceneTracer tracer(scene);
  const Grid<PixelHit> hits = trace_scene(tracer, scene.camera, opts.workers);
  RenderOutput out;
  out.beauty = GrayImage::clamped(radiance_from(scene, tracer, hits));
  auto [mask, ids] = labels_from(hits, scene.instances.size(), &out.visible_instances);
  out.label_mask = std::move(mask);
  out.id_map = std::move(ids);
  return out;
}

}  // namespace himforge
