#pragma once

// Deterministic orthographic ray caster. Each scene is traced once per pixel
// centre; the beauty and label passes share the same nearest-hit buffer.

#include <array>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "himforge/core.hpp"
#include "himforge/geometry.hpp"
#include "himforge/scene.hpp"

namespace himforge {

/// Möller-Trumbore; two-sided. Returns the ray parameter of a hit with t > 0.
std::optional<double> intersect_triangle(const Ray& ray, const Vec3& a, const Vec3& b, const Vec3& c);

struct SurfaceHit {
  double t;
  Vec3 normal;  // unit, outward
};

std::optional<SurfaceHit> intersect_sphere(const Ray& ray, const Vec3& center, double radius);
/// Capsule around segment [a,b]; `ray.dir` must be unit length.
std::optional<SurfaceHit> intersect_capsule(const Ray& ray, const Vec3& a, const Vec3& b, double radius);

struct MeshHit {
  double t;
  int face;
};

/// Uniform 3-D grid over a triangle mesh, traversed with a 3-D DDA.
/// Nearest hit wins; equal distances resolve to the lower face index.
class MeshAccel {
 public:
  explicit MeshAccel(const TriangleMesh& mesh);

  std::optional<MeshHit> intersect(const Ray& ray,
                                   double t_max = std::numeric_limits<double>::infinity()) const;
  /// Same tie rule, testing every face; reference path for the grid.
  std::optional<MeshHit> intersect_all_faces(const Ray& ray) const;

  Vec3 face_normal(int face) const;
  const TriangleMesh& mesh() const { return mesh_; }
  std::array<int, 3> dims() const { return dims_; }

 private:
  std::optional<double> hit_face(const Ray& ray, int face) const;

  TriangleMesh mesh_;
  Vec3 lo_;
  Vec3 cell_;
  std::array<int, 3> dims_{1, 1, 1};
  std::vector<std::vector<int>> cells_;
};

struct RenderOutput {
  GrayImage beauty;
  BinaryMask label_mask;
  /// Visible instances, densely renumbered in ascending instance order.
  LabelMap id_map;
  /// visible_instances[id - 1] is the 0-based scene instance index behind id.
  std::vector<int> visible_instances;
};

struct RenderOptions {
  int workers = 1;
};

GrayImage render_beauty(const SceneSpec& scene, const RenderOptions& opts = {});
std::pair<BinaryMask, LabelMap> render_label(const SceneSpec& scene, const RenderOptions& opts = {});
RenderOutput render_pair(const SceneSpec& scene, const RenderOptions& opts = {});

/// Pre-clamp beauty values; exposed for linearity and apex checks.
ScalarField render_radiance(const SceneSpec& scene, const RenderOptions& opts = {});

/// 3x3 square erosion; neighbours outside the raster do not constrain.
BinaryMask erode3x3(const BinaryMask& mask);

/// World-space centre of pixel (px, py); row 0 is the top of the crop.
Vec3 pixel_center(const Camera& cam, int px, int py);

}  // namespace himforge
