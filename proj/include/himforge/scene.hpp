#pragma once

// Declarative virtual specimens: particle templates, placement maps, recipes
// and the SceneSpec consumed by the renderer.

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "himforge/fractal.hpp"
#include "himforge/geometry.hpp"
#include "himforge/rng.hpp"

namespace himforge {

struct Sphere {
  double radius = 1.0;
  friend bool operator==(const Sphere&, const Sphere&) = default;
};

/// Horizontal capsule: a segment of `length` along the local x axis swept by `radius`.
struct Capsule {
  double radius = 1.0;
  double length = 1.0;
  friend bool operator==(const Capsule&, const Capsule&) = default;
};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  friend bool operator==(const TriangleMesh&, const TriangleMesh&) = default;
};

using Shape = std::variant<Sphere, Capsule, TriangleMesh>;

struct Diffuse {
  double albedo = 0.8;
  friend bool operator==(const Diffuse&, const Diffuse&) = default;
};

struct Glossy {
  double albedo = 0.8;
  double specular_strength = 0.5;
  double shininess = 20.0;
  friend bool operator==(const Glossy&, const Glossy&) = default;
};

struct EdgeEffect {
  double albedo = 0.6;
  double edge_gain = 0.8;
  double edge_exponent = 1.5;
  friend bool operator==(const EdgeEffect&, const EdgeEffect&) = default;
};

using Shader = std::variant<Diffuse, Glossy, EdgeEffect>;

struct ParticleTemplate {
  std::string id;
  Shape shape;
  Shader shader;
  friend bool operator==(const ParticleTemplate&, const ParticleTemplate&) = default;
};

/// Throws InvalidArgument when dimensions or mesh topology are invalid.
void validate(const ParticleTemplate& t);

/// Radius of the smallest vertical-axis cylinder around the local origin
/// enclosing the shape at unit scale.
double planar_radius(const Shape& s);
/// Largest |z| of the shape at unit scale.
double half_height(const Shape& s);

/// Closed, outward-oriented irregular polyhedron built from a subdivided
/// icosahedron with low-frequency radial lumps; `flatten` scales z.
TriangleMesh make_rock_mesh(double radius, int subdivisions, double lumpiness, double flatten,
                            std::uint64_t seed);

/// Square, axis-aligned region in substrate coordinates (origin bottom-left).
struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double side = 1.0;
  friend bool operator==(const Rect&, const Rect&) = default;
};

struct DistributionMap {
  std::vector<Vec3> centers;  // z is a normalized height in [0,1]
  Rect crop;
  double extent = 1.0;
};

class PlacementInfeasible : public Error {
 public:
  PlacementInfeasible(const std::string& what, std::size_t achieved)
      : Error(what), achieved_(achieved) {}
  std::size_t achieved() const { return achieved_; }

 private:
  std::size_t achieved_;
};

inline constexpr std::size_t kPlacementAttemptBudget = 1'000'000;

/// Uniform centers with pairwise planar distance >= min_separation, plus a
/// random square crop whose side is extent * uniform(zoom_lo, zoom_hi).
DistributionMap sample_distribution(std::size_t count, double extent, double min_separation,
                                    double zoom_lo, double zoom_hi, Rng& rng);

struct Instance {
  std::string template_id;
  Vec3 center;
  double scale = 1.0;
  double rotation = 0.0;  // radians about +z
  friend bool operator==(const Instance&, const Instance&) = default;
};

/// Chains k instances so that each successive bounding circle sits at
/// (r_i + r_{i+1}) * (1 - contact_slack) from its predecessor in a random
/// planar direction. Member i uses base[i % base.size()]; the first sits at the
/// local origin. Instances carry unit scale and z = 0.
std::vector<Instance> agglomerate(const std::vector<ParticleTemplate>& library,
                                  const std::vector<std::string>& base, int k, double contact_slack,
                                  Rng& rng);

struct Light {
  Vec3 direction{0.0, 0.0, 1.0};  // unit vector pointing toward the light
  double brightness = 1.0;
  friend bool operator==(const Light&, const Light&) = default;
};

struct Camera {
  Rect crop;
  int resolution = 507;
  friend bool operator==(const Camera&, const Camera&) = default;
};

struct DirtSpec {
  bool enabled = false;
  DirtParams params;
};

struct Degradation {
  int target = 2031;
  double sigma = 0.03;
};

struct SceneSpec {
  double extent = 1.0;
  double substrate_albedo = 0.25;
  std::vector<ParticleTemplate> templates;
  std::vector<Instance> instances;
  Light light;
  Camera camera;
  DirtSpec dirt;
  std::uint64_t master_seed = 0;
  std::vector<std::string> lineage;

  const ParticleTemplate& find_template(const std::string& id) const;
  /// Stream from which per-scene textures are re-derived at render time.
  Rng rng() const { return Rng(master_seed, lineage); }
};

void validate(const SceneSpec& s);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct Agglomeration {
  double probability = 0.0;
  int min_size = 2;
  int max_size = 4;
  double contact_slack = 0.1;
};

struct Recipe {
  std::string name = "custom";
  double extent = 2000.0;  // scene units are nanometres
  double substrate_albedo = 0.25;
  int count_min = 50;
  int count_max = 100;
  double min_separation = 0.0;
  Range scale{0.8, 1.25};  // log-uniform
  std::vector<ParticleTemplate> templates;
  std::vector<double> weights;
  Agglomeration agglomeration;
  Range brightness{0.8, 1.2};
  Vec3 light_direction{0.0, 0.0, 1.0};
  double dirt_probability = 0.5;
  DirtParams dirt;
  Range zoom{0.6, 1.0};
  Range sink{0.0, 0.3};
  int resolution = 507;
  Degradation degrade;
};

void validate(const Recipe& r);

/// Draws one SceneSpec from the recipe. Every random choice comes from a
/// fixed-label fork of `rng`, so the result depends only on (recipe, rng lineage).
SceneSpec build_scene(const Recipe& recipe, const Rng& rng);

/// Built-in recipes: "sio2", "tio2", "ag".
Recipe preset_recipe(const std::string& name);

}  // namespace himforge
