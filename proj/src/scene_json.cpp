#include "himforge/scene_json.hpp"

#include <fstream>

namespace himforge {

using nlohmann::json;

namespace {

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

Range range_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidArgument("range must be a two-element array");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

json rect_json(const Rect& r) { return {{"x0", r.x0}, {"y0", r.y0}, {"side", r.side}}; }

Rect rect_from(const json& j) {
  return {j.at("x0").get<double>(), j.at("y0").get<double>(), j.at("side").get<double>()};
}

json shape_json(const Shape& s) {
  return std::visit(
      [](const auto& sh) -> json {
        using T = std::decay_t<decltype(sh)>;
        if constexpr (std::is_same_v<T, Sphere>) {
          return {{"type", "sphere"}, {"radius", sh.radius}};
        } else if constexpr (std::is_same_v<T, Capsule>) {
          return {{"type", "capsule"}, {"radius", sh.radius}, {"length", sh.length}};
        } else {
          json verts = json::array();
          for (const auto& v : sh.vertices) verts.push_back(json::array({v.x, v.y, v.z}));
          return {{"type", "mesh"}, {"vertices", verts}, {"faces", sh.faces}};
        }
      },
      s);
}

Shape shape_from(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "sphere") return Sphere{j.at("radius").get<double>()};
  if (type == "capsule") return Capsule{j.at("radius").get<double>(), j.at("length").get<double>()};
  if (type == "mesh") {
    TriangleMesh m;
    for (const auto& v : j.at("vertices")) m.vertices.push_back({v.at(0), v.at(1), v.at(2)});
    m.faces = j.at("faces").get<std::vector<std::array<int, 3>>>();
    return m;
  }
  if (type == "rock") {
    // procedural shorthand, expanded to an explicit mesh on load
    return make_rock_mesh(j.at("radius").get<double>(), j.value("subdivisions", 2),
                          j.value("lumpiness", 0.35), j.value("flatten", 0.7),
                          j.value("seed", std::uint64_t{1}));
  }
  throw InvalidArgument("unknown shape type: " + type);
}

json shader_json(const Shader& s) {
  return std::visit(
      [](const auto& sh) -> json {
        using T = std::decay_t<decltype(sh)>;
        if constexpr (std::is_same_v<T, Diffuse>) {
          return {{"type", "diffuse"}, {"albedo", sh.albedo}};
        } else if constexpr (std::is_same_v<T, Glossy>) {
          return {{"type", "glossy"},
                  {"albedo", sh.albedo},
                  {"specular_strength", sh.specular_strength},
                  {"shininess", sh.shininess}};
        } else {
          return {{"type", "edge_effect"},
                  {"albedo", sh.albedo},
                  {"edge_gain", sh.edge_gain},
                  {"edge_exponent", sh.edge_exponent}};
        }
      },
      s);
}

Shader shader_from(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "diffuse") return Diffuse{j.at("albedo").get<double>()};
  if (type == "glossy") {
    return Glossy{j.at("albedo").get<double>(), j.value("specular_strength", 0.5), j.value("shininess", 20.0)};
  }
  if (type == "edge_effect") {
    return EdgeEffect{j.at("albedo").get<double>(), j.value("edge_gain", 0.8), j.value("edge_exponent", 1.5)};
  }
  throw InvalidArgument("unknown shader type: " + type);
}

}  // namespace

void to_json(json& j, const Vec3& v) { j = json::array({v.x, v.y, v.z}); }
void from_json(const json& j, Vec3& v) { v = {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

void to_json(json& j, const ParticleTemplate& t) {
  j = {{"id", t.id}, {"shape", shape_json(t.shape)}, {"shader", shader_json(t.shader)}};
}

void from_json(const json& j, ParticleTemplate& t) {
  t.id = j.at("id").get<std::string>();
  t.shape = shape_from(j.at("shape"));
  t.shader = shader_from(j.at("shader"));
}

void to_json(json& j, const Instance& i) {
  j = {{"template", i.template_id}, {"center", i.center}, {"scale", i.scale}, {"rotation", i.rotation}};
}

void from_json(const json& j, Instance& i) {
  i.template_id = j.at("template").get<std::string>();
  i.center = j.at("center").get<Vec3>();
  i.scale = j.at("scale").get<double>();
  i.rotation = j.value("rotation", 0.0);
}

void to_json(json& j, const DirtParams& d) {
  j = {{"levels", d.levels}, {"roughness", d.roughness}, {"decay", d.decay},
       {"threshold", d.threshold}, {"gain", d.gain}};
}

void from_json(const json& j, DirtParams& d) {
  DirtParams def;
  d.levels = j.value("levels", def.levels);
  d.roughness = j.value("roughness", def.roughness);
  d.decay = j.value("decay", def.decay);
  d.threshold = j.value("threshold", def.threshold);
  d.gain = j.value("gain", def.gain);
}

void to_json(json& j, const SceneSpec& s) {
  j = {{"extent", s.extent},
       {"substrate_albedo", s.substrate_albedo},
       {"templates", s.templates},
       {"instances", s.instances},
       {"light", {{"direction", s.light.direction}, {"brightness", s.light.brightness}}},
       {"camera", {{"crop", rect_json(s.camera.crop)}, {"resolution", s.camera.resolution}}},
       {"dirt", {{"enabled", s.dirt.enabled}, {"params", s.dirt.params}}},
       {"seed", {{"master", s.master_seed}, {"lineage", s.lineage}}}};
}

void from_json(const json& j, SceneSpec& s) {
  s.extent = j.at("extent").get<double>();
  s.substrate_albedo = j.at("substrate_albedo").get<double>();
  s.templates = j.at("templates").get<std::vector<ParticleTemplate>>();
  s.instances = j.at("instances").get<std::vector<Instance>>();
  s.light.direction = j.at("light").at("direction").get<Vec3>();
  s.light.brightness = j.at("light").at("brightness").get<double>();
  s.camera.crop = rect_from(j.at("camera").at("crop"));
  s.camera.resolution = j.at("camera").at("resolution").get<int>();
  s.dirt.enabled = j.at("dirt").at("enabled").get<bool>();
  s.dirt.params = j.at("dirt").at("params").get<DirtParams>();
  s.master_seed = j.at("seed").at("master").get<std::uint64_t>();
  s.lineage = j.at("seed").at("lineage").get<std::vector<std::string>>();
  validate(s);
}

void to_json(json& j, const Recipe& r) {
  j = {{"name", r.name},
       {"extent", r.extent},
       {"substrate_albedo", r.substrate_albedo},
       {"particle_count", json::array({r.count_min, r.count_max})},
       {"min_separation", r.min_separation},
       {"scale", range_json(r.scale)},
       {"templates", r.templates},
       {"weights", r.weights},
       {"agglomeration",
        {{"probability", r.agglomeration.probability},
         {"size", json::array({r.agglomeration.min_size, r.agglomeration.max_size})},
         {"contact_slack", r.agglomeration.contact_slack}}},
       {"brightness", range_json(r.brightness)},
       {"light_direction", r.light_direction},
       {"dirt_probability", r.dirt_probability},
       {"dirt", r.dirt},
       {"zoom", range_json(r.zoom)},
       {"sink", range_json(r.sink)},
       {"resolution", r.resolution},
       {"degrade", {{"target", r.degrade.target}, {"sigma", r.degrade.sigma}}}};
}

void from_json(const json& j, Recipe& r) {
  if (j.contains("preset")) {
    r = preset_recipe(j.at("preset").get<std::string>());
  } else {
    r = Recipe{};
  }
  r.name = j.value("name", r.name);
  r.extent = j.value("extent", r.extent);
  r.substrate_albedo = j.value("substrate_albedo", r.substrate_albedo);
  if (j.contains("particle_count")) {
    r.count_min = j.at("particle_count").at(0).get<int>();
    r.count_max = j.at("particle_count").at(1).get<int>();
  }
  r.min_separation = j.value("min_separation", r.min_separation);
  if (j.contains("scale")) r.scale = range_from(j.at("scale"));
  if (j.contains("templates")) r.templates = j.at("templates").get<std::vector<ParticleTemplate>>();
  if (j.contains("weights")) {
    r.weights = j.at("weights").get<std::vector<double>>();
  } else if (j.contains("templates")) {
    r.weights.assign(r.templates.size(), 1.0);
  }
  if (j.contains("agglomeration")) {
    const auto& a = j.at("agglomeration");
    r.agglomeration.probability = a.value("probability", r.agglomeration.probability);
    if (a.contains("size")) {
      r.agglomeration.min_size = a.at("size").at(0).get<int>();
      r.agglomeration.max_size = a.at("size").at(1).get<int>();
    }
    r.agglomeration.contact_slack = a.value("contact_slack", r.agglomeration.contact_slack);
  }
  if (j.contains("brightness")) r.brightness = range_from(j.at("brightness"));
  if (j.contains("light_direction")) r.light_direction = j.at("light_direction").get<Vec3>();
  r.dirt_probability = j.value("dirt_probability", r.dirt_probability);
  if (j.contains("dirt")) r.dirt = j.at("dirt").get<DirtParams>();
  if (j.contains("zoom")) r.zoom = range_from(j.at("zoom"));
  if (j.contains("sink")) r.sink = range_from(j.at("sink"));
  r.resolution = j.value("resolution", r.resolution);
  if (j.contains("degrade")) {
    r.degrade.target = j.at("degrade").value("target", r.degrade.target);
    r.degrade.sigma = j.at("degrade").value("sigma", r.degrade.sigma);
  }
  validate(r);
}

std::string canonical_json(const SceneSpec& s) { return json(s).dump(); }
std::string canonical_json(const Recipe& r) { return json(r).dump(); }

Recipe load_recipe(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open recipe " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidArgument("recipe " + path + " is not valid JSON: " + e.what());
  }
  return j.get<Recipe>();
}

}  // namespace himforge
