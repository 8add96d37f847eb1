#pragma once

// JSON (de)serialization for recipes and scenes.

#include <string>

#include "json.hpp"

#include "himforge/scene.hpp"

namespace himforge {

void to_json(nlohmann::json& j, const Vec3& v);
void from_json(const nlohmann::json& j, Vec3& v);
void to_json(nlohmann::json& j, const ParticleTemplate& t);
void from_json(const nlohmann::json& j, ParticleTemplate& t);
void to_json(nlohmann::json& j, const Instance& i);
void from_json(const nlohmann::json& j, Instance& i);
void to_json(nlohmann::json& j, const DirtParams& d);
void from_json(const nlohmann::json& j, DirtParams& d);
void to_json(nlohmann::json& j, const SceneSpec& s);
void from_json(const nlohmann::json& j, SceneSpec& s);
void to_json(nlohmann::json& j, const Recipe& r);
void from_json(const nlohmann::json& j, Recipe& r);

/// Sorted keys, shortest round-trip float formatting, no whitespace.
std::string canonical_json(const SceneSpec& s);
std::string canonical_json(const Recipe& r);

Recipe load_recipe(const std::string& path);

}  // namespace himforge
