#pragma once

// JSON documents exchanged by the command-line tools: spring topology,
// parameter checkpoints, scenario edits, cameras and identification configs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "springsim/dynamics.hpp"
#include "springsim/geometry.hpp"
#include "springsim/identification.hpp"
#include "springsim/splat_render.hpp"

namespace springsim::io {

inline constexpr int kDocumentFormatVersion = 1;

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

std::string fingerprint_hex(std::uint64_t fingerprint);

nlohmann::json topology_to_json(const SpringTopology& topology);
/// Rejects documents whose stored fingerprint does not match their tables.
SpringTopology topology_from_json(const nlohmann::json& j);

/// Learnables plus the fixed constants they were fitted under.
struct ParamCheckpoint {
  PhysicalParams params;
  double p_b = 0.5;
  std::size_t n_k = 0;
  std::size_t n_b = 16;
  std::uint64_t topology_fingerprint = 0;
  std::optional<std::size_t> n_t;  // substeps the fit ended on

  nlohmann::json to_json() const;
  static ParamCheckpoint from_json(const nlohmann::json& j);

  /// Throws unless the checkpoint was fitted against this topology.
  void check_topology(const SpringTopology& topology) const;
};

/// Editable simulation conditions: gravity, ground, stiffness scale, v0.
struct ScenarioConfig {
  Vec3 gravity{0.0, 0.0, -9.8};
  Boundary ground;
  double stiffness_scale = 1.0;
  std::optional<Vec3> v0_override;
  double fps = 30.0;
  std::size_t n_keyframes = 20;
  std::size_t n_t = 16;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static ScenarioConfig from_json(const nlohmann::json& j);

  /// Scenario reproducing the conditions a checkpoint was fitted under.
  static ScenarioConfig from_checkpoint(const ParamCheckpoint& checkpoint);
};

/// Gravity, ground, stiffness scaling and v0 override applied to params.
PhysicalParams apply_scenario(const PhysicalParams& params, const ScenarioConfig& scenario);

nlohmann::json camera_to_json(const Camera& camera);
Camera camera_from_json(const nlohmann::json& j);

/// Optional overrides on top of IdentConfig defaults; unknown keys are errors.
IdentConfig ident_config_from_json(const nlohmann::json& j, IdentConfig base = {});

Vec3 vec3_from_json(const nlohmann::json& j, const char* what);
nlohmann::json vec3_to_json(const Vec3& v);

}  // namespace springsim::io
