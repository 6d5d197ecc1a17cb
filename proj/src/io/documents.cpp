#include "springsim/io/documents.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <set>

namespace springsim::io {

using nlohmann::json;

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(path.string() + ": cannot open JSON document");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(path.string() + ": malformed JSON: " + e.what());
  }
}

void write_json(const json& j, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(path.string() + ": cannot write JSON document");
  out << j.dump(2) << '\n';
}

std::string fingerprint_hex(std::uint64_t fingerprint) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fingerprint);
  return buf;
}

Vec3 vec3_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw Error(std::string(what) + " must be a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

namespace {

void check_version(const json& j, const char* what) {
  const int v = j.value("format_version", 0);
  if (v != kDocumentFormatVersion)
    throw Error(std::string(what) + ": unsupported format_version " + std::to_string(v));
}

template <class Fn>
auto wrap(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw Error(std::string(what) + ": " + e.what());
  }
}

}  // namespace

json topology_to_json(const SpringTopology& t) {
  json neighbors = json::array(), rest = json::array();
  for (std::size_t i = 0; i < t.anchor_count; ++i) {
    json nrow = json::array(), lrow = json::array();
    for (std::size_t j = 0; j < t.n_k; ++j) {
      nrow.push_back(t.neighbor(i, j));
      lrow.push_back(t.rest_length(i, j));
    }
    neighbors.push_back(std::move(nrow));
    rest.push_back(std::move(lrow));
  }
  return {{"format_version", kDocumentFormatVersion},
          {"anchor_count", t.anchor_count},
          {"n_k", t.n_k},
          {"neighbors", std::move(neighbors)},
          {"rest_lengths", std::move(rest)},
          {"fingerprint", fingerprint_hex(t.fingerprint())}};
}

SpringTopology topology_from_json(const json& j) {
  return wrap("topology", [&] {
    check_version(j, "topology");
    SpringTopology t;
    t.anchor_count = j.at("anchor_count").get<std::size_t>();
    t.n_k = j.at("n_k").get<std::size_t>();
    const auto& nb = j.at("neighbors");
    const auto& rl = j.at("rest_lengths");
    if (nb.size() != t.anchor_count || rl.size() != t.anchor_count)
      throw Error("topology: row count does not match anchor_count");
    for (std::size_t i = 0; i < t.anchor_count; ++i) {
      if (nb[i].size() != t.n_k || rl[i].size() != t.n_k)
        throw Error("topology: row " + std::to_string(i) + " does not have n_k entries");
      for (std::size_t k = 0; k < t.n_k; ++k) {
        t.neighbors.push_back(nb[i][k].get<std::int32_t>());
        t.rest_lengths.push_back(rl[i][k].get<double>());
      }
    }
    t.validate();
    if (j.contains("fingerprint") &&
        j.at("fingerprint").get<std::string>() != fingerprint_hex(t.fingerprint()))
      throw Error("topology: stored fingerprint does not match its tables");
    return t;
  });
}

json ParamCheckpoint::to_json() const {
  json j{{"format_version", kDocumentFormatVersion},
         {"v0", vec3_to_json(params.v0)},
         {"log_k", params.log_k},
         {"kappa", params.kappa},
         {"boundary",
          {{"height", params.boundary.height},
           {"friction_logit", params.boundary.friction_logit},
           {"sticky", params.boundary.sticky},
           {"enabled", params.boundary.enabled}}},
         {"constants",
          {{"mass", params.mass},
           {"damping", params.damping},
           {"p_k", params.p_k},
           {"p_b", p_b},
           {"n_k", n_k},
           {"n_b", n_b},
           {"n_c", params.n_c},
           {"gravity", vec3_to_json(params.gravity)}}},
         {"topology_fingerprint", fingerprint_hex(topology_fingerprint)}};
  if (n_t) j["n_t"] = *n_t;
  return j;
}

ParamCheckpoint ParamCheckpoint::from_json(const json& j) {
  return wrap("checkpoint", [&] {
    check_version(j, "checkpoint");
    ParamCheckpoint c;
    c.params.v0 = vec3_from_json(j.at("v0"), "checkpoint v0");
    c.params.log_k = j.at("log_k").get<std::vector<double>>();
    c.params.kappa = j.at("kappa").get<double>();
    const auto& b = j.at("boundary");
    c.params.boundary.height = b.at("height").get<double>();
    c.params.boundary.friction_logit = b.at("friction_logit").get<double>();
    c.params.boundary.sticky = b.at("sticky").get<bool>();
    c.params.boundary.enabled = b.value("enabled", true);
    const auto& k = j.at("constants");
    c.params.mass = k.at("mass").get<double>();
    c.params.damping = k.at("damping").get<double>();
    c.params.p_k = k.at("p_k").get<double>();
    c.p_b = k.at("p_b").get<double>();
    c.n_k = k.at("n_k").get<std::size_t>();
    c.n_b = k.at("n_b").get<std::size_t>();
    c.params.n_c = k.at("n_c").get<std::size_t>();
    c.params.gravity = vec3_from_json(k.at("gravity"), "checkpoint gravity");
    const auto fp = j.at("topology_fingerprint").get<std::string>();
    c.topology_fingerprint = std::stoull(fp, nullptr, 16);
    if (j.contains("n_t")) c.n_t = j.at("n_t").get<std::size_t>();
    c.params.validate(c.params.log_k.size());
    return c;
  });
}

void ParamCheckpoint::check_topology(const SpringTopology& topology) const {
  if (topology.fingerprint() != topology_fingerprint)
    throw Error("checkpoint was fitted against topology " + fingerprint_hex(topology_fingerprint) +
                " but the supplied topology is " + fingerprint_hex(topology.fingerprint()));
  if (params.log_k.size() != topology.anchor_count)
    throw Error("checkpoint stiffness count does not match the anchor count");
}

void ScenarioConfig::validate() const {
  if (!(fps > 0.0)) throw Error("scenario: fps must be positive");
  if (!(stiffness_scale > 0.0)) throw Error("scenario: stiffness scale must be positive");
  if (n_t < 1) throw Error("scenario: n_t must be >= 1");
  if (n_keyframes < 1) throw Error("scenario: need at least one keyframe");
  if (!all_finite(gravity)) throw Error("scenario: gravity must be finite");
}

json ScenarioConfig::to_json() const {
  return {{"format_version", kDocumentFormatVersion},
          {"gravity", vec3_to_json(gravity)},
          {"ground",
           {{"height", ground.height},
            {"friction_logit", ground.friction_logit},
            {"sticky", ground.sticky},
            {"enabled", ground.enabled}}},
          {"stiffness_scale", stiffness_scale},
          {"v0_override", v0_override ? vec3_to_json(*v0_override) : json(nullptr)},
          {"fps", fps},
          {"n_keyframes", n_keyframes},
          {"n_t", n_t},
          {"seed", seed}};
}

ScenarioConfig ScenarioConfig::from_json(const json& j) {
  return wrap("scenario", [&] {
    check_version(j, "scenario");
    ScenarioConfig s;
    if (j.contains("gravity")) s.gravity = vec3_from_json(j.at("gravity"), "scenario gravity");
    if (j.contains("ground")) {
      const auto& g = j.at("ground");
      s.ground.height = g.value("height", s.ground.height);
      s.ground.friction_logit = g.value("friction_logit", s.ground.friction_logit);
      s.ground.sticky = g.value("sticky", s.ground.sticky);
      s.ground.enabled = g.value("enabled", s.ground.enabled);
    }
    s.stiffness_scale = j.value("stiffness_scale", s.stiffness_scale);
    if (j.contains("v0_override") && !j.at("v0_override").is_null())
      s.v0_override = vec3_from_json(j.at("v0_override"), "scenario v0_override");
    s.fps = j.value("fps", s.fps);
    s.n_keyframes = j.value("n_keyframes", s.n_keyframes);
    s.n_t = j.value("n_t", s.n_t);
    s.seed = j.value("seed", s.seed);
    s.validate();
    return s;
  });
}

ScenarioConfig ScenarioConfig::from_checkpoint(const ParamCheckpoint& checkpoint) {
  ScenarioConfig s;
  s.gravity = checkpoint.params.gravity;
  s.ground = checkpoint.params.boundary;
  if (checkpoint.n_t) s.n_t = *checkpoint.n_t;
  return s;
}

PhysicalParams apply_scenario(const PhysicalParams& params, const ScenarioConfig& scenario) {
  scenario.validate();
  PhysicalParams out = params;
  out.gravity = scenario.gravity;
  out.boundary = scenario.ground;
  const double shift = std::log(scenario.stiffness_scale);
  for (double& lk : out.log_k) lk += shift;
  if (scenario.v0_override) out.v0 = *scenario.v0_override;
  return out;
}

json camera_to_json(const Camera& c) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r)
    for (int col = 0; col < 3; ++col) rot.push_back(c.rotation(r, col));
  return {{"format_version", kDocumentFormatVersion},
          {"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy},
          {"width", c.width}, {"height", c.height}, {"near", c.near_plane},
          {"rotation", rot}, {"translation", vec3_to_json(c.translation)}};
}

Camera camera_from_json(const json& j) {
  return wrap("camera", [&] {
    Camera c;
    c.fx = j.at("fx").get<double>();
    c.fy = j.at("fy").get<double>();
    c.cx = j.at("cx").get<double>();
    c.cy = j.at("cy").get<double>();
    c.width = j.at("width").get<std::size_t>();
    c.height = j.at("height").get<std::size_t>();
    c.near_plane = j.value("near", c.near_plane);
    if (j.contains("rotation")) {
      const auto r = j.at("rotation").get<std::vector<double>>();
      if (r.size() != 9) throw Error("camera rotation must have 9 row-major entries");
      for (int row = 0; row < 3; ++row)
        for (int col = 0; col < 3; ++col) c.rotation(row, col) = r[row * 3 + col];
    }
    if (j.contains("translation")) c.translation = vec3_from_json(j.at("translation"), "camera translation");
    c.validate();
    return c;
  });
}

IdentConfig ident_config_from_json(const json& j, IdentConfig base) {
  static const std::set<std::string> known{
      "format_version", "iterations", "lr_log_k", "lr_kappa", "lr_boundary", "lr_v0",
      "beta1", "beta2", "epsilon", "nt_initial", "nt_growth", "plateau_window",
      "plateau_threshold", "nt_max", "n_pre", "seed", "initial_k", "single_global_k",
      "refine_v0", "learn_kappa", "learn_friction", "learn_ground_height", "initial_v0"};
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw Error("identify config: unknown key '" + key + "'");
  return wrap("identify config", [&] {
    IdentConfig c = std::move(base);
    c.iterations = j.value("iterations", c.iterations);
    c.lr_log_k = j.value("lr_log_k", c.lr_log_k);
    c.lr_kappa = j.value("lr_kappa", c.lr_kappa);
    c.lr_boundary = j.value("lr_boundary", c.lr_boundary);
    c.lr_v0 = j.value("lr_v0", c.lr_v0);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.adam.epsilon = j.value("epsilon", c.adam.epsilon);
    c.nt_initial = j.value("nt_initial", c.nt_initial);
    c.nt_growth = j.value("nt_growth", c.nt_growth);
    c.plateau_window = j.value("plateau_window", c.plateau_window);
    c.plateau_threshold = j.value("plateau_threshold", c.plateau_threshold);
    c.nt_max = j.value("nt_max", c.nt_max);
    c.n_pre = j.value("n_pre", c.n_pre);
    c.seed = j.value("seed", c.seed);
    c.initial_k = j.value("initial_k", c.initial_k);
    c.single_global_k = j.value("single_global_k", c.single_global_k);
    c.refine_v0 = j.value("refine_v0", c.refine_v0);
    c.learn_kappa = j.value("learn_kappa", c.learn_kappa);
    c.learn_friction = j.value("learn_friction", c.learn_friction);
    c.learn_ground_height = j.value("learn_ground_height", c.learn_ground_height);
    if (j.contains("initial_v0") && !j.at("initial_v0").is_null())
      c.initial_v0 = vec3_from_json(j.at("initial_v0"), "initial_v0");
    c.validate();
    return c;
  });
}

}  // namespace springsim::io
