#include "springsim/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>

#include "springsim/dynamics.hpp"
#include "springsim/identification.hpp"
#include "springsim/io/documents.hpp"
#include "springsim/io/ply.hpp"
#include "springsim/io/png.hpp"
#include "springsim/io/trajectory_io.hpp"
#include "springsim/metrics.hpp"
#include "springsim/registration.hpp"
#include "springsim/splat_render.hpp"

namespace springsim {

namespace fs = std::filesystem;
using io::ScenarioConfig;
using io::apply_scenario;

namespace {

Vec3 to_vec3(const std::vector<double>& v, const char* what) {
  if (v.size() != 3) throw Error(std::string(what) + " needs exactly 3 comma-separated values");
  return {v[0], v[1], v[2]};
}

AnchorSystem load_anchors(const fs::path& path, double mass) {
  AnchorSystem a;
  a.positions = io::load_ply(path).positions;
  a.velocities.assign(a.positions.size(), Vec3::Zero());
  a.mass = mass;
  a.validate();
  return a;
}

SpringTopology load_topology(const fs::path& path, std::size_t anchor_count) {
  auto t = io::topology_from_json(io::read_json(path));
  if (t.anchor_count != anchor_count)
    throw Error("topology has " + std::to_string(t.anchor_count) + " anchors but the anchor file has " +
                std::to_string(anchor_count));
  return t;
}

// ---------------------------------------------------------------- sample-anchors
struct SampleArgs {
  std::string input, out;
  std::size_t n_anchors = 2048;
  std::size_t n_k = 256;
  std::uint64_t seed = 0;
};

void run_sample(const SampleArgs& a) {
  const auto cloud = io::load_ply(a.input);
  const auto anchors = volume_sample(cloud, a.n_anchors, a.seed);
  const auto topo = build_topology(anchors, a.n_k);
  fs::create_directories(a.out);
  io::save_ply(PointCloud{anchors.positions, {}, {}}, fs::path(a.out) / "anchors.ply");
  io::write_json(io::topology_to_json(topo), fs::path(a.out) / "topology.json");
}

// ---------------------------------------------------------------- simulate
struct SimulateArgs {
  std::string anchors, topology, checkpoint, scenario, out, camera, kernels;
  bool render = false;
  double kernel_scale = 0.01;
  std::size_t n_b = 16;
  double p_b = 0.5;
  double mass = 1.0;
  std::vector<double> background{1.0, 1.0, 1.0};
  std::optional<std::size_t> n_keyframes, n_t;
  std::optional<double> fps;
  std::uint64_t seed = 0;
};

void run_simulate(const SimulateArgs& a) {
  const auto anchors = load_anchors(a.anchors, a.mass);
  const auto topo = load_topology(a.topology, anchors.size());

  PhysicalParams params = PhysicalParams::with_uniform_stiffness(anchors.size(), 1000.0);
  params.mass = a.mass;
  ScenarioConfig scenario;
  if (!a.checkpoint.empty()) {
    const auto ckpt = io::ParamCheckpoint::from_json(io::read_json(a.checkpoint));
    ckpt.check_topology(topo);
    params = ckpt.params;
    scenario = ScenarioConfig::from_checkpoint(ckpt);
  }
  if (!a.scenario.empty()) scenario = ScenarioConfig::from_json(io::read_json(a.scenario));
  if (a.n_keyframes) scenario.n_keyframes = *a.n_keyframes;
  if (a.n_t) scenario.n_t = *a.n_t;
  if (a.fps) scenario.fps = *a.fps;
  params = apply_scenario(params, scenario);

  const RolloutConfig rc{scenario.n_keyframes, scenario.n_t, 1.0 / scenario.fps};
  const auto traj = rollout(anchors.positions, topo, params, rc);
  io::save_trajectory(traj, a.out);

  if (!a.render) return;
  if (a.camera.empty()) throw Error("--render requires --camera");
  const Camera camera = io::camera_from_json(io::read_json(a.camera));
  const Vec3 background = to_vec3(a.background, "--background");

  GaussianCloud kernels;
  std::optional<BindingTable> binding;
  if (!a.kernels.empty()) {
    const auto cloud = io::load_ply(a.kernels);
    binding = bind_kernels(cloud, anchors, std::min(a.n_b, anchors.size()), a.p_b);
    kernels.centers = cloud.positions;
    kernels.colors = cloud.colors.value_or(std::vector<Vec3>(cloud.size(), Vec3::Constant(0.7)));
    kernels.opacities = cloud.opacities.value_or(std::vector<double>(cloud.size(), 0.9));
  } else {
    kernels.centers = anchors.positions;
    kernels.colors.assign(anchors.size(), Vec3::Constant(0.7));
    kernels.opacities.assign(anchors.size(), 0.9);
  }
  kernels.scales.assign(kernels.centers.size(), a.kernel_scale);

  const fs::path render_dir = fs::path(a.out) / "render";
  fs::create_directories(render_dir);
  for (std::size_t f = 0; f < traj.size(); ++f) {
    const auto& anchor_pos = traj.keyframes[f].cloud.positions;
    kernels.centers = binding ? interpolate_kernels(*binding, anchor_pos) : anchor_pos;
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04zu.png", f);
    io::save_png(rasterize(kernels, camera, background), render_dir / name);
  }
}

// ---------------------------------------------------------------- identify
struct IdentifyArgs {
  std::string anchors, topology, observed, config, scenario, out, loss_csv;
  std::optional<std::size_t> iterations;
  bool single_k = false;
  bool freeze_v0 = false;
  double mass = 1.0;
  std::uint64_t seed = 0;
};

void run_identify(const IdentifyArgs& a) {
  const auto anchors = load_anchors(a.anchors, a.mass);
  const auto topo = load_topology(a.topology, anchors.size());
  const auto observed = io::load_trajectory(a.observed);

  IdentConfig cfg;
  if (!a.config.empty()) cfg = io::ident_config_from_json(io::read_json(a.config));
  if (a.iterations) cfg.iterations = *a.iterations;
  if (a.single_k) cfg.single_global_k = true;
  if (a.freeze_v0) cfg.refine_v0 = false;
  cfg.seed = a.seed;
  cfg.base.mass = a.mass;
  if (!a.scenario.empty()) {
    const auto scenario = ScenarioConfig::from_json(io::read_json(a.scenario));
    cfg.base.gravity = scenario.gravity;
    cfg.base.boundary = scenario.ground;
  }

  const auto result = identify(anchors.positions, topo, observed, cfg);
  io::ParamCheckpoint ckpt;
  ckpt.params = result.params;
  ckpt.n_k = topo.n_k;
  ckpt.topology_fingerprint = topo.fingerprint();
  ckpt.n_t = result.final_n_t;
  io::write_json(ckpt.to_json(), a.out);
  if (!a.loss_csv.empty()) write_loss_csv(a.loss_csv, result.history);
}

// ---------------------------------------------------------------- register
struct RegisterArgs {
  std::string source, target, out, transformed;
  RegistrationConfig config;
  std::uint64_t seed = 0;
};

void run_register(const RegisterArgs& a) {
  const auto source = io::load_ply(a.source);
  const auto target = io::load_ply(a.target);
  const auto result = register_clouds(source, target, a.config);
  auto j = result.transform.to_json();
  j["initial_loss"] = result.initial_loss;
  j["final_loss"] = result.final_loss;
  io::write_json(j, a.out);
  if (!a.transformed.empty()) {
    PointCloud moved = source;
    moved.positions = apply_similarity(result.transform, source.positions);
    io::save_ply(moved, a.transformed);
  }
}

// ---------------------------------------------------------------- eval
struct EvalArgs {
  std::string pred, obs, pred_images, ref_images, out;
  bool table_units = false;
  bool no_emd = false;
  std::uint64_t seed = 0;
};

void run_eval(const EvalArgs& a) {
  const bool clouds = !a.pred.empty() || !a.obs.empty();
  const bool images = !a.pred_images.empty() || !a.ref_images.empty();
  if (!clouds && !images) throw Error("eval needs --pred/--obs trajectories or --pred-images/--ref-images");
  metrics::MetricReport report;
  if (clouds) {
    if (a.pred.empty() || a.obs.empty()) throw Error("eval needs both --pred and --obs");
    const auto pred = io::load_trajectory(a.pred);
    const auto obs = io::load_trajectory(a.obs);
    if (pred.size() != obs.size())
      throw Error("eval: trajectories have " + std::to_string(pred.size()) + " and " +
                  std::to_string(obs.size()) + " frames");
    double cd = 0.0, emd = 0.0;
    for (std::size_t f = 0; f < pred.size(); ++f) {
      report.per_frame_cd.push_back(metrics::chamfer(pred.keyframes[f].cloud, obs.keyframes[f].cloud));
      cd += report.per_frame_cd.back();
      if (!a.no_emd) {
        report.per_frame_emd.push_back(metrics::emd(pred.keyframes[f].cloud, obs.keyframes[f].cloud));
        emd += report.per_frame_emd.back();
      }
    }
    report.cd = cd / static_cast<double>(pred.size());
    if (!a.no_emd) report.emd = emd / static_cast<double>(pred.size());
  }
  if (images) {
    if (a.pred_images.empty() || a.ref_images.empty())
      throw Error("eval needs both --pred-images and --ref-images");
    std::map<std::string, fs::path> refs;
    for (const auto& e : fs::directory_iterator(a.ref_images))
      if (e.path().extension() == ".png") refs[e.path().filename().string()] = e.path();
    double p = 0.0, s = 0.0;
    std::size_t count = 0;
    for (const auto& [name, ref_path] : refs) {
      const auto pred_path = fs::path(a.pred_images) / name;
      if (!fs::exists(pred_path)) throw Error("eval: " + pred_path.string() + " is missing");
      const auto img = io::load_png(pred_path);
      const auto ref = io::load_png(ref_path);
      p += metrics::psnr(img, ref);
      s += metrics::ssim(img, ref);
      ++count;
    }
    if (count == 0) throw Error("eval: no PNG images in " + a.ref_images);
    report.psnr = p / static_cast<double>(count);
    report.ssim = s / static_cast<double>(count);
  }
  const auto j = report.to_json(a.table_units);
  if (a.out.empty()) std::cout << j.dump(2) << '\n';
  else io::write_json(j, a.out);
}

// ---------------------------------------------------------------- edit-scenario
struct EditArgs {
  std::string checkpoint, base, out;
  std::vector<double> gravity, v0;
  std::optional<double> ground_height, friction_logit, stiffness_scale, fps;
  std::optional<std::size_t> n_keyframes, n_t;
  bool sticky = false, smooth = false, no_ground = false;
  std::optional<std::uint64_t> seed;
};

void run_edit(const EditArgs& a) {
  const auto ckpt = io::ParamCheckpoint::from_json(io::read_json(a.checkpoint));
  ScenarioConfig s = a.base.empty() ? ScenarioConfig::from_checkpoint(ckpt)
                                    : ScenarioConfig::from_json(io::read_json(a.base));
  if (!a.gravity.empty()) s.gravity = to_vec3(a.gravity, "--gravity");
  if (!a.v0.empty()) s.v0_override = to_vec3(a.v0, "--v0");
  if (a.ground_height) s.ground.height = *a.ground_height;
  if (a.friction_logit) s.ground.friction_logit = *a.friction_logit;
  if (a.stiffness_scale) s.stiffness_scale = *a.stiffness_scale;
  if (a.fps) s.fps = *a.fps;
  if (a.n_keyframes) s.n_keyframes = *a.n_keyframes;
  if (a.n_t) s.n_t = *a.n_t;
  if (a.seed) s.seed = *a.seed;
  if (a.sticky && a.smooth) throw Error("--sticky and --smooth are mutually exclusive");
  if (a.sticky) s.ground.sticky = true;
  if (a.smooth) s.ground.sticky = false;
  if (a.no_ground) s.ground.enabled = false;
  s.validate();
  io::write_json(s.to_json(), a.out);
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Spring-mass system identification and simulation toolkit", "springsim"};
  app.require_subcommand(1);

  SampleArgs sample;
  auto* sc = app.add_subcommand("sample-anchors", "Farthest-point anchors and KNN spring topology");
  sc->add_option("--input", sample.input, "Kernel/point cloud PLY")->required();
  sc->add_option("--out", sample.out, "Output directory (anchors.ply, topology.json)")->required();
  sc->add_option("--n-anchors", sample.n_anchors, "Anchor count");
  sc->add_option("--n-k", sample.n_k, "Springs per anchor");
  sc->add_option("--seed", sample.seed, "FPS start index seed");

  SimulateArgs sim;
  auto* ss = app.add_subcommand("simulate", "Roll out a trajectory under a scenario");
  ss->add_option("--anchors", sim.anchors)->required();
  ss->add_option("--topology", sim.topology)->required();
  ss->add_option("--out", sim.out, "Trajectory output directory")->required();
  ss->add_option("--checkpoint", sim.checkpoint, "Parameter checkpoint JSON");
  ss->add_option("--scenario", sim.scenario, "Scenario JSON");
  ss->add_option("--n-keyframes", sim.n_keyframes);
  ss->add_option("--n-t", sim.n_t);
  ss->add_option("--fps", sim.fps);
  ss->add_option("--mass", sim.mass);
  ss->add_flag("--render", sim.render, "Also write PNG renders to <out>/render");
  ss->add_option("--camera", sim.camera, "Camera JSON for --render");
  ss->add_option("--kernels", sim.kernels, "Kernel PLY bound to the anchors for rendering");
  ss->add_option("--kernel-scale", sim.kernel_scale);
  ss->add_option("--n-b", sim.n_b);
  ss->add_option("--p-b", sim.p_b);
  ss->add_option("--background", sim.background)->delimiter(',')->expected(3);
  ss->add_option("--seed", sim.seed);

  IdentifyArgs ident;
  auto* si = app.add_subcommand("identify", "Fit physical parameters to an observed trajectory");
  si->add_option("--anchors", ident.anchors)->required();
  si->add_option("--topology", ident.topology)->required();
  si->add_option("--observed", ident.observed, "Observed trajectory directory")->required();
  si->add_option("--out", ident.out, "Checkpoint JSON to write")->required();
  si->add_option("--config", ident.config, "Identification config JSON");
  si->add_option("--scenario", ident.scenario, "Scenario JSON providing gravity and ground");
  si->add_option("--loss-csv", ident.loss_csv, "Loss history CSV (iteration,loss,n_t)");
  si->add_option("--iterations", ident.iterations);
  si->add_option("--mass", ident.mass);
  si->add_flag("--single-k", ident.single_k, "Tie all anchor stiffnesses");
  si->add_flag("--freeze-v0", ident.freeze_v0, "Keep the pre-stage v0 fixed");
  si->add_option("--seed", ident.seed);

  RegisterArgs reg;
  auto* sr = app.add_subcommand("register", "Similarity registration of source onto target");
  sr->add_option("--source", reg.source)->required();
  sr->add_option("--target", reg.target)->required();
  sr->add_option("--out", reg.out, "Similarity JSON")->required();
  sr->add_option("--transformed", reg.transformed, "Write the transformed source PLY");
  sr->add_option("--iterations", reg.config.iterations);
  sr->add_option("--lr", reg.config.learning_rate);
  sr->add_option("--seed", reg.seed);

  EvalArgs ev;
  auto* se = app.add_subcommand("eval", "CD/EMD between trajectories, PSNR/SSIM between image dirs");
  se->add_option("--pred", ev.pred);
  se->add_option("--obs", ev.obs);
  se->add_option("--pred-images", ev.pred_images);
  se->add_option("--ref-images", ev.ref_images);
  se->add_option("--out", ev.out, "Report JSON (stdout if omitted)");
  se->add_flag("--table-units", ev.table_units, "Report CD in 1e3 mm^2");
  se->add_flag("--no-emd", ev.no_emd);
  se->add_option("--seed", ev.seed);

  EditArgs ed;
  auto* sd = app.add_subcommand("edit-scenario", "Derive a scenario from a checkpoint with edits");
  sd->add_option("--checkpoint", ed.checkpoint)->required();
  sd->add_option("--base", ed.base, "Scenario JSON to start from");
  sd->add_option("--out", ed.out)->required();
  sd->add_option("--gravity", ed.gravity)->delimiter(',')->expected(3);
  sd->add_option("--v0", ed.v0)->delimiter(',')->expected(3);
  sd->add_option("--ground-height", ed.ground_height);
  sd->add_option("--friction-logit", ed.friction_logit);
  sd->add_option("--stiffness-scale", ed.stiffness_scale);
  sd->add_option("--fps", ed.fps);
  sd->add_option("--n-keyframes", ed.n_keyframes);
  sd->add_option("--n-t", ed.n_t);
  sd->add_flag("--sticky", ed.sticky);
  sd->add_flag("--smooth", ed.smooth);
  sd->add_flag("--no-ground", ed.no_ground);
  sd->add_option("--seed", ed.seed);

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(std::move(rev));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sc) run_sample(sample);
    else if (*ss) run_simulate(sim);
    else if (*si) run_identify(ident);
    else if (*sr) run_register(reg);
    else if (*se) run_eval(ev);
    else if (*sd) run_edit(ed);
  } catch (const std::exception& e) {
    std::cerr << "springsim: error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace springsim
