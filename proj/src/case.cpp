#include "fvpinn/case.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace fvpinn {

namespace {

BedProfile bed_from_config(const Config& cfg) {
  const std::string kind = cfg.get_string("mesh.bed", "flat");
  if (kind == "flat") {
    const double z = cfg.get_double("mesh.bed_level", 0.0);
    return [z](double, double) { return z; };
  }
  if (kind == "bump") return [](double x, double) { return bump_bed(x); };
  if (kind == "slope") {
    const double z0 = cfg.get_double("mesh.bed_level", 0.0);
    const double s = cfg.get_double("mesh.bed_slope");
    return [z0, s](double x, double) { return z0 - s * x; };
  }
  if (kind == "bumps") {
    // Smooth two-dimensional bumps for well-balancedness checks.
    const double a = cfg.get_double("mesh.bed_amplitude", 0.2);
    return [a](double x, double y) {
      return a * (0.5 + 0.5 * std::sin(0.9 * x) * std::cos(1.3 * y));
    };
  }
  throw ConfigError("mesh.bed must be flat, bump, slope or bumps, got '" + kind + "'");
}

PatchKind parse_kind(const std::string& s, const std::string& key) {
  try {
    return patch_kind_from_string(s);
  } catch (const std::exception&) {
    throw ConfigError("boundary." + key + ": unknown patch kind '" + s + "'");
  }
}

State initial_state(const Config& cfg, const Domain& d) {
  const Mesh& m = d.mesh;
  const std::size_t nc = m.cells.size();
  const std::string kind = cfg.get_string("initial.kind", "lake");
  State s(nc);
  if (kind == "lake") {
    const double ws = cfg.get_double("initial.w_s", m.reference_ws);
    return lake_at_rest(m, ws);
  }
  if (kind == "uniform") {
    const double ws = cfg.get_double("initial.w_s", m.reference_ws);
    const double u = cfg.get_double("initial.u", 0.0);
    const double v = cfg.get_double("initial.v", 0.0);
    for (std::size_t i = 0; i < nc; ++i) {
      const double h = std::max(0.0, ws - d.bathy.z_b[i]);
      s.set(i, {h - d.bathy.h_s[i], h * u, h * v});
    }
    return s;
  }
  if (kind == "dambreak") {
    const double hl = cfg.get_double("initial.h_left");
    const double hr = cfg.get_double("initial.h_right");
    const double x0 = cfg.get_double("initial.x0");
    for (std::size_t i = 0; i < nc; ++i) {
      const double h = m.cells[i].centroid[0] < x0 ? hl : hr;
      s.set(i, {h - d.bathy.h_s[i], 0.0, 0.0});
    }
    return s;
  }
  if (kind == "file") return read_anchor(cfg.get_path("initial.path"), nc);
  throw ConfigError("initial.kind must be lake, uniform, dambreak or file, got '" + kind + "'");
}

}  // namespace

Mesh build_mesh_from_config(const Config& cfg) {
  const std::string kind = cfg.get_string("mesh.kind");
  Mesh mesh;
  if (kind == "file") {
    mesh = load_mesh(cfg.get_path("mesh.path"));
    if (cfg.has("mesh.reference_ws")) {
      mesh.reference_ws = cfg.get_double("mesh.reference_ws");
      recompute_geometry(mesh);
    }
  } else if (kind == "strip") {
    mesh = generate_strip_mesh(cfg.get_double("mesh.length"), static_cast<int>(cfg.get_int("mesh.cells")),
                               cfg.get_double("mesh.width"), bed_from_config(cfg),
                               cfg.get_double("mesh.reference_ws"));
  } else if (kind == "channel") {
    std::optional<Rect> block;
    const auto b = cfg.get_doubles("mesh.block", {});
    if (!b.empty()) {
      if (b.size() != 4) throw ConfigError("mesh.block needs x0, y0, x1, y1");
      block = Rect{b[0], b[1], b[2], b[3]};
    }
    mesh = generate_channel_mesh(cfg.get_double("mesh.lx"), cfg.get_double("mesh.ly"), block,
                                 cfg.get_double("mesh.target"), bed_from_config(cfg),
                                 cfg.get_double("mesh.reference_ws"));
  } else {
    throw ConfigError("mesh.kind must be file, strip or channel, got '" + kind + "'");
  }

  // [boundary] <patch> = <kind> [value]
  for (const std::string& name : cfg.keys_in("boundary")) {
    const int p = mesh.find_patch(name);
    if (p < 0) throw ConfigError("boundary." + name + ": mesh has no patch named '" + name + "'");
    std::istringstream in(cfg.get_string("boundary." + name));
    std::string k;
    in >> k;
    BoundaryPatch& patch = mesh.patches[static_cast<std::size_t>(p)];
    patch.kind = parse_kind(k, name);
    patch.value = 0.0;
    if (patch.kind != PatchKind::wall) {
      if (!(in >> patch.value)) throw ConfigError("boundary." + name + ": missing value");
    }
  }

  // mesh.zone_splits = x1, x2, ...: each split a cell lies right of adds one
  // to its Manning zone.
  const auto splits = cfg.get_doubles("mesh.zone_splits", {});
  for (Cell& c : mesh.cells) {
    int z = 0;
    for (double s : splits)
      if (c.centroid[0] > s) ++z;
    if (!splits.empty()) c.manning_zone = z;
  }
  return mesh;
}

Domain build_domain(const Config& cfg) {
  PhysParams p;
  p.g = cfg.get_double("physics.g", p.g);
  p.rho = cfg.get_double("physics.rho", p.rho);
  p.h_min = cfg.get_double("physics.h_min", p.h_min);
  p.manning_n = cfg.get_doubles("physics.manning", {0.0});
  return Domain::build(build_mesh_from_config(cfg), p);
}

std::vector<Observation> sample_observations(const Domain& d, const Trajectory& traj, int count,
                                             bool observe_depth, std::uint64_t seed) {
  if (traj.times.size() < 2) throw std::invalid_argument("trajectory too short to sample from");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> cell(0, d.mesh.cells.size() - 1);
  std::uniform_int_distribution<std::size_t> snap(1, traj.times.size() - 1);
  std::vector<Observation> out;
  for (int k = 0; k < count; ++k) {
    const std::size_t c = cell(rng);
    const std::size_t s = snap(rng);
    const Primitive<double> w = recover_primitives(traj.states[s].at(c), d.bathy.h_s[c], d.phys);
    Observation o;
    o.x = d.mesh.cells[c].centroid[0];
    o.y = d.mesh.cells[c].centroid[1];
    o.t = traj.times[s];
    o.u = w.u;
    o.v = w.v;
    o.mask_u = o.mask_v = true;
    if (observe_depth) {
      o.h = w.h;
      o.mask_h = true;
    }
    out.push_back(o);
  }
  return out;
}

Case build_case(const Config& cfg, bool with_data) {
  Case c;
  c.name = cfg.get_string("case.name", "case");
  c.output_dir = cfg.has("case.output") ? cfg.get_path("case.output") : "out";
  c.domain = build_domain(cfg);
  c.ic = initial_state(cfg, c.domain);
  c.t0 = cfg.get_double("time.t0", 0.0);
  c.t1 = cfg.get_double("time.t_end");
  if (!(c.t1 > c.t0)) throw ConfigError("time.t_end must exceed time.t0");

  if (cfg.get_string("initial.kind", "lake") == "dambreak") {
    DamBreakSpec s;
    s.h_left = cfg.get_double("initial.h_left");
    s.h_right = cfg.get_double("initial.h_right");
    s.x0 = cfg.get_double("initial.x0");
    s.g = c.domain.phys.g;
    c.dambreak = s;
  }

  NetworkConfig& n = c.network;
  n.width = static_cast<int>(cfg.get_int("network.width", n.width));
  n.depth = static_cast<int>(cfg.get_int("network.depth", n.depth));
  n.fourier_features = static_cast<int>(cfg.get_int("network.fourier_features", n.fourier_features));
  n.sigma = cfg.get_double("network.sigma", n.sigma);
  n.residual = cfg.get_bool("network.residual", n.residual);
  n.validate();
  c.init_seed = static_cast<std::uint64_t>(cfg.get_int("network.seed", 0));

  TrainConfig& t = c.train;
  t.t0 = c.t0;
  t.t1 = c.t1;
  t.n_t = static_cast<int>(cfg.get_int("train.n_t", t.n_t));
  t.seed = static_cast<std::uint64_t>(cfg.get_int("train.seed", 0));
  t.adam.lr = cfg.get_double("train.lr", t.adam.lr);
  t.adam.beta1 = cfg.get_double("train.beta1", t.adam.beta1);
  t.adam.beta2 = cfg.get_double("train.beta2", t.adam.beta2);
  t.adam.eps = cfg.get_double("train.eps", t.adam.eps);
  t.adam.decay = cfg.get_double("train.decay", t.adam.decay);
  t.adam.decay_every = static_cast<int>(cfg.get_int("train.decay_every", t.adam.decay_every));
  t.adam.epochs = static_cast<int>(cfg.get_int("train.adam_epochs", t.adam.epochs));
  t.lbfgs.max_iterations = static_cast<int>(cfg.get_int("train.lbfgs_epochs", 0));
  t.lbfgs.memory = static_cast<int>(cfg.get_int("train.lbfgs_memory", t.lbfgs.memory));
  t.lbfgs.gtol = cfg.get_double("train.lbfgs_gtol", t.lbfgs.gtol);
  t.record_wall_clock = cfg.get_bool("train.record_wall_clock", false);
  t.weights.fvm = cfg.get_double("loss.fvm", 1.0);
  t.weights.ic = cfg.get_double("loss.ic", 0.0);
  t.weights.bc = cfg.get_double("loss.bc", 0.0);
  t.weights.data = cfg.get_double("loss.data", 0.0);
  c.windows = static_cast<int>(cfg.get_int("windows.count", 1));
  if (c.windows < 1) throw ConfigError("windows.count must be at least 1");

  c.teacher.t0 = c.t0;
  c.teacher.t_end = c.t1;
  c.teacher.cfl = cfg.get_double("teacher.cfl", c.teacher.cfl);
  c.teacher.dt = cfg.get_double("teacher.dt", 0.0);
  c.teacher.n_snap = static_cast<int>(cfg.get_int("teacher.snapshots", 11));
  if (c.teacher.n_snap < 2) throw ConfigError("teacher.snapshots must be at least 2");

  const std::string trainer = cfg.get_string("train.trainer", "standard");
  if (trainer != "standard" && trainer != "teacher")
    throw ConfigError("train.trainer must be standard or teacher");
  const bool teacher_trainer = trainer == "teacher";
  if (teacher_trainer) t.weights.fvm = cfg.get_double("teacher.lambda_phys", 0.05);
  const double lambda_anchor = cfg.get_double("teacher.lambda_anchor", teacher_trainer ? 0.1 : 1.0);

  c.data.ic = c.ic;
  c.data.t0 = c.t0;
  c.data.observation_weight = cfg.get_double("data.observation_weight", 1.0);
  c.data.anchor_weight = cfg.get_double("data.anchor_weight", 1.0);
  const bool want_teacher_anchors = cfg.get_bool("data.teacher_anchors", teacher_trainer);
  const long synth = cfg.get_int("data.synthetic_observations", 0);
  const bool synth_depth = cfg.get_bool("data.observe_depth", false);
  const auto obs_seed = static_cast<std::uint64_t>(cfg.get_int("data.observation_seed", 3));
  const double noise = cfg.get_double("data.noise", 0.0);
  const auto noise_seed = static_cast<std::uint64_t>(cfg.get_int("data.noise_seed", 5));
  const auto obs_path = cfg.get_optional_path("data.observations");
  const auto anchor_path = cfg.get_optional_path("data.anchors");
  if (with_data) {
    if (want_teacher_anchors || synth > 0) {
      const Trajectory traj = run_teacher(c.domain, c.ic, c.teacher);
      if (want_teacher_anchors) {
        AnchorSet a;
        a.times = traj.times;
        a.states = traj.states;
        c.data.anchors.append(a);
      }
      if (synth > 0) {
        auto obs = sample_observations(c.domain, traj, static_cast<int>(synth), synth_depth, obs_seed);
        c.data.observations.insert(c.data.observations.end(), obs.begin(), obs.end());
      }
    }
    if (obs_path) {
      auto obs = read_observations(*obs_path);
      c.data.observations.insert(c.data.observations.end(), obs.begin(), obs.end());
    }
    if (anchor_path) {
      AnchorSet a = read_anchor_set(*anchor_path, c.domain.mesh.cells.size());
      a.weights.assign(a.size(), lambda_anchor);
      c.data.anchors.append(a);
    }
    c.data.observations = add_noise(std::move(c.data.observations), noise, noise_seed);
  }

  c.eval.reference = cfg.get_string("eval.reference", c.dambreak ? "stoker" : "teacher");
  if (c.eval.reference != "stoker" && c.eval.reference != "teacher" && c.eval.reference != "anchors")
    throw ConfigError("eval.reference must be stoker, teacher or anchors");
  if (c.eval.reference == "stoker" && !c.dambreak)
    throw ConfigError("eval.reference = stoker needs initial.kind = dambreak");
  c.eval.times = cfg.get_doubles("eval.times", {c.t1});
  c.eval.anchors = cfg.get_optional_path("eval.anchors");
  if (c.eval.reference == "anchors" && !c.eval.anchors)
    throw ConfigError("eval.reference = anchors needs eval.anchors");

  c.landscape.alphas = cfg.get_doubles(
      "landscape.alphas", {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5});
  if (std::find(c.landscape.alphas.begin(), c.landscape.alphas.end(), 0.0) == c.landscape.alphas.end() ||
      std::find(c.landscape.alphas.begin(), c.landscape.alphas.end(), 1.0) == c.landscape.alphas.end())
    throw ConfigError("landscape.alphas must include 0 and 1");
  c.landscape.n_t = static_cast<int>(cfg.get_int("landscape.n_t", 10));
  c.landscape.seed = static_cast<std::uint64_t>(cfg.get_int("landscape.seed", 7));

  c.gradcheck.step = cfg.get_double("gradcheck.step", c.gradcheck.step);
  c.gradcheck.samples = static_cast<int>(cfg.get_int("gradcheck.samples", 0));
  c.gradcheck.n_t = static_cast<int>(cfg.get_int("gradcheck.n_t", 2));
  c.gradcheck.seed = static_cast<std::uint64_t>(cfg.get_int("gradcheck.seed", 11));
  c.gradcheck.tolerance = cfg.get_double("gradcheck.tolerance", 1e-6);

  t.validate();
  return c;
}

State reference_state(const Case& c, double t) {
  const Domain& d = c.domain;
  const std::size_t nc = d.mesh.cells.size();
  if (c.eval.reference == "stoker") {
    const DamBreakStar star = stoker_star_state(*c.dambreak);
    State s(nc);
    for (std::size_t i = 0; i < nc; ++i) {
      const DepthVelocity r = stoker_dambreak(*c.dambreak, star, d.mesh.cells[i].centroid[0], t - c.t0);
      s.set(i, {r.h - d.bathy.h_s[i], r.h * r.u, 0.0});
    }
    return s;
  }
  if (c.eval.reference == "anchors") {
    const AnchorSet a = read_anchor_set(*c.eval.anchors, nc);
    for (std::size_t k = 0; k < a.size(); ++k)
      if (std::abs(a.times[k] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return a.states[k];
    throw std::invalid_argument("no anchor snapshot at t = " + std::to_string(t));
  }
  if (t == c.t0) return c.ic;
  TeacherConfig tc = c.teacher;
  tc.t_end = t;
  tc.n_snap = 2;
  return run_teacher(d, c.ic, tc).states.back();
}

}  // namespace fvpinn
