#pragma once

// Builds a runnable case (domain, initial state, data, network and training
// settings) from a Config. The key schema is documented in README.md.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fvpinn/config.hpp"
#include "fvpinn/losses.hpp"
#include "fvpinn/network.hpp"
#include "fvpinn/reference.hpp"
#include "fvpinn/teacher.hpp"
#include "fvpinn/training.hpp"

namespace fvpinn {

struct EvalSpec {
  std::string reference = "teacher";  // stoker | teacher | anchors
  std::vector<double> times;
  std::optional<std::string> anchors;  // index file for reference = anchors
};

struct LandscapeSpec {
  std::vector<double> alphas;
  int n_t = 10;
  std::uint64_t seed = 7;
};

struct GradcheckSpec {
  double step = 1e-4;
  int samples = 0;  // 0 checks every parameter
  int n_t = 2;
  std::uint64_t seed = 11;
  double tolerance = 1e-6;
};

struct Case {
  std::string name;
  Domain domain;
  State ic;
  double t0 = 0.0;
  double t1 = 1.0;
  NetworkConfig network;
  std::uint64_t init_seed = 0;
  TrainConfig train;
  int windows = 1;
  LossData data;
  TeacherConfig teacher;
  std::optional<DamBreakSpec> dambreak;
  EvalSpec eval;
  LandscapeSpec landscape;
  GradcheckSpec gradcheck;
  std::string output_dir = "out";
};

Mesh build_mesh_from_config(const Config& cfg);
Domain build_domain(const Config& cfg);

/// With `with_data` false, observation/anchor sources (and any teacher run
/// they need) are skipped.
Case build_case(const Config& cfg, bool with_data = true);

/// Velocity observations sampled from a teacher trajectory at random cell
/// centroids and snapshot times (t0 excluded).
std::vector<Observation> sample_observations(const Domain& d, const Trajectory& traj, int count,
                                             bool observe_depth, std::uint64_t seed);

/// Reference state for evaluation at time t.
State reference_state(const Case& c, double t);

}  // namespace fvpinn
