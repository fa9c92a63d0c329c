#pragma once

// Two-phase optimisation (Adam with step decay, then L-BFGS on frozen time
// samples) and sequential time-window training with IC handoff.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fvpinn/execution.hpp"
#include "fvpinn/lbfgs.hpp"
#include "fvpinn/losses.hpp"
#include "fvpinn/network.hpp"

namespace fvpinn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double decay = 1.0;   // learning rate factor applied every decay_every steps
  int decay_every = 0;  // 0 disables decay
  int epochs = 1000;

  void validate() const;
  /// Learning rate at 0-based step `step`.
  double lr_at(long step) const;
};

struct AdamState {
  std::vector<double> m, v;
  long step = 0;
};

/// One bias-corrected Adam update at the scheduled learning rate.
void adam_step(AdamState& state, const AdamConfig& cfg, std::span<double> params,
               std::span<const double> grads);

/// n_t i.i.d. draws from the closed interval [t0, t1].
std::vector<double> sample_times(int n_t, double t0, double t1, std::mt19937_64& rng);

struct TrainConfig {
  int n_t = 5;
  double t0 = 0.0;
  double t1 = 1.0;
  std::uint64_t seed = 0;  // time sampling
  LossWeights weights;
  AdamConfig adam;
  LBFGSConfig lbfgs;  // max_iterations = 0 skips the phase
  bool record_wall_clock = false;

  void validate() const;
};

struct HistoryRow {
  long step = 0;
  std::string phase;
  LossBreakdown loss;
  double lr = 0.0;
  double wall_s = 0.0;
};

struct TrainHistory {
  std::vector<HistoryRow> rows;

  /// step,phase,loss_total,loss_fvm,loss_bc,loss_ic,loss_data,lr,wall_s
  std::string to_csv() const;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, ParamVector last_good)
      : std::runtime_error(what), last_good_(std::move(last_good)) {}
  const ParamVector& last_good() const noexcept { return last_good_; }

 private:
  ParamVector last_good_;
};

/// Everything the objective needs besides the parameters.
struct TrainProblem {
  const Domain* domain = nullptr;
  const SurrogateNetwork* net = nullptr;
  LossData data;
};

using ProgressFn = std::function<void(const HistoryRow&)>;

struct TrainResult {
  ParamVector params;
  TrainHistory history;
};

/// Adam phase (fresh time samples every step) then L-BFGS on one frozen set.
/// Throws TrainingError carrying the last finite parameters on a non-finite loss.
TrainResult train_standard(const TrainProblem& problem, ParamVector params, const TrainConfig& cfg,
                           Execution exec = Execution::parallel, const ProgressFn& progress = {},
                           const std::string& phase_prefix = "");

struct WindowPlan {
  std::vector<double> boundaries;  // tau_0 < tau_1 < ... < tau_N

  static WindowPlan uniform(double t0, double t1, int n);
  int count() const noexcept { return static_cast<int>(boundaries.size()) - 1; }
  void validate() const;
  /// Unique window owning t: [tau_0, tau_1] for the first, (tau_{k-1}, tau_k] after.
  int window_of(double t) const;
};

struct WindowResult {
  std::vector<ParamVector> params;
  std::vector<State> initial_states;  // IC used by each window
  TrainHistory history;
  WindowPlan plan;
};

/// Network prediction at every cell centroid; the handoff state between windows.
State predict_field(const SurrogateNetwork& net, std::span<const double> params, const Domain& d,
                    double t, Execution exec = Execution::parallel);

/// Windows train in sequence; window k starts from window k-1's parameters
/// and takes its prediction at tau_{k-1} as the initial condition. Only data
/// with timestamps inside the window are used.
WindowResult train_windows(const TrainProblem& problem, ParamVector params, const TrainConfig& cfg,
                           const WindowPlan& plan, Execution exec = Execution::parallel,
                           const ProgressFn& progress = {});

/// Evaluates the windowed surrogate at time t on every centroid.
State predict_windows(const SurrogateNetwork& net, const WindowResult& w, const Domain& d, double t,
                      Execution exec = Execution::parallel);

}  // namespace fvpinn
