#pragma once

// The four-term training objective (FVM residual, initial condition, soft
// boundary penalty, masked data) and the data files that feed it.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fvpinn/execution.hpp"
#include "fvpinn/network.hpp"
#include "fvpinn/network_batch.hpp"
#include "fvpinn/swe.hpp"
#include "fvpinn/teacher.hpp"

namespace fvpinn {

struct LossWeights {
  double fvm = 1.0;
  double bc = 0.0;
  double ic = 0.0;
  double data = 0.0;

  void validate() const;
};

/// Point measurement in primitive space; masked-off values are ignored.
struct Observation {
  double x = 0.0, y = 0.0, t = 0.0;
  double h = 0.0, u = 0.0, v = 0.0;
  bool mask_h = false, mask_u = false, mask_v = false;

  bool any() const noexcept { return mask_h || mask_u || mask_v; }
};

/// Dense per-cell snapshots compared in perturbation space.
struct AnchorSet {
  std::vector<double> times;
  std::vector<State> states;
  std::vector<double> weights;  // per snapshot; empty means all 1

  std::size_t size() const noexcept { return times.size(); }
  double weight(std::size_t k) const { return weights.empty() ? 1.0 : weights[k]; }
  void append(const AnchorSet& other);
};

struct LossBreakdown {
  double fvm = 0.0;
  double bc = 0.0;
  double ic = 0.0;
  double data = 0.0;
  double total = 0.0;
};

/// Fills `total` = sum of weight * term.
LossBreakdown total_loss(LossBreakdown terms, const LossWeights& w);

/// R_i = dQ_i/dt + (1/A_i) sum_f F l - S_i, for any scalar type. `q(c)` and
/// `q_t(c)` return the predicted state and its time derivative in cell c.
template <class T, class QFn, class QtFn>
std::vector<Flux<T>> fvm_residual(const Domain& d, QFn&& q, QtFn&& q_t) {
  std::vector<Flux<T>> div;
  accumulate_face_fluxes<T>(d.mesh, d.bathy, d.bcs, d.phys, q, div);
  for (int c = 0; c < d.mesh.n_cells(); ++c) {
    const auto i = static_cast<std::size_t>(c);
    const double inv_a = 1.0 / d.mesh.cells[i].area;
    const Flux<T> s = source_term(q(c), c, d.bathy, d.mesh, d.phys);
    const Conserved<T> qt = q_t(c);
    div[i] = {qt.xi + div[i][0] * inv_a - s[0], qt.uh + div[i][1] * inv_a - s[1],
              qt.vh + div[i][2] * inv_a - s[2]};
  }
  return div;
}

/// Network residual at one time, states taken at the cell centroids.
std::vector<Flux<double>> fvm_residual_at(const SurrogateNetwork& net, std::span<const double> params,
                                          const Domain& d, double t);

struct LossData {
  State ic;
  double t0 = 0.0;
  std::vector<Observation> observations;
  AnchorSet anchors;
  double observation_weight = 1.0;  // per-source multipliers inside the pooled mean
  double anchor_weight = 1.0;
};

/// Evaluates all four terms, and optionally the gradient of the weighted
/// total, with blocked network passes and a taped residual head.
class LossEvaluator {
 public:
  LossEvaluator(const Domain& d, const SurrogateNetwork& net, LossData data, LossWeights weights,
                Execution exec = Execution::parallel);

  /// `momentum_scale` evaluates the modified predictor (xi, a uh, a vh).
  LossBreakdown evaluate(std::span<const double> params, std::span<const double> times,
                         std::vector<double>* grad = nullptr, double momentum_scale = 1.0);

  const LossWeights& weights() const noexcept { return weights_; }
  void set_weights(const LossWeights& w) {
    w.validate();
    weights_ = w;
  }
  const LossData& data() const noexcept { return data_; }
  std::size_t data_points() const noexcept { return data_.observations.size() + anchor_points_; }

 private:
  const Domain* d_;
  const SurrogateNetwork* net_;
  LossData data_;
  LossWeights weights_;
  Execution exec_;
  std::vector<double> obs_h_s_;
  std::size_t anchor_points_ = 0;
  BatchNetwork fvm_batch_;
  BatchNetwork point_batch_;
};

double loss_fvm(const SurrogateNetwork& net, std::span<const double> params, const Domain& d,
                std::span<const double> times);
double loss_ic(const SurrogateNetwork& net, std::span<const double> params, const Domain& d,
               const State& ic, double t0);
double loss_bc(const SurrogateNetwork& net, std::span<const double> params, const Domain& d,
               std::span<const double> times);
double loss_data(const SurrogateNetwork& net, std::span<const double> params, const Domain& d,
                 std::span<const Observation> observations, const AnchorSet& anchors);

/// Gaussian noise with std level * max|u| over the set, added to every
/// observed velocity component; deterministic per seed.
std::vector<Observation> add_noise(std::vector<Observation> obs, double level, std::uint64_t seed);

// Files -------------------------------------------------------------------

std::vector<Observation> read_observations(const std::string& path);
std::string format_observations(std::span<const Observation> obs);

State read_anchor(const std::string& path, std::size_t n_cells);
std::string format_anchor(const State& s);

/// Writes one anchor CSV per snapshot plus `index.csv` (index,time,file).
void write_trajectory(const std::string& dir, const Trajectory& traj);
/// Reads an index written by write_trajectory.
AnchorSet read_anchor_set(const std::string& index_path, std::size_t n_cells);

}  // namespace fvpinn
