#pragma once

// Explicit finite-volume solver (Heun predictor-corrector) producing
// reference trajectories with the same flux, source and ghost code as the
// training loss.

#include <stdexcept>
#include <string>
#include <vector>

#include "fvpinn/execution.hpp"
#include "fvpinn/swe.hpp"

namespace fvpinn {

class TeacherError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TeacherConfig {
  double cfl = 0.5;
  double dt = 0.0;  // fixed step when > 0, otherwise adaptive from cfl
  int n_snap = 2;
  double t0 = 0.0;
  double t_end = 1.0;
  double blowup = 1e6;  // abort when max |Q| exceeds this
};

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  /// Time-integrated net boundary mass inflow over each snapshot interval
  /// (size times.size() - 1), accumulated with the same fluxes as the update.
  std::vector<double> boundary_inflow;
  long steps = 0;
};

/// dQ/dt = -(1/A) sum_f F l + S per cell. Returns the net boundary mass
/// outflow sum_{boundary f} F_mass l.
double rhs(const Domain& d, const State& q, State& out, Execution exec = Execution::parallel);

/// Textbook serial face scatter; kept as the reference for rhs().
double rhs_reference(const Domain& d, const State& q, State& out);

/// One Heun step with a user-supplied right-hand side
/// `double f(const State&, State& out)` returning boundary outflow.
/// Returns the boundary mass inflow integrated over the step.
template <class Rhs>
double heun_step(State& q, double dt, Rhs&& f) {
  const std::size_t n = q.size();
  State k1(n), k2(n), pred(n);
  const double out1 = f(q, k1);
  for (std::size_t i = 0; i < n; ++i) {
    pred.xi[i] = q.xi[i] + dt * k1.xi[i];
    pred.uh[i] = q.uh[i] + dt * k1.uh[i];
    pred.vh[i] = q.vh[i] + dt * k1.vh[i];
  }
  const double out2 = f(pred, k2);
  const double half = 0.5 * dt;
  for (std::size_t i = 0; i < n; ++i) {
    q.xi[i] += half * (k1.xi[i] + k2.xi[i]);
    q.uh[i] += half * (k1.uh[i] + k2.uh[i]);
    q.vh[i] += half * (k1.vh[i] + k2.vh[i]);
  }
  return -half * (out1 + out2);
}

/// Heun step of the shallow water system; throws TeacherError naming the
/// first cell with a non-finite value.
double heun_step(const Domain& d, State& q, double dt, Execution exec = Execution::parallel);

/// cfl * min over wet cells of A_i / sum_f l_f (|u_n| + c).
double stable_dt(const Domain& d, const State& q, double cfl);

Trajectory run_teacher(const Domain& d, const State& ic, const TeacherConfig& cfg,
                       Execution exec = Execution::parallel);

/// Total mass sum_i A_i xi_i (differences equal differences of sum A h).
double mass_perturbation(const Mesh& mesh, const State& q);
double total_mass(const Domain& d, const State& q);

}  // namespace fvpinn
