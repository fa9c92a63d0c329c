#pragma once

// Error norms, the momentum-scaling loss landscape and mass-budget audits.

#include <span>
#include <string>
#include <vector>

#include "fvpinn/losses.hpp"
#include "fvpinn/teacher.hpp"

namespace fvpinn {

/// sqrt(sum A (p - r)^2 / sum A)
double l2_error(std::span<const double> pred, std::span<const double> ref,
                std::span<const double> areas);
double linf_error(std::span<const double> pred, std::span<const double> ref);

std::vector<double> cell_areas(const Mesh& mesh);

struct ErrorEntry {
  double time = 0.0;
  std::string var;
  double l2 = 0.0;
  double linf = 0.0;
};

/// Errors of h, |u| and each conserved component of `pred` against `ref`.
std::vector<ErrorEntry> error_report(const Domain& d, const State& pred, const State& ref, double t);
std::vector<double> depth(const Domain& d, const State& s);
std::vector<double> speed(const Domain& d, const State& s);
std::string format_error_report(std::span<const ErrorEntry> rows);  // time,var,l2,linf

struct LandscapeCurve {
  std::vector<double> alpha;
  std::vector<LossBreakdown> loss;

  std::string to_csv() const;  // alpha,loss_fvm,loss_data,loss_total
};

/// Losses of (xi, a uh, a vh) on frozen evaluation times.
LandscapeCurve alpha_sweep(LossEvaluator& ev, std::span<const double> params,
                           std::span<const double> alphas, std::span<const double> times);

struct ConservationInterval {
  double t0 = 0.0, t1 = 0.0;
  double mass_change = 0.0;  // delta sum A h
  double boundary_inflow = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;  // relative to total mass at t0
};

struct ConservationReport {
  std::vector<ConservationInterval> intervals;
  double max_rel_error = 0.0;
  bool passes(double tol) const noexcept { return max_rel_error <= tol; }
};

ConservationReport conservation_audit(const Trajectory& traj, const Domain& d);

struct GradcheckReport {
  std::vector<std::size_t> indices;
  std::vector<double> analytic;
  std::vector<double> numeric;
  double max_rel_error = 0.0;
  std::size_t worst = 0;
};

/// Fourth-order central differences of the weighted total loss against the analytic
/// gradient on the given parameter indices (all when empty). The relative
/// error of a component is |g - fd| / max(|g|, |fd|, 1e-4 max|fd|).
GradcheckReport gradient_check(LossEvaluator& ev, std::span<const double> params,
                               std::span<const double> times, double step,
                               std::vector<std::size_t> indices = {});

}  // namespace fvpinn
