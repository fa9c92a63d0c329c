#include "fvpinn/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fvpinn/io.hpp"

namespace fvpinn {

double l2_error(std::span<const double> pred, std::span<const double> ref,
                std::span<const double> areas) {
  if (pred.size() != ref.size() || pred.size() != areas.size())
    throw std::invalid_argument("l2_error: field lengths differ");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - ref[i];
    num += areas[i] * e * e;
    den += areas[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

double linf_error(std::span<const double> pred, std::span<const double> ref) {
  if (pred.size() != ref.size()) throw std::invalid_argument("linf_error: field lengths differ");
  double m = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) m = std::max(m, std::abs(pred[i] - ref[i]));
  return m;
}

std::vector<double> cell_areas(const Mesh& mesh) {
  std::vector<double> a;
  a.reserve(mesh.cells.size());
  for (const Cell& c : mesh.cells) a.push_back(c.area);
  return a;
}

std::vector<double> depth(const Domain& d, const State& s) {
  std::vector<double> h(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) h[i] = s.xi[i] + d.bathy.h_s[i];
  return h;
}

std::vector<double> speed(const Domain& d, const State& s) {
  std::vector<double> u(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Primitive<double> w = recover_primitives(s.at(i), d.bathy.h_s[i], d.phys);
    u[i] = std::hypot(w.u, w.v);
  }
  return u;
}

std::vector<ErrorEntry> error_report(const Domain& d, const State& pred, const State& ref, double t) {
  const auto a = cell_areas(d.mesh);
  std::vector<ErrorEntry> out;
  auto add = [&](const std::string& var, const std::vector<double>& p, const std::vector<double>& r) {
    out.push_back({t, var, l2_error(p, r, a), linf_error(p, r)});
  };
  add("h", depth(d, pred), depth(d, ref));
  add("speed", speed(d, pred), speed(d, ref));
  add("xi", pred.xi, ref.xi);
  add("uh", pred.uh, ref.uh);
  add("vh", pred.vh, ref.vh);
  return out;
}

std::string format_error_report(std::span<const ErrorEntry> rows) {
  std::ostringstream o;
  o << "time,var,l2,linf\n";
  for (const ErrorEntry& e : rows)
    o << format_double(e.time) << ',' << e.var << ',' << format_double(e.l2) << ','
      << format_double(e.linf) << '\n';
  return o.str();
}

std::string LandscapeCurve::to_csv() const {
  std::ostringstream o;
  o << "alpha,loss_fvm,loss_data,loss_total\n";
  for (std::size_t k = 0; k < alpha.size(); ++k)
    o << format_double(alpha[k]) << ',' << format_double(loss[k].fvm) << ','
      << format_double(loss[k].data) << ',' << format_double(loss[k].total) << '\n';
  return o.str();
}

LandscapeCurve alpha_sweep(LossEvaluator& ev, std::span<const double> params,
                           std::span<const double> alphas, std::span<const double> times) {
  LandscapeCurve c;
  for (double a : alphas) {
    c.alpha.push_back(a);
    c.loss.push_back(ev.evaluate(params, times, nullptr, a));
  }
  return c;
}

ConservationReport conservation_audit(const Trajectory& traj, const Domain& d) {
  if (traj.times.size() < 2) throw std::invalid_argument("audit needs at least two snapshots");
  if (traj.boundary_inflow.size() + 1 != traj.times.size())
    throw std::invalid_argument("trajectory lacks per-interval boundary inflow");
  ConservationReport r;
  for (std::size_t k = 0; k + 1 < traj.times.size(); ++k) {
    ConservationInterval iv;
    iv.t0 = traj.times[k];
    iv.t1 = traj.times[k + 1];
    // Differences of sum A h equal differences of sum A xi; the latter avoids
    // cancellation against the large still-water volume.
    iv.mass_change = mass_perturbation(d.mesh, traj.states[k + 1]) -
                     mass_perturbation(d.mesh, traj.states[k]);
    iv.boundary_inflow = traj.boundary_inflow[k];
    iv.abs_error = std::abs(iv.mass_change - iv.boundary_inflow);
    const double scale = total_mass(d, traj.states[k]);
    iv.rel_error = scale > 0.0 ? iv.abs_error / scale : iv.abs_error;
    r.max_rel_error = std::max(r.max_rel_error, iv.rel_error);
    r.intervals.push_back(iv);
  }
  return r;
}

GradcheckReport gradient_check(LossEvaluator& ev, std::span<const double> params,
                               std::span<const double> times, double step,
                               std::vector<std::size_t> indices) {
  GradcheckReport r;
  if (indices.empty())
    for (std::size_t i = 0; i < params.size(); ++i) indices.push_back(i);
  std::vector<double> grad;
  ev.evaluate(params, times, &grad);
  std::vector<double> p(params.begin(), params.end());
  double fd_max = 0.0;
  for (std::size_t i : indices) {
    const double orig = p[i];
    auto f = [&](double s) {
      p[i] = orig + s;
      return ev.evaluate(p, times).total;
    };
    const double fd = (f(-2.0 * step) - 8.0 * f(-step) + 8.0 * f(step) - f(2.0 * step)) / (12.0 * step);
    p[i] = orig;
    r.indices.push_back(i);
    r.analytic.push_back(grad[i]);
    r.numeric.push_back(fd);
    fd_max = std::max(fd_max, std::abs(fd));
  }
  const double floor = std::max(1e-4 * fd_max, 1e-300);
  for (std::size_t k = 0; k < r.indices.size(); ++k) {
    const double g = r.analytic[k], fd = r.numeric[k];
    const double rel = std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), floor});
    if (rel > r.max_rel_error) {
      r.max_rel_error = rel;
      r.worst = r.indices[k];
    }
  }
  return r;
}

}  // namespace fvpinn
