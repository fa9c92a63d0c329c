#include "fvpinn/reference.hpp"

#include <cmath>
#include <stdexcept>

namespace fvpinn {

namespace {

// Velocity behind the left rarefaction minus velocity behind the right shock,
// both as functions of the middle depth; decreasing in h.
double compatibility(const DamBreakSpec& s, double h) {
  const double u_raref = 2.0 * (std::sqrt(s.g * s.h_left) - std::sqrt(s.g * h));
  const double u_shock =
      (h - s.h_right) * std::sqrt(0.5 * s.g * (h + s.h_right) / (h * s.h_right));
  return u_raref - u_shock;
}

}  // namespace

DamBreakStar stoker_star_state(const DamBreakSpec& spec, double tol) {
  if (!(spec.h_left > spec.h_right && spec.h_right > 0.0))
    throw std::invalid_argument("dam break requires h_left > h_right > 0");
  double lo = spec.h_right, hi = spec.h_left;
  // f(lo) > 0 > f(hi) for the wet-bed problem.
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (compatibility(spec, mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  DamBreakStar st;
  st.h_mid = 0.5 * (lo + hi);
  st.u_mid = 2.0 * (std::sqrt(spec.g * spec.h_left) - std::sqrt(spec.g * st.h_mid));
  st.shock_speed = st.h_mid * st.u_mid / (st.h_mid - spec.h_right);
  return st;
}

DepthVelocity stoker_dambreak(const DamBreakSpec& spec, const DamBreakStar& star, double x,
                              double t) {
  if (t < 0.0) throw std::invalid_argument("stoker_dambreak requires t >= 0");
  const double xi = x - spec.x0;
  if (t == 0.0) return xi < 0.0 ? DepthVelocity{spec.h_left, 0.0} : DepthVelocity{spec.h_right, 0.0};
  const double cl = std::sqrt(spec.g * spec.h_left);
  const double cm = std::sqrt(spec.g * star.h_mid);
  const double s = xi / t;
  if (s <= -cl) return {spec.h_left, 0.0};
  if (s <= star.u_mid - cm) {
    const double c = (2.0 * cl - s) / 3.0;
    return {c * c / spec.g, 2.0 * (cl + s) / 3.0};
  }
  if (s <= star.shock_speed) return {star.h_mid, star.u_mid};
  return {spec.h_right, 0.0};
}

DepthVelocity stoker_dambreak(const DamBreakSpec& spec, double x, double t) {
  return stoker_dambreak(spec, stoker_star_state(spec), x, t);
}

double bump_bed(double x) {
  if (x > 8.0 && x < 12.0) return 0.2 - 0.05 * (x - 10.0) * (x - 10.0);
  return 0.0;
}

State lake_at_rest(const Mesh& mesh, double w_s) {
  for (const Cell& c : mesh.cells)
    if (!(w_s > c.z_b))
      throw std::invalid_argument("lake_at_rest: cell " + std::to_string(c.id) +
                                  " would be dry (wet-dry fronts are not supported)");
  for (const Face& f : mesh.faces)
    if (!(w_s > f.z_b))
      throw std::invalid_argument("lake_at_rest: face " + std::to_string(f.id) + " would be dry");
  if (mesh.reference_ws != w_s)
    throw std::invalid_argument("lake_at_rest: mesh reference_ws must equal w_s");
  return State(mesh.cells.size());
}

}  // namespace fvpinn
