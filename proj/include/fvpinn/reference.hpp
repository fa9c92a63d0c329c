#pragma once

// Closed-form and semi-analytic reference solutions.

#include "fvpinn/mesh.hpp"
#include "fvpinn/swe.hpp"

namespace fvpinn {

struct DamBreakSpec {
  double h_left = 2.0;
  double h_right = 0.5;
  double x0 = 10.0;
  double g = 9.81;
};

/// Middle (star) state of the wet-bed dam break: left rarefaction + right shock.
struct DamBreakStar {
  double h_mid = 0.0;
  double u_mid = 0.0;
  double shock_speed = 0.0;
};

/// Bisection on the rarefaction/shock compatibility relation over
/// [h_right, h_left], to `tol` in depth.
DamBreakStar stoker_star_state(const DamBreakSpec& spec, double tol = 1e-12);

struct DepthVelocity {
  double h = 0.0;
  double u = 0.0;
};

/// Exact wet-bed dam-break solution at (x, t).
DepthVelocity stoker_dambreak(const DamBreakSpec& spec, double x, double t);
DepthVelocity stoker_dambreak(const DamBreakSpec& spec, const DamBreakStar& star, double x,
                              double t);

/// Parabolic bump of the transcritical benchmark: 0.2 - 0.05 (x - 10)^2 on (8, 12).
double bump_bed(double x);

/// Quiescent state at water surface w_s on a mesh whose reference_ws is w_s.
/// Throws when any cell or face would be dry.
State lake_at_rest(const Mesh& mesh, double w_s);

}  // namespace fvpinn
