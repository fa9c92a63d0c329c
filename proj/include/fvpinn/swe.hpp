#pragma once

// Perturbation-form shallow water physics: Q = (xi, uh, vh) with
// h = xi + h_s. Everything here is templated on the scalar so the forward
// solver (double) and the training loss (ad::Var) run the same code.

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "fvpinn/ad.hpp"
#include "fvpinn/mesh.hpp"

namespace fvpinn {

struct PhysParams {
  double g = 9.81;
  double rho = 1000.0;
  std::vector<double> manning_n{0.0};  // per Manning zone
  double h_min = 1e-6;

  double manning(int zone) const { return manning_n.at(static_cast<std::size_t>(zone)); }
  void validate() const;
};

template <class T>
struct Conserved {
  T xi{};
  T uh{};
  T vh{};
};

template <class T>
using Flux = std::array<T, 3>;

/// Full-mesh state, one entry per cell.
struct State {
  std::vector<double> xi, uh, vh;

  State() = default;
  explicit State(std::size_t n) : xi(n, 0.0), uh(n, 0.0), vh(n, 0.0) {}

  std::size_t size() const noexcept { return xi.size(); }
  Conserved<double> at(std::size_t i) const { return {xi[i], uh[i], vh[i]}; }
  void set(std::size_t i, const Conserved<double>& q) {
    xi[i] = q.xi;
    uh[i] = q.uh;
    vh[i] = q.vh;
  }
  friend bool operator==(const State&, const State&) = default;
};

struct Bathymetry {
  std::vector<double> z_b;        // per cell
  std::vector<double> h_s;        // per cell, max(0, reference_ws - z_b)
  std::vector<double> h_s_face;   // per face
  std::vector<Vec2> bed_slope;    // per cell (S0x, S0y) = -(1/A) sum_f z_b,f l_f n_f

  static Bathymetry from_mesh(const Mesh& mesh);
};

/// Per-patch boundary data resolved to per-unit-width quantities.
struct BoundaryCondition {
  PatchKind kind = PatchKind::wall;
  double q_in = 0.0;     // inflow discharge per unit width, positive into the domain
  double xi_exit = 0.0;  // prescribed w_s - reference_ws
};

struct BoundaryData {
  std::vector<BoundaryCondition> patches;

  static BoundaryData from_mesh(const Mesh& mesh);
  const BoundaryCondition& of_face(const Face& f) const {
    return patches.at(static_cast<std::size_t>(f.patch));
  }
};

template <class T>
struct Primitive {
  T h{};
  T u{};
  T v{};
};

/// h = max(xi + h_s, h_min); velocities are zero on the floor.
template <class T>
Primitive<T> recover_primitives(const Conserved<T>& q, double h_s, const PhysParams& p) {
  T h = q.xi + h_s;
  if (ad::value(h) <= p.h_min) return {T(p.h_min), T(0.0), T(0.0)};
  return {h, q.uh / h, q.vh / h};
}

/// F n_x + G n_y with the well-balanced pressure 1/2 g (xi^2 + 2 xi h_s).
template <class T>
Flux<T> normal_flux(const Conserved<T>& q, double h_s_face, const Vec2& n, const PhysParams& p) {
  const Primitive<T> w = recover_primitives(q, h_s_face, p);
  const T un = w.u * n[0] + w.v * n[1];
  const T pressure = q.xi * (q.xi + 2.0 * h_s_face) * (0.5 * p.g);
  return {w.h * un, un * (w.h * w.u) + pressure * n[0], un * (w.h * w.v) + pressure * n[1]};
}

template <class T>
struct RoeDecomposition {
  std::array<T, 3> lambda;      // raw eigenvalues, ascending
  std::array<T, 3> abs_lambda;  // entropy-fixed |lambda|
  T un, ut, c;                  // Roe averages
  std::array<T, 3> alpha;       // wave strengths
  std::array<std::array<T, 3>, 3> r;  // right eigenvectors in the rotated frame
};

namespace detail {

// Harten-type smoothing of |lambda| near a sonic point.
template <class T>
T entropy_fixed_abs(const T& lam, const T& lam_left, const T& lam_right) {
  T eps = ad::max(ad::max(T(0.0), lam - lam_left), lam_right - lam);
  T a = ad::abs(lam);
  if (ad::value(a) < ad::value(eps)) return (lam * lam / eps + eps) * 0.5;
  return a;
}

}  // namespace detail

/// Rotated-frame Roe linearisation at a face. Jumps use xi (not h) with the
/// shared face still-water depth on both sides.
template <class T>
RoeDecomposition<T> roe_decomposition(const Conserved<T>& ql, const Conserved<T>& qr,
                                      double h_s_face, const Vec2& n, const PhysParams& p) {
  const Primitive<T> wl = recover_primitives(ql, h_s_face, p);
  const Primitive<T> wr = recover_primitives(qr, h_s_face, p);
  const T unl = wl.u * n[0] + wl.v * n[1];
  const T unr = wr.u * n[0] + wr.v * n[1];
  const T utl = wl.v * n[0] - wl.u * n[1];
  const T utr = wr.v * n[0] - wr.u * n[1];

  const T sl = ad::sqrt(wl.h);
  const T sr = ad::sqrt(wr.h);
  const T inv_s = T(1.0) / (sl + sr);

  RoeDecomposition<T> d;
  d.un = (sl * unl + sr * unr) * inv_s;
  d.ut = (sl * utl + sr * utr) * inv_s;
  d.c = ad::sqrt((wl.h + wr.h) * (0.5 * p.g));

  const T d1 = qr.xi - ql.xi;
  const T d2 = wr.h * unr - wl.h * unl;
  const T d3 = wr.h * utr - wl.h * utl;
  const T two_c = d.c * 2.0;
  d.alpha = {((d.un + d.c) * d1 - d2) / two_c, d3 - d.ut * d1, (d2 - (d.un - d.c) * d1) / two_c};

  d.lambda = {d.un - d.c, d.un, d.un + d.c};
  const T cl = ad::sqrt(wl.h * p.g);
  const T cr = ad::sqrt(wr.h * p.g);
  d.abs_lambda = {detail::entropy_fixed_abs(d.lambda[0], unl - cl, unr - cr), ad::abs(d.lambda[1]),
                  detail::entropy_fixed_abs(d.lambda[2], unl + cl, unr + cr)};
  d.r = {{{T(1.0), d.un - d.c, d.ut}, {T(0.0), T(0.0), T(1.0)}, {T(1.0), d.un + d.c, d.ut}}};
  return d;
}

template <class T>
Flux<T> roe_flux(const Conserved<T>& ql, const Conserved<T>& qr, double h_s_face, const Vec2& n,
                 const PhysParams& p) {
  const Flux<T> fl = normal_flux(ql, h_s_face, n, p);
  const Flux<T> fr = normal_flux(qr, h_s_face, n, p);
  const RoeDecomposition<T> d = roe_decomposition(ql, qr, h_s_face, n, p);

  const T w1 = d.abs_lambda[0] * d.alpha[0];
  const T w2 = d.abs_lambda[1] * d.alpha[1];
  const T w3 = d.abs_lambda[2] * d.alpha[2];
  const T diss_h = w1 + w3;
  const T diss_n = w1 * (d.un - d.c) + w3 * (d.un + d.c);
  const T diss_t = (w1 + w3) * d.ut + w2;
  const T diss_x = diss_n * n[0] - diss_t * n[1];
  const T diss_y = diss_n * n[1] + diss_t * n[0];

  return {(fl[0] + fr[0]) * 0.5 - diss_h * 0.5, (fl[1] + fr[1]) * 0.5 - diss_x * 0.5,
          (fl[2] + fr[2]) * 0.5 - diss_y * 0.5};
}

/// Cell source: Manning friction through Darcy-Weisbach plus the
/// perturbation-form bed-slope term -g xi S0.
template <class T>
Flux<T> source_term(const Conserved<T>& q, int cell, const Bathymetry& bathy, const Mesh& mesh,
                    const PhysParams& p) {
  const auto c = static_cast<std::size_t>(cell);
  const Vec2& s0 = bathy.bed_slope[c];
  T sx = -(q.xi * (p.g * s0[0]));
  T sy = -(q.xi * (p.g * s0[1]));
  const double n = p.manning(mesh.cells[c].manning_zone);
  if (n > 0.0) {
    const Primitive<T> w = recover_primitives(q, bathy.h_s[c], p);
    const T speed2 = w.u * w.u + w.v * w.v;
    if (ad::value(speed2) > 0.0) {
      // (f/8)|u| with f = 8 g n^2 / h^(1/3)
      const T k = ad::sqrt(speed2) * (p.g * n * n) / ad::cbrt(w.h);
      sx = sx - k * w.u;
      sy = sy - k * w.v;
    }
  }
  return {T(0.0), sx, sy};
}

/// Exterior state for a boundary face.
template <class T>
Conserved<T> ghost_state(const Conserved<T>& q, const BoundaryCondition& bc, const Face& face) {
  const double nx = face.normal[0], ny = face.normal[1];
  const T qn = q.uh * nx + q.vh * ny;
  const T qt = q.vh * nx - q.uh * ny;
  T xi = q.xi, gn = qn, gt = qt;
  switch (bc.kind) {
    case PatchKind::wall:
      gn = -qn;
      break;
    case PatchKind::inlet_discharge:
      // Face-mean inward discharge equals q_in; outward component is -q_in.
      gn = -(2.0 * bc.q_in) - qn;
      gt = T(0.0);
      break;
    case PatchKind::exit_wse:
      xi = 2.0 * bc.xi_exit - q.xi;
      break;
  }
  return {xi, gn * nx - gt * ny, gn * ny + gt * nx};
}

/// Numerical flux through `face` with the state of each adjacent cell given
/// by `cell_state(c)`; boundary faces use the ghost state.
template <class T, class CellState>
Flux<T> face_flux(const Mesh& mesh, const Bathymetry& bathy, const BoundaryData& bcs,
                  const PhysParams& p, const Face& face, CellState&& cell_state) {
  const Conserved<T> ql = cell_state(face.left_cell);
  const Conserved<T> qr =
      face.is_boundary() ? ghost_state(ql, bcs.of_face(face), face) : cell_state(face.right_cell);
  (void)mesh;
  return roe_flux(ql, qr, bathy.h_s_face[static_cast<std::size_t>(face.id)], face.normal, p);
}

/// Serial face loop: out[c] = sum over faces of sign * F * l (net outflow).
/// Returns the net mass outflow through boundary faces.
template <class T, class CellState>
T accumulate_face_fluxes(const Mesh& mesh, const Bathymetry& bathy, const BoundaryData& bcs,
                         const PhysParams& p, CellState&& cell_state, std::vector<Flux<T>>& out) {
  out.assign(mesh.cells.size(), Flux<T>{T(0.0), T(0.0), T(0.0)});
  T boundary_out(0.0);
  for (const Face& f : mesh.faces) {
    const Flux<T> fl = face_flux<T>(mesh, bathy, bcs, p, f, cell_state);
    auto& l = out[static_cast<std::size_t>(f.left_cell)];
    for (int k = 0; k < 3; ++k) l[k] = l[k] + fl[k] * f.length;
    if (f.is_boundary()) {
      boundary_out = boundary_out + fl[0] * f.length;
    } else {
      auto& r = out[static_cast<std::size_t>(f.right_cell)];
      for (int k = 0; k < 3; ++k) r[k] = r[k] - fl[k] * f.length;
    }
  }
  return boundary_out;
}

/// Mesh plus everything derived from it that the discretisation needs.
struct Domain {
  Mesh mesh;
  Bathymetry bathy;
  BoundaryData bcs;
  PhysParams phys;

  static Domain build(Mesh mesh, PhysParams phys) {
    phys.validate();
    for (const Cell& c : mesh.cells)
      if (c.manning_zone < 0 || static_cast<std::size_t>(c.manning_zone) >= phys.manning_n.size())
        throw std::invalid_argument("cell " + std::to_string(c.id) + " uses Manning zone " +
                                    std::to_string(c.manning_zone) + " with no coefficient");
    Domain d;
    d.bathy = Bathymetry::from_mesh(mesh);
    d.bcs = BoundaryData::from_mesh(mesh);
    d.mesh = std::move(mesh);
    d.phys = std::move(phys);
    return d;
  }
};

}  // namespace fvpinn
