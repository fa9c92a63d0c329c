#include "fvpinn/teacher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fvpinn {

namespace {

Conserved<double> load(const State& q, int c) { return q.at(static_cast<std::size_t>(c)); }

void add_sources(const Domain& d, const State& q, State& out, bool parallel) {
  const int nc = d.mesh.n_cells();
#pragma omp parallel for schedule(static) if (parallel)
  for (int c = 0; c < nc; ++c) {
    const Flux<double> s = source_term(load(q, c), c, d.bathy, d.mesh, d.phys);
    const auto i = static_cast<std::size_t>(c);
    out.uh[i] += s[1];
    out.vh[i] += s[2];
  }
}

}  // namespace

double rhs(const Domain& d, const State& q, State& out, Execution exec) {
  const Mesh& m = d.mesh;
  const int nf = m.n_faces();
  const int nc = m.n_cells();
  const bool parallel = exec == Execution::parallel;
  if (out.size() != q.size()) out = State(q.size());

  // Face pass then cell gather: no write conflicts, and the per-cell sum runs
  // in the fixed CSR order regardless of the thread count.
  std::vector<Flux<double>> fluxes(static_cast<std::size_t>(nf));
  auto cell_state = [&q](int c) { return load(q, c); };
#pragma omp parallel for schedule(static) if (parallel)
  for (int f = 0; f < nf; ++f) {
    const Face& face = m.faces[static_cast<std::size_t>(f)];
    Flux<double> fl = face_flux<double>(m, d.bathy, d.bcs, d.phys, face, cell_state);
    for (double& v : fl) v *= face.length;
    fluxes[static_cast<std::size_t>(f)] = fl;
  }

#pragma omp parallel for schedule(static) if (parallel)
  for (int c = 0; c < nc; ++c) {
    double acc[3] = {0.0, 0.0, 0.0};
    for (const CellFace& cf : m.faces_of(c)) {
      const Flux<double>& fl = fluxes[static_cast<std::size_t>(cf.face)];
      for (int k = 0; k < 3; ++k) acc[k] += cf.sign * fl[k];
    }
    const auto i = static_cast<std::size_t>(c);
    const double inv_a = 1.0 / m.cells[i].area;
    out.xi[i] = -acc[0] * inv_a;
    out.uh[i] = -acc[1] * inv_a;
    out.vh[i] = -acc[2] * inv_a;
  }
  add_sources(d, q, out, parallel);

  double boundary_out = 0.0;
  for (const Face& f : m.faces)
    if (f.is_boundary()) boundary_out += fluxes[static_cast<std::size_t>(f.id)][0];
  return boundary_out;
}

double rhs_reference(const Domain& d, const State& q, State& out) {
  std::vector<Flux<double>> acc;
  const double boundary_out = accumulate_face_fluxes<double>(
      d.mesh, d.bathy, d.bcs, d.phys, [&q](int c) { return load(q, c); }, acc);
  out = State(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double inv_a = 1.0 / d.mesh.cells[i].area;
    const Flux<double> s = source_term(q.at(i), static_cast<int>(i), d.bathy, d.mesh, d.phys);
    out.xi[i] = -acc[i][0] * inv_a + s[0];
    out.uh[i] = -acc[i][1] * inv_a + s[1];
    out.vh[i] = -acc[i][2] * inv_a + s[2];
  }
  return boundary_out;
}

double heun_step(const Domain& d, State& q, double dt, Execution exec) {
  const double inflow =
      heun_step(q, dt, [&](const State& s, State& out) { return rhs(d, s, out, exec); });
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!std::isfinite(q.xi[i]) || !std::isfinite(q.uh[i]) || !std::isfinite(q.vh[i]))
      throw TeacherError("non-finite state in cell " + std::to_string(i));
  }
  return inflow;
}

double stable_dt(const Domain& d, const State& q, double cfl) {
  const Mesh& m = d.mesh;
  double best = std::numeric_limits<double>::infinity();
  for (int c = 0; c < m.n_cells(); ++c) {
    const auto i = static_cast<std::size_t>(c);
    const Primitive<double> w = recover_primitives(q.at(i), d.bathy.h_s[i], d.phys);
    if (w.h <= d.phys.h_min) continue;
    const double cel = std::sqrt(d.phys.g * w.h);
    double denom = 0.0;
    for (const CellFace& cf : m.faces_of(c)) {
      const Face& f = m.faces[static_cast<std::size_t>(cf.face)];
      denom += f.length * (std::abs(w.u * f.normal[0] + w.v * f.normal[1]) + cel);
    }
    if (denom > 0.0) best = std::min(best, m.cells[i].area / denom);
  }
  if (!std::isfinite(best)) throw TeacherError("no wet cell to derive a time step from");
  return cfl * best;
}

Trajectory run_teacher(const Domain& d, const State& ic, const TeacherConfig& cfg, Execution exec) {
  if (ic.size() != d.mesh.cells.size())
    throw std::invalid_argument("initial state has " + std::to_string(ic.size()) +
                                " cells, mesh has " + std::to_string(d.mesh.cells.size()));
  if (cfg.n_snap < 2) throw std::invalid_argument("n_snap must be at least 2");
  if (!(cfg.t_end > cfg.t0)) throw std::invalid_argument("t_end must exceed t0");
  if (cfg.dt <= 0.0 && !(cfg.cfl > 0.0)) throw std::invalid_argument("cfl must be positive");

  Trajectory tr;
  State q = ic;
  tr.times.push_back(cfg.t0);
  tr.states.push_back(q);
  const double span = cfg.t_end - cfg.t0;
  double t = cfg.t0;
  for (int k = 1; k < cfg.n_snap; ++k) {
    const double target = k + 1 == cfg.n_snap ? cfg.t_end : cfg.t0 + span * k / (cfg.n_snap - 1);
    double inflow = 0.0;
    while (t < target) {
      double dt = cfg.dt > 0.0 ? cfg.dt : stable_dt(d, q, cfg.cfl);
      // Land exactly on the snapshot; absorb a sliver remainder into this step.
      const bool last = t + dt >= target || target - (t + dt) < 1e-9 * dt;
      if (last) dt = target - t;
      inflow += heun_step(d, q, dt, exec);
      ++tr.steps;
      t = last ? target : t + dt;
      for (std::size_t i = 0; i < q.size(); ++i) {
        const double mag = std::max({std::abs(q.xi[i]), std::abs(q.uh[i]), std::abs(q.vh[i])});
        if (mag > cfg.blowup)
          throw TeacherError("solution blew up in cell " + std::to_string(i) + " at t = " +
                             std::to_string(t));
      }
    }
    tr.times.push_back(target);
    tr.states.push_back(q);
    tr.boundary_inflow.push_back(inflow);
  }
  return tr;
}

double mass_perturbation(const Mesh& mesh, const State& q) {
  double m = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) m += mesh.cells[i].area * q.xi[i];
  return m;
}

double total_mass(const Domain& d, const State& q) {
  double m = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i)
    m += d.mesh.cells[i].area * (q.xi[i] + d.bathy.h_s[i]);
  return m;
}

}  // namespace fvpinn
