#include "fvpinn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "fvpinn/io.hpp"

namespace fvpinn {

void LossWeights::validate() const {
  for (double w : {fvm, bc, ic, data})
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("loss weights must be finite and non-negative");
}

void AnchorSet::append(const AnchorSet& other) {
  if (!weights.empty() || !other.weights.empty()) {
    weights.resize(times.size(), 1.0);
    for (std::size_t k = 0; k < other.size(); ++k) weights.push_back(other.weight(k));
  }
  times.insert(times.end(), other.times.begin(), other.times.end());
  states.insert(states.end(), other.states.begin(), other.states.end());
}

LossBreakdown total_loss(LossBreakdown t, const LossWeights& w) {
  t.total = w.fvm * t.fvm + w.bc * t.bc + w.ic * t.ic + w.data * t.data;
  return t;
}

std::vector<Flux<double>> fvm_residual_at(const SurrogateNetwork& net, std::span<const double> params,
                                          const Domain& d, double t) {
  const std::size_t nc = d.mesh.cells.size();
  std::vector<Conserved<double>> q(nc), qt(nc);
  for (std::size_t i = 0; i < nc; ++i) {
    const Cell& c = d.mesh.cells[i];
    q[i] = predict(net, params, c.centroid[0], c.centroid[1], t, d.bathy.h_s[i]);
    const auto dt = time_partial<double>(net, params, c.centroid[0], c.centroid[1], t, d.bathy.h_s[i]);
    qt[i] = {dt[0], dt[1], dt[2]};
  }
  return fvm_residual<double>(
      d, [&](int c) { return q[static_cast<std::size_t>(c)]; },
      [&](int c) { return qt[static_cast<std::size_t>(c)]; });
}

// ---------------------------------------------------------------------------

LossEvaluator::LossEvaluator(const Domain& d, const SurrogateNetwork& net, LossData data,
                             LossWeights weights, Execution exec)
    : d_(&d),
      net_(&net),
      data_(std::move(data)),
      weights_(weights),
      exec_(exec),
      fvm_batch_(net, exec),
      point_batch_(net, exec) {
  weights_.validate();
  const std::size_t nc = d.mesh.cells.size();
  if (data_.ic.size() != 0 && data_.ic.size() != nc)
    throw std::invalid_argument("initial state size does not match the mesh");
  for (const Observation& o : data_.observations) {
    if (!o.any()) throw std::invalid_argument("observation with no observed component");
    const int c = d.mesh.locate(o.x, o.y);
    if (c < 0)
      throw std::invalid_argument("observation at (" + std::to_string(o.x) + ", " +
                                  std::to_string(o.y) + ") lies outside the mesh");
    obs_h_s_.push_back(d.bathy.h_s[static_cast<std::size_t>(c)]);
  }
  if (data_.anchors.states.size() != data_.anchors.times.size())
    throw std::invalid_argument("anchor times and states differ in count");
  if (!data_.anchors.weights.empty() && data_.anchors.weights.size() != data_.anchors.size())
    throw std::invalid_argument("anchor weights and states differ in count");
  for (const State& s : data_.anchors.states)
    if (s.size() != nc) throw std::invalid_argument("anchor snapshot size does not match the mesh");
  anchor_points_ = data_.anchors.size() * nc;
}

LossBreakdown LossEvaluator::evaluate(std::span<const double> params, std::span<const double> times,
                                      std::vector<double>* grad, double alpha) {
  const Domain& d = *d_;
  const Mesh& m = d.mesh;
  const std::size_t nc = m.cells.size();
  const std::size_t nt = times.size();
  const bool want_grad = grad != nullptr;
  if (want_grad) grad->assign(net_->n_params, 0.0);
  LossBreakdown out;

  // --- FVM residual at centroids for every sampled time.
  if (nt > 0) {
    PointBatch pts;
    for (double t : times)
      for (std::size_t i = 0; i < nc; ++i)
        pts.add(m.cells[i].centroid[0], m.cells[i].centroid[1], t, d.bathy.h_s[i]);
    fvm_batch_.forward(params, pts, true);
    const auto& q = fvm_batch_.q();
    const auto& qt = fvm_batch_.q_t();
    std::vector<Conserved<double>> cot_q(q.size()), cot_qt(q.size());
    std::vector<double> per_time(nt, 0.0);
    const double norm = 1.0 / (static_cast<double>(nt) * static_cast<double>(nc));
    const double gw = weights_.fvm * norm;
    const long ntl = static_cast<long>(nt);
    std::string failure;

#pragma omp parallel for schedule(static) if (exec_ == Execution::parallel)
    for (long k = 0; k < ntl; ++k) {
      const std::size_t base = static_cast<std::size_t>(k) * nc;
      ad::Tape tape;
      ad::TapeScope scope(tape);
      std::vector<Conserved<ad::Var>> vq(nc), vqt(nc);
      for (std::size_t i = 0; i < nc; ++i) {
        const Conserved<double>& a = q[base + i];
        const Conserved<double>& b = qt[base + i];
        vq[i] = {ad::Var::make_leaf(a.xi), ad::Var::make_leaf(alpha * a.uh),
                 ad::Var::make_leaf(alpha * a.vh)};
        vqt[i] = {ad::Var::make_leaf(b.xi), ad::Var::make_leaf(alpha * b.uh),
                  ad::Var::make_leaf(alpha * b.vh)};
      }
      const auto r = fvm_residual<ad::Var>(
          d, [&](int c) { return vq[static_cast<std::size_t>(c)]; },
          [&](int c) { return vqt[static_cast<std::size_t>(c)]; });
      ad::Var sum(0.0);
      for (std::size_t i = 0; i < nc; ++i)
        sum = sum + (r[i][0] * r[i][0] + r[i][1] * r[i][1] + r[i][2] * r[i][2]) * m.cells[i].area;
      per_time[static_cast<std::size_t>(k)] = sum.value();
      if (tape.first_non_finite() != nullptr) {
#pragma omp critical(fvpinn_loss_failure)
        if (failure.empty()) failure = tape.first_non_finite();
        continue;
      }
      if (want_grad && gw != 0.0) {
        const std::vector<double> adj = tape.adjoints(sum.index());
        for (std::size_t i = 0; i < nc; ++i) {
          auto at = [&](const ad::Var& v) { return v.is_constant() ? 0.0 : adj[static_cast<std::size_t>(v.index())]; };
          cot_q[base + i] = {gw * at(vq[i].xi), gw * alpha * at(vq[i].uh), gw * alpha * at(vq[i].vh)};
          cot_qt[base + i] = {gw * at(vqt[i].xi), gw * alpha * at(vqt[i].uh),
                              gw * alpha * at(vqt[i].vh)};
        }
      }
    }
    if (!failure.empty()) throw ad::NonFiniteError(failure);
    double s = 0.0;
    for (double v : per_time) s += v;
    out.fvm = s * norm;
    if (want_grad && gw != 0.0) fvm_batch_.backward(cot_q, cot_qt, *grad);
  }

  // --- Value-only points: initial condition, boundary midpoints, data.
  PointBatch pts;
  const bool has_ic = data_.ic.size() == nc;
  if (has_ic)
    for (std::size_t i = 0; i < nc; ++i)
      pts.add(m.cells[i].centroid[0], m.cells[i].centroid[1], data_.t0, d.bathy.h_s[i]);
  const std::size_t bc_begin = pts.size();
  std::vector<int> bfaces;
  for (const Face& f : m.faces)
    if (f.is_boundary()) bfaces.push_back(f.id);
  for (double t : times)
    for (int fid : bfaces) {
      const Face& f = m.faces[static_cast<std::size_t>(fid)];
      pts.add(f.midpoint[0], f.midpoint[1], t, d.bathy.h_s_face[static_cast<std::size_t>(fid)]);
    }
  const std::size_t obs_begin = pts.size();
  for (std::size_t j = 0; j < data_.observations.size(); ++j) {
    const Observation& o = data_.observations[j];
    pts.add(o.x, o.y, o.t, obs_h_s_[j]);
  }
  const std::size_t anchor_begin = pts.size();
  for (std::size_t a = 0; a < data_.anchors.size(); ++a)
    for (std::size_t i = 0; i < nc; ++i)
      pts.add(m.cells[i].centroid[0], m.cells[i].centroid[1], data_.anchors.times[a], d.bathy.h_s[i]);
  if (pts.size() == 0) {
    out = total_loss(out, weights_);
    return out;
  }

  point_batch_.forward(params, pts, false);
  std::vector<Conserved<double>> qs = point_batch_.q();
  for (auto& q : qs) {
    q.uh *= alpha;
    q.vh *= alpha;
  }
  std::vector<Conserved<double>> cot(qs.size());

  if (has_ic) {
    const double inv = 1.0 / static_cast<double>(nc);
    double s = 0.0;
    for (std::size_t i = 0; i < nc; ++i) {
      const Conserved<double> e{qs[i].xi - data_.ic.xi[i], qs[i].uh - data_.ic.uh[i],
                                qs[i].vh - data_.ic.vh[i]};
      s += e.xi * e.xi + e.uh * e.uh + e.vh * e.vh;
      const double c = 2.0 * weights_.ic * inv;
      cot[i] = {c * e.xi, c * e.uh, c * e.vh};
    }
    out.ic = s * inv;
  }

  if (!bfaces.empty() && nt > 0) {
    const double inv = 1.0 / (static_cast<double>(bfaces.size()) * static_cast<double>(nt));
    const double c = 2.0 * weights_.bc * inv;
    double s = 0.0;
    std::size_t j = bc_begin;
    for (std::size_t k = 0; k < nt; ++k)
      for (int fid : bfaces) {
        const Face& f = m.faces[static_cast<std::size_t>(fid)];
        const BoundaryCondition& bc = d.bcs.of_face(f);
        const double nx = f.normal[0], ny = f.normal[1];
        const Conserved<double>& q = qs[j];
        const double qn = q.uh * nx + q.vh * ny;
        switch (bc.kind) {
          case PatchKind::inlet_discharge: {
            // Inward discharge is -qn.
            const double e = -qn - bc.q_in;
            s += e * e;
            cot[j] = {0.0, -c * e * nx, -c * e * ny};
            break;
          }
          case PatchKind::exit_wse: {
            const double e = q.xi - bc.xi_exit;
            s += e * e;
            cot[j] = {c * e, 0.0, 0.0};
            break;
          }
          case PatchKind::wall:
            s += qn * qn;
            cot[j] = {0.0, c * qn * nx, c * qn * ny};
            break;
        }
        ++j;
      }
    out.bc = s * inv;
  }

  const std::size_t nd = data_points();
  if (nd > 0) {
    const double inv = 1.0 / static_cast<double>(nd);
    const double c = 2.0 * weights_.data * inv;
    double s = 0.0;
    for (std::size_t k = 0; k < data_.observations.size(); ++k) {
      const Observation& o = data_.observations[k];
      const std::size_t j = obs_begin + k;
      const Conserved<double>& q = qs[j];
      const double w = data_.observation_weight;
      const double h = q.xi + obs_h_s_[k];
      const double u = q.uh / h, v = q.vh / h;
      Conserved<double> g{0.0, 0.0, 0.0};
      if (o.mask_h) {
        const double e = h - o.h;
        s += w * e * e;
        g.xi += c * w * e;
      }
      if (o.mask_u) {
        const double e = u - o.u;
        s += w * e * e;
        g.uh += c * w * e / h;
        g.xi -= c * w * e * u / h;
      }
      if (o.mask_v) {
        const double e = v - o.v;
        s += w * e * e;
        g.vh += c * w * e / h;
        g.xi -= c * w * e * v / h;
      }
      cot[j] = g;
    }
    for (std::size_t a = 0; a < data_.anchors.size(); ++a) {
      const State& ref = data_.anchors.states[a];
      const double w = data_.anchor_weight * data_.anchors.weight(a);
      for (std::size_t i = 0; i < nc; ++i) {
        const std::size_t j = anchor_begin + a * nc + i;
        const Conserved<double> e{qs[j].xi - ref.xi[i], qs[j].uh - ref.uh[i], qs[j].vh - ref.vh[i]};
        s += w * (e.xi * e.xi + e.uh * e.uh + e.vh * e.vh);
        cot[j] = {c * w * e.xi, c * w * e.uh, c * w * e.vh};
      }
    }
    out.data = s * inv;
  }

  out = total_loss(out, weights_);
  if (!std::isfinite(out.total)) throw ad::NonFiniteError("loss");
  if (want_grad) {
    for (auto& g : cot) {
      g.uh *= alpha;
      g.vh *= alpha;
    }
    point_batch_.backward(cot, {}, *grad);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

LossBreakdown terms_of(const SurrogateNetwork& net, std::span<const double> params, const Domain& d,
                       LossData data, std::span<const double> times) {
  LossEvaluator ev(d, net, std::move(data), LossWeights{}, Execution::serial);
  return ev.evaluate(params, times);
}

}  // namespace

double loss_fvm(const SurrogateNetwork& net, std::span<const double> params, const Domain& d,
                std::span<const double> times) {
  if (times.empty()) throw std::invalid_argument("loss_fvm needs at least one time");
  return terms_of(net, params, d, {}, times).fvm;
}

double loss_ic(const SurrogateNetwork& net, std::span<const double> params, const Domain& d,
               const State& ic, double t0) {
  LossData data;
  data.ic = ic;
  data.t0 = t0;
  return terms_of(net, params, d, std::move(data), {}).ic;
}

double loss_bc(const SurrogateNetwork& net, std::span<const double> params, const Domain& d,
               std::span<const double> times) {
  return terms_of(net, params, d, {}, times).bc;
}

double loss_data(const SurrogateNetwork& net, std::span<const double> params, const Domain& d,
                 std::span<const Observation> observations, const AnchorSet& anchors) {
  LossData data;
  data.observations.assign(observations.begin(), observations.end());
  data.anchors = anchors;
  return terms_of(net, params, d, std::move(data), {}).data;
}

std::vector<Observation> add_noise(std::vector<Observation> obs, double level, std::uint64_t seed) {
  if (!(level >= 0.0)) throw std::invalid_argument("noise level must be non-negative");
  if (level == 0.0) return obs;
  double umax = 0.0;
  for (const Observation& o : obs) {
    const double u = o.mask_u ? o.u : 0.0;
    const double v = o.mask_v ? o.v : 0.0;
    umax = std::max(umax, std::hypot(u, v));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, level * umax);
  for (Observation& o : obs) {
    if (o.mask_u) o.u += n(rng);
    if (o.mask_v) o.v += n(rng);
  }
  return obs;
}

// ---------------------------------------------------------------------------
// Files

std::vector<Observation> read_observations(const std::string& path) {
  const CsvTable t = read_csv(path);
  const std::size_t cx = t.column("x"), cy = t.column("y"), ct = t.column("t"), ch = t.column("h"),
                    cu = t.column("u"), cv = t.column("v"), mh = t.column("mask_h"),
                    mu = t.column("mask_u"), mv = t.column("mask_v");
  std::vector<Observation> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string where = path + " row " + std::to_string(r + 1);
    auto mask = [&](std::size_t col) {
      const long v = parse_long(row[col], where);
      if (v != 0 && v != 1) throw std::invalid_argument(where + ": masks must be 0 or 1");
      return v == 1;
    };
    Observation o;
    o.x = parse_double(row[cx], where);
    o.y = parse_double(row[cy], where);
    o.t = parse_double(row[ct], where);
    o.mask_h = mask(mh);
    o.mask_u = mask(mu);
    o.mask_v = mask(mv);
    if (o.mask_h) o.h = parse_double(row[ch], where);
    if (o.mask_u) o.u = parse_double(row[cu], where);
    if (o.mask_v) o.v = parse_double(row[cv], where);
    if (!o.any()) throw std::invalid_argument(where + ": no observed component");
    out.push_back(o);
  }
  return out;
}

std::string format_observations(std::span<const Observation> obs) {
  std::ostringstream s;
  s << "x,y,t,h,u,v,mask_h,mask_u,mask_v\n";
  auto val = [](bool m, double v) { return m ? format_double(v) : std::string(); };
  for (const Observation& o : obs)
    s << format_double(o.x) << ',' << format_double(o.y) << ',' << format_double(o.t) << ','
      << val(o.mask_h, o.h) << ',' << val(o.mask_u, o.u) << ',' << val(o.mask_v, o.v) << ','
      << o.mask_h << ',' << o.mask_u << ',' << o.mask_v << '\n';
  return s.str();
}

State read_anchor(const std::string& path, std::size_t n_cells) {
  const CsvTable t = read_csv(path);
  const std::size_t cc = t.column("cell_id"), cx = t.column("xi"), cu = t.column("uh"),
                    cv = t.column("vh");
  State s(n_cells);
  std::vector<char> seen(n_cells, 0);
  for (const auto& row : t.rows) {
    const long id = parse_long(row[cc], path + " cell_id");
    if (id < 0 || static_cast<std::size_t>(id) >= n_cells)
      throw std::invalid_argument(path + ": cell id " + std::to_string(id) + " out of range");
    const auto i = static_cast<std::size_t>(id);
    if (seen[i]) throw std::invalid_argument(path + ": duplicate cell id " + std::to_string(id));
    seen[i] = 1;
    s.xi[i] = parse_double(row[cx], path);
    s.uh[i] = parse_double(row[cu], path);
    s.vh[i] = parse_double(row[cv], path);
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw std::invalid_argument(path + ": snapshot does not cover every cell");
  return s;
}

std::string format_anchor(const State& s) {
  std::ostringstream o;
  o << "cell_id,xi,uh,vh\n";
  for (std::size_t i = 0; i < s.size(); ++i)
    o << i << ',' << format_double(s.xi[i]) << ',' << format_double(s.uh[i]) << ','
      << format_double(s.vh[i]) << '\n';
  return o.str();
}

void write_trajectory(const std::string& dir, const Trajectory& traj) {
  namespace fs = std::filesystem;
  std::ostringstream index;
  index << "index,time,file\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "snap_%04zu.csv", k);
    write_file_atomic((fs::path(dir) / name).string(), format_anchor(traj.states[k]));
    index << k << ',' << format_double(traj.times[k]) << ',' << name << '\n';
  }
  write_file_atomic((fs::path(dir) / "index.csv").string(), index.str());
}

AnchorSet read_anchor_set(const std::string& index_path, std::size_t n_cells) {
  namespace fs = std::filesystem;
  const CsvTable t = read_csv(index_path);
  const std::size_t ct = t.column("time"), cf = t.column("file");
  const fs::path base = fs::path(index_path).parent_path();
  AnchorSet a;
  for (const auto& row : t.rows) {
    a.times.push_back(parse_double(row[ct], index_path));
    a.states.push_back(read_anchor((base / row[cf]).string(), n_cells));
  }
  return a;
}

}  // namespace fvpinn
