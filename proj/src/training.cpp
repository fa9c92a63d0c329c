#include "fvpinn/training.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "fvpinn/io.hpp"
#include "fvpinn/network_batch.hpp"

namespace fvpinn {

void AdamConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("Adam learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("Adam epsilon must be positive");
  if (!(decay > 0.0)) throw std::invalid_argument("Adam decay factor must be positive");
  if (decay_every < 0) throw std::invalid_argument("Adam decay interval must be >= 0");
  if (epochs < 0) throw std::invalid_argument("Adam epochs must be >= 0");
}

double AdamConfig::lr_at(long step) const {
  if (decay_every <= 0) return lr;
  return lr * std::pow(decay, static_cast<double>(step / decay_every));
}

void adam_step(AdamState& st, const AdamConfig& cfg, std::span<double> params,
               std::span<const double> grads) {
  if (grads.size() != params.size()) throw std::invalid_argument("gradient size mismatch");
  if (st.m.size() != params.size()) {
    st.m.assign(params.size(), 0.0);
    st.v.assign(params.size(), 0.0);
  }
  const double lr = cfg.lr_at(st.step);
  ++st.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * grads[i];
    st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double mhat = st.m[i] / bc1;
    const double vhat = st.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

std::vector<double> sample_times(int n_t, double t0, double t1, std::mt19937_64& rng) {
  if (n_t < 1) throw std::invalid_argument("n_t must be at least 1");
  // Closed interval: widen the half-open draw by one ulp and clamp.
  std::uniform_real_distribution<double> u(t0, std::nextafter(t1, std::numeric_limits<double>::infinity()));
  std::vector<double> out(static_cast<std::size_t>(n_t));
  for (double& t : out) t = std::min(u(rng), t1);
  return out;
}

void TrainConfig::validate() const {
  if (n_t < 1) throw std::invalid_argument("n_t must be at least 1");
  if (!(t1 > t0)) throw std::invalid_argument("training interval needs t0 < T");
  weights.validate();
  adam.validate();
  lbfgs.validate();
}

std::string TrainHistory::to_csv() const {
  std::ostringstream o;
  o << "step,phase,loss_total,loss_fvm,loss_bc,loss_ic,loss_data,lr,wall_s\n";
  for (const HistoryRow& r : rows)
    o << r.step << ',' << r.phase << ',' << format_double(r.loss.total) << ','
      << format_double(r.loss.fvm) << ',' << format_double(r.loss.bc) << ','
      << format_double(r.loss.ic) << ',' << format_double(r.loss.data) << ','
      << format_double(r.lr) << ',' << format_double(r.wall_s) << '\n';
  return o.str();
}

namespace {

bool finite(const LossBreakdown& l) { return std::isfinite(l.total); }

bool finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

TrainResult train_standard(const TrainProblem& problem, ParamVector params, const TrainConfig& cfg,
                           Execution exec, const ProgressFn& progress,
                           const std::string& phase_prefix) {
  cfg.validate();
  if (problem.domain == nullptr || problem.net == nullptr)
    throw std::invalid_argument("training problem is incomplete");
  LossEvaluator ev(*problem.domain, *problem.net, problem.data, cfg.weights, exec);
  TrainResult res;
  std::mt19937_64 rng(cfg.seed);
  const auto start = std::chrono::steady_clock::now();
  auto wall = [&] {
    if (!cfg.record_wall_clock) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  long step = 0;
  auto record = [&](const std::string& phase, const LossBreakdown& l, double lr) {
    HistoryRow row{step, phase_prefix + phase, l, lr, wall()};
    res.history.rows.push_back(row);
    if (progress) progress(row);
    ++step;
  };

  std::vector<double> grad;
  AdamState adam;
  for (int e = 0; e < cfg.adam.epochs; ++e) {
    const std::vector<double> times = sample_times(cfg.n_t, cfg.t0, cfg.t1, rng);
    LossBreakdown l;
    try {
      l = ev.evaluate(params, times, &grad);
    } catch (const ad::NonFiniteError& err) {
      throw TrainingError("non-finite loss at Adam step " + std::to_string(e) + ": " + err.what(),
                          params);
    }
    if (!finite(l) || !finite(grad))
      throw TrainingError("non-finite loss or gradient at Adam step " + std::to_string(e), params);
    const double lr = cfg.adam.lr_at(adam.step);
    record("adam", l, lr);
    adam_step(adam, cfg.adam, params, grad);
  }

  if (cfg.lbfgs.max_iterations > 0) {
    const std::vector<double> frozen = sample_times(cfg.n_t, cfg.t0, cfg.t1, rng);
    LossBreakdown last;
    const Objective obj = [&](std::span<const double> x, std::span<double> g) {
      std::vector<double> gv;
      try {
        last = ev.evaluate(x, frozen, &gv);
      } catch (const ad::NonFiniteError&) {
        return std::numeric_limits<double>::quiet_NaN();
      }
      std::copy(gv.begin(), gv.end(), g.begin());
      return last.total;
    };
    record("lbfgs", ev.evaluate(params, frozen), 0.0);
    // The line search always evaluates the accepted point last, so `last`
    // holds its breakdown when the callback fires.
    LBFGSResult r = lbfgs_minimize(params, obj, cfg.lbfgs,
                                   [&](int, double, double) { record("lbfgs", last, 0.0); });
    params = std::move(r.x);
  }
  res.params = std::move(params);
  return res;
}

// ---------------------------------------------------------------------------

WindowPlan WindowPlan::uniform(double t0, double t1, int n) {
  if (n < 1) throw std::invalid_argument("window count must be at least 1");
  if (!(t1 > t0)) throw std::invalid_argument("window plan needs t0 < T");
  WindowPlan p;
  for (int k = 0; k <= n; ++k) p.boundaries.push_back(k == n ? t1 : t0 + (t1 - t0) * k / n);
  return p;
}

void WindowPlan::validate() const {
  if (boundaries.size() < 2) throw std::invalid_argument("window plan needs at least one window");
  for (std::size_t k = 1; k < boundaries.size(); ++k)
    if (!(boundaries[k] > boundaries[k - 1]))
      throw std::invalid_argument("window boundaries must be strictly increasing");
}

int WindowPlan::window_of(double t) const {
  const int n = count();
  if (t < boundaries.front() || t > boundaries.back()) return -1;
  for (int k = 0; k < n; ++k)
    if (t <= boundaries[static_cast<std::size_t>(k + 1)]) return k;
  return n - 1;
}

State predict_field(const SurrogateNetwork& net, std::span<const double> params, const Domain& d,
                    double t, Execution exec) {
  PointBatch pts;
  for (std::size_t i = 0; i < d.mesh.cells.size(); ++i)
    pts.add(d.mesh.cells[i].centroid[0], d.mesh.cells[i].centroid[1], t, d.bathy.h_s[i]);
  BatchNetwork b(net, exec);
  b.forward(params, pts, false);
  State s(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) s.set(i, b.q()[i]);
  return s;
}

WindowResult train_windows(const TrainProblem& problem, ParamVector params, const TrainConfig& cfg,
                           const WindowPlan& plan, Execution exec, const ProgressFn& progress) {
  plan.validate();
  cfg.validate();
  if (plan.boundaries.front() != cfg.t0 || plan.boundaries.back() != cfg.t1)
    throw std::invalid_argument("window plan must span the training interval exactly");
  WindowResult out;
  out.plan = plan;
  State ic = problem.data.ic;
  const int n = plan.count();
  for (int k = 0; k < n; ++k) {
    TrainProblem wp = problem;
    wp.data.ic = ic;
    wp.data.t0 = plan.boundaries[static_cast<std::size_t>(k)];
    wp.data.observations.clear();
    for (const Observation& o : problem.data.observations)
      if (plan.window_of(o.t) == k) wp.data.observations.push_back(o);
    wp.data.anchors = {};
    for (std::size_t a = 0; a < problem.data.anchors.size(); ++a)
      if (plan.window_of(problem.data.anchors.times[a]) == k) {
        wp.data.anchors.times.push_back(problem.data.anchors.times[a]);
        wp.data.anchors.states.push_back(problem.data.anchors.states[a]);
        if (!problem.data.anchors.weights.empty())
          wp.data.anchors.weights.push_back(problem.data.anchors.weights[a]);
      }
    TrainConfig wc = cfg;
    wc.t0 = plan.boundaries[static_cast<std::size_t>(k)];
    wc.t1 = plan.boundaries[static_cast<std::size_t>(k + 1)];
    // Distinct but reproducible sampling stream per window; window 0 matches
    // train_standard exactly.
    wc.seed = cfg.seed + static_cast<std::uint64_t>(k);
    const std::string prefix = n > 1 ? "w" + std::to_string(k) + "_" : "";
    TrainResult r = train_standard(wp, std::move(params), wc, exec, progress, prefix);
    out.initial_states.push_back(ic);
    long offset = out.history.rows.empty() ? 0 : out.history.rows.back().step + 1;
    for (HistoryRow row : r.history.rows) {
      row.step += offset;
      out.history.rows.push_back(row);
    }
    params = r.params;
    out.params.push_back(std::move(r.params));
    if (k + 1 < n) ic = predict_field(*problem.net, params, *problem.domain, wc.t1, exec);
  }
  return out;
}

State predict_windows(const SurrogateNetwork& net, const WindowResult& w, const Domain& d, double t,
                      Execution exec) {
  const int k = w.plan.window_of(t);
  if (k < 0) throw std::invalid_argument("time " + std::to_string(t) + " lies outside every window");
  return predict_field(net, w.params[static_cast<std::size_t>(k)], d, t, exec);
}

}  // namespace fvpinn
