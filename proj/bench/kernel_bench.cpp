// Serial vs OpenMP kernels: teacher rhs, batched network passes and the full
// loss-plus-gradient evaluation. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <random>

#include "fvpinn/losses.hpp"
#include "fvpinn/network_batch.hpp"
#include "fvpinn/reference.hpp"
#include "fvpinn/teacher.hpp"

using namespace fvpinn;

namespace {

Domain channel(double target) {
  Mesh m = generate_channel_mesh(15.0, 5.0, Rect{4.75, 2.0, 5.25, 3.0}, target,
                                 [](double, double) { return 0.0; }, 0.4);
  m.patches[static_cast<std::size_t>(m.find_patch("inlet"))].kind = PatchKind::inlet_discharge;
  m.patches[static_cast<std::size_t>(m.find_patch("inlet"))].value = 0.38;
  m.patches[static_cast<std::size_t>(m.find_patch("exit"))].kind = PatchKind::exit_wse;
  m.patches[static_cast<std::size_t>(m.find_patch("exit"))].value = 0.4;
  PhysParams p;
  p.manning_n = {0.03};
  return Domain::build(std::move(m), p);
}

State wavy(const Domain& d) {
  State q(d.mesh.cells.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    const auto& c = d.mesh.cells[i].centroid;
    q.set(i, {0.05 * std::sin(c[0]), 0.1 + 0.02 * std::cos(c[1]), 0.01 * std::sin(c[0] + c[1])});
  }
  return q;
}

Execution policy(const benchmark::State& st) {
  return st.range(1) == 0 ? Execution::serial : Execution::parallel;
}

void BM_rhs(benchmark::State& st) {
  const Domain d = channel(15.0 / static_cast<double>(st.range(0)));
  const State q = wavy(d);
  State out(q.size());
  const Execution ex = policy(st);
  for (auto _ : st) benchmark::DoNotOptimize(rhs(d, q, out, ex));
  st.counters["cells"] = static_cast<double>(q.size());
}
BENCHMARK(BM_rhs)->ArgsProduct({{30, 120}, {0, 1}})->Unit(benchmark::kMicrosecond);

void BM_rhs_reference(benchmark::State& st) {
  const Domain d = channel(15.0 / static_cast<double>(st.range(0)));
  const State q = wavy(d);
  State out(q.size());
  for (auto _ : st) benchmark::DoNotOptimize(rhs_reference(d, q, out));
}
BENCHMARK(BM_rhs_reference)->Arg(30)->Arg(120)->Unit(benchmark::kMicrosecond);

struct NetFixture {
  SurrogateNetwork net;
  ParamVector params;
  PointBatch pts;

  explicit NetFixture(std::size_t n) {
    NetworkConfig cfg;
    cfg.width = 64;
    cfg.depth = 5;
    cfg.fourier_features = 32;
    Normalizer nz;
    auto init = init_network(cfg, 1, nz);
    net = std::move(init.first);
    params = std::move(init.second);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) pts.add(u(rng), u(rng), u(rng), 0.5);
  }
};

void BM_batch_forward(benchmark::State& st) {
  NetFixture f(static_cast<std::size_t>(st.range(0)));
  BatchNetwork b(f.net, policy(st));
  for (auto _ : st) b.forward(f.params, f.pts, true);
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_batch_forward)->ArgsProduct({{512, 4096}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_batch_backward(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  NetFixture f(n);
  BatchNetwork b(f.net, policy(st));
  b.forward(f.params, f.pts, true);
  const std::vector<Conserved<double>> cot(n, Conserved<double>{1.0, 0.5, -0.5});
  std::vector<double> grad(f.params.size());
  for (auto _ : st) {
    std::fill(grad.begin(), grad.end(), 0.0);
    b.backward(cot, cot, grad);
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_batch_backward)->ArgsProduct({{512, 4096}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_loss_gradient(benchmark::State& st) {
  const Domain d = channel(0.5);
  NetworkConfig cfg;
  cfg.width = 64;
  cfg.depth = 4;
  cfg.fourier_features = 32;
  auto [net, params] = init_network(cfg, 1, Normalizer::from_mesh(d.mesh, 0.0, 60.0));
  LossData data;
  data.ic = lake_at_rest(d.mesh, 0.4);
  LossEvaluator ev(d, net, data, LossWeights{1.0, 30.0, 10.0, 0.0}, policy(st));
  const std::vector<double> times{5.0, 20.0, 40.0, 55.0};
  std::vector<double> grad;
  for (auto _ : st) benchmark::DoNotOptimize(ev.evaluate(params, times, &grad).total);
  st.counters["cells"] = static_cast<double>(d.mesh.cells.size());
}
BENCHMARK(BM_loss_gradient)->Args({0, 0})->Args({0, 1})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
