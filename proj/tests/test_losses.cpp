#include <doctest.h>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "fvpinn/io.hpp"
#include "fvpinn/losses.hpp"
#include "fvpinn/teacher.hpp"
#include "support.hpp"

using namespace fvpinn;
using fvpinn::testing::box_mesh;
using fvpinn::testing::flat;
using fvpinn::testing::Gen;

namespace {

// Unit square cell: inlet on the left edge, exit on the right, walls elsewhere.
Mesh one_cell_open(double q_total, double w_exit) {
  std::vector<Node> nodes{{0, 0, 0, 0}, {1, 1, 0, 0}, {2, 1, 1, 0}, {3, 0, 1, 0}};
  std::vector<PatchEdges> patches{{"inlet", PatchKind::inlet_discharge, q_total, {{0, 3}}},
                                  {"exit", PatchKind::exit_wse, w_exit, {{0, 1}}},
                                  {"walls", PatchKind::wall, 0, {{0, 0}, {0, 2}}}};
  return build_mesh(nodes, {{0, 1, 2, 3}}, {0}, patches, 1.0);
}

// 3 x 2 channel with inlet/exit, a gentle bed and friction.
Domain small_channel() {
  Mesh m = generate_channel_mesh(3.0, 2.0, std::nullopt, 1.0,
                                 [](double x, double y) { return 0.02 * x - 0.01 * y; }, 1.0);
  for (BoundaryPatch& p : m.patches) {
    if (p.name == "inlet") p = {p.name, PatchKind::inlet_discharge, 0.6, p.face_ids};
    if (p.name == "exit") p = {p.name, PatchKind::exit_wse, 1.02, p.face_ids};
  }
  PhysParams ph;
  ph.manning_n = {0.03};
  return Domain::build(std::move(m), ph);
}

NetworkConfig tiny() {
  NetworkConfig c;
  c.width = 6;
  c.depth = 2;
  c.fourier_features = 3;
  c.sigma = 0.8;
  return c;
}

std::pair<SurrogateNetwork, ParamVector> tiny_net(const Domain& d, std::uint64_t seed) {
  auto r = init_network(tiny(), seed, Normalizer::from_mesh(d.mesh, 0.0, 2.0));
  Gen g(seed);
  for (double& p : r.second) p += 0.1 * g.normal();
  return r;
}

std::vector<Observation> random_obs(const Domain& d, Gen& g, int n) {
  std::vector<Observation> obs;
  for (int i = 0; i < n; ++i) {
    Observation o;
    o.x = g.uniform(0.01, 2.99);
    o.y = g.uniform(0.01, 1.99);
    o.t = g.uniform(0.0, 2.0);
    o.h = g.uniform(0.9, 1.1);
    o.u = g.uniform(-0.5, 0.5);
    o.v = g.uniform(-0.5, 0.5);
    o.mask_h = g.uniform(0, 1) < 0.3;
    o.mask_u = g.uniform(0, 1) < 0.7;
    o.mask_v = !o.mask_h && !o.mask_u ? true : g.uniform(0, 1) < 0.5;
    (void)d;
    obs.push_back(o);
  }
  return obs;
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("residual of a quiescent field is zero") {
  Domain d = Domain::build(box_mesh(3, 2, 3.0, 2.0, flat(), 1.0), PhysParams{});
  const auto r = fvm_residual<double>(
      d, [](int) { return Conserved<double>{}; }, [](int) { return Conserved<double>{}; });
  for (const auto& ri : r)
    for (double v : ri) CHECK(v == 0.0);
}

TEST_CASE("residual formula on one cell") {
  // Area 2, walls, state at rest with unit mass tendency: R = (1, 0, 0).
  Domain d = Domain::build(box_mesh(1, 1, 2.0, 1.0, flat(), 1.0), PhysParams{});
  const auto r = fvm_residual<double>(
      d, [](int) { return Conserved<double>{}; }, [](int) { return Conserved<double>{1, 0, 0}; });
  CHECK(r[0][0] == 1.0);
  CHECK(r[0][1] == 0.0);
  CHECK(r[0][2] == 0.0);
  const double loss = d.mesh.cells[0].area * (r[0][0] * r[0][0]);
  CHECK(loss == 2.0);
}

TEST_CASE("interior fluxes cancel in the mass budget") {
  Mesh m = generate_channel_mesh(2.0, 2.0, std::nullopt, 1.0, [](double x, double) { return 0.05 * x; }, 1.0);
  for (BoundaryPatch& p : m.patches) {
    if (p.name == "inlet") p = {p.name, PatchKind::inlet_discharge, 0.4, p.face_ids};
    if (p.name == "exit") p = {p.name, PatchKind::exit_wse, 0.95, p.face_ids};
  }
  Domain d = Domain::build(std::move(m), PhysParams{});
  REQUIRE(d.mesh.n_cells() == 4);
  Gen g(1);
  std::vector<Conserved<double>> q(4), qt(4);
  for (int i = 0; i < 4; ++i) {
    q[i] = {g.uniform(-0.1, 0.1), g.uniform(-0.3, 0.3), g.uniform(-0.3, 0.3)};
    qt[i] = {g.uniform(-1, 1), g.uniform(-1, 1), g.uniform(-1, 1)};
  }
  auto qf = [&](int c) { return q[static_cast<std::size_t>(c)]; };
  auto qtf = [&](int c) { return qt[static_cast<std::size_t>(c)]; };
  const auto r = fvm_residual<double>(d, qf, qtf);
  double lhs = 0.0, storage = 0.0, boundary = 0.0;
  for (int i = 0; i < 4; ++i) {
    lhs += d.mesh.cells[static_cast<std::size_t>(i)].area * r[static_cast<std::size_t>(i)][0];
    storage += d.mesh.cells[static_cast<std::size_t>(i)].area * qt[static_cast<std::size_t>(i)].xi;
  }
  for (const Face& f : d.mesh.faces)
    if (f.is_boundary()) boundary += face_flux<double>(d.mesh, d.bathy, d.bcs, d.phys, f, qf)[0] * f.length;
  CHECK(lhs == doctest::Approx(storage + boundary).epsilon(1e-13));
}

TEST_CASE("teacher steady state is a fixed point of the residual") {
  Domain d = small_channel();
  State ic(d.mesh.cells.size());
  TeacherConfig cfg;
  cfg.t_end = 40.0;
  const State s = run_teacher(d, ic, cfg).states.back();
  State k;
  rhs(d, s, k, Execution::serial);
  const auto r = fvm_residual<double>(
      d, [&](int c) { return s.at(static_cast<std::size_t>(c)); },
      [](int) { return Conserved<double>{}; });
  for (std::size_t i = 0; i < s.size(); ++i) {
    // With a zero time derivative the residual is exactly -rhs.
    CHECK(std::abs(r[i][0] + k.xi[i]) <= 1e-12 * (1 + std::abs(k.xi[i])));
    CHECK(std::abs(r[i][1] + k.uh[i]) <= 1e-12 * (1 + std::abs(k.uh[i])));
    const double rn = std::hypot(r[i][0], r[i][1], r[i][2]);
    const double kn = std::hypot(k.xi[i], k.uh[i], k.vh[i]);
    CHECK(rn <= kn * (1 + 1e-12) + 1e-15);
  }
}

TEST_CASE("batched fvm loss matches the per-point residual") {
  Domain d = small_channel();
  auto [net, p] = tiny_net(d, 3);
  const std::vector<double> times{0.0, 0.7, 2.0};
  const double batched = loss_fvm(net, p, d, times);
  double brute = 0.0;
  for (double t : times) {
    const auto r = fvm_residual_at(net, p, d, t);
    for (std::size_t i = 0; i < r.size(); ++i)
      brute += d.mesh.cells[i].area * (r[i][0] * r[i][0] + r[i][1] * r[i][1] + r[i][2] * r[i][2]);
  }
  brute /= static_cast<double>(times.size() * d.mesh.cells.size());
  CHECK(batched == doctest::Approx(brute).epsilon(1e-12));
  CHECK(batched > 0.0);
  CHECK_THROWS(loss_fvm(net, p, d, std::vector<double>{}));
}

TEST_CASE("initial-condition loss") {
  Domain d = small_channel();
  auto [net, p] = tiny_net(d, 4);
  State ic(d.mesh.cells.size());
  for (std::size_t i = 0; i < ic.size(); ++i) {
    const Cell& c = d.mesh.cells[i];
    ic.set(i, predict(net, p, c.centroid[0], c.centroid[1], 0.0, d.bathy.h_s[i]));
  }
  CHECK(loss_ic(net, p, d, ic, 0.0) <= 1e-28);
  State shifted = ic;
  for (double& v : shifted.xi) v += 0.3;
  CHECK(loss_ic(net, p, d, shifted, 0.0) == doctest::Approx(0.09).epsilon(1e-12));

  Gen g(2);
  State rnd(ic.size());
  double brute = 0.0;
  for (std::size_t i = 0; i < ic.size(); ++i) {
    rnd.set(i, {g.normal(), g.normal(), g.normal()});
    const auto e = Conserved<double>{ic.xi[i] - rnd.xi[i], ic.uh[i] - rnd.uh[i], ic.vh[i] - rnd.vh[i]};
    brute += e.xi * e.xi + e.uh * e.uh + e.vh * e.vh;
  }
  CHECK(loss_ic(net, p, d, rnd, 0.0) == doctest::Approx(brute / ic.size()).epsilon(1e-12));
}

TEST_CASE("boundary penalty") {
  // Zero parameters: uh = vh = 0 exactly, xi = softplus(h_s) - h_s.
  Domain d = Domain::build(one_cell_open(0.5, 1.0), PhysParams{});
  auto [net, p] = init_network(tiny(), 1, Normalizer::from_mesh(d.mesh, 0.0, 1.0));
  std::fill(p.begin(), p.end(), 0.0);
  const std::vector<double> t1{0.5};
  const double xi = std::log1p(std::exp(1.0)) - 1.0;
  // Faces: inlet (0.5)^2, exit xi^2, two walls 0; mean over 4 faces.
  CHECK(loss_bc(net, p, d, t1) == doctest::Approx((0.25 + xi * xi) / 4).epsilon(1e-14));

  Domain closed = Domain::build(box_mesh(2, 2, 1.0, 1.0, flat(), 1.0), PhysParams{});
  CHECK(loss_bc(net, p, closed, t1) == 0.0);
}

TEST_CASE("data loss") {
  Domain d = small_channel();
  auto [net, p] = init_network(tiny(), 1, Normalizer::from_mesh(d.mesh, 0.0, 2.0));
  std::fill(p.begin(), p.end(), 0.0);
  CHECK(loss_data(net, p, d, {}, AnchorSet{}) == 0.0);

  Observation o;
  o.x = 1.5;
  o.y = 0.5;
  o.t = 0.3;
  o.u = 0.1;
  o.v = 7.0;
  o.mask_u = true;
  const std::vector<Observation> one{o};
  CHECK(loss_data(net, p, d, one, AnchorSet{}) == doctest::Approx(0.01).epsilon(1e-14));

  auto [net2, p2] = tiny_net(d, 6);
  Gen g(7);
  auto obs = random_obs(d, g, 200);
  AnchorSet anchors;
  anchors.times = {0.4, 1.6};
  anchors.states = {State(d.mesh.cells.size()), State(d.mesh.cells.size())};
  for (State& s : anchors.states)
    for (std::size_t i = 0; i < s.size(); ++i) s.set(i, {g.normal() * 0.1, g.normal() * 0.1, g.normal() * 0.1});
  double brute = 0.0;
  for (const Observation& ob : obs) {
    const int c = d.mesh.locate(ob.x, ob.y);
    const double hs = d.bathy.h_s[static_cast<std::size_t>(c)];
    const auto q = predict(net2, p2, ob.x, ob.y, ob.t, hs);
    const double h = q.xi + hs;
    if (ob.mask_h) brute += (h - ob.h) * (h - ob.h);
    if (ob.mask_u) brute += (q.uh / h - ob.u) * (q.uh / h - ob.u);
    if (ob.mask_v) brute += (q.vh / h - ob.v) * (q.vh / h - ob.v);
  }
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t i = 0; i < d.mesh.cells.size(); ++i) {
      const Cell& c = d.mesh.cells[i];
      const auto q = predict(net2, p2, c.centroid[0], c.centroid[1], anchors.times[a], d.bathy.h_s[i]);
      const State& s = anchors.states[a];
      brute += (q.xi - s.xi[i]) * (q.xi - s.xi[i]) + (q.uh - s.uh[i]) * (q.uh - s.uh[i]) +
               (q.vh - s.vh[i]) * (q.vh - s.vh[i]);
    }
  brute /= static_cast<double>(obs.size() + 2 * d.mesh.cells.size());
  const double got = loss_data(net2, p2, d, obs, anchors);
  CHECK(got == doctest::Approx(brute).epsilon(1e-12));

  std::reverse(obs.begin(), obs.end());
  std::swap(obs[3], obs[77]);
  CHECK(loss_data(net2, p2, d, obs, anchors) == doctest::Approx(got).epsilon(1e-14));
}

TEST_CASE("weighted total") {
  LossBreakdown t{1, 1, 1, 1, 0};
  CHECK(total_loss(t, LossWeights{0, 0, 0, 0}).total == 0.0);
  CHECK(total_loss(t, LossWeights{1, 30, 10, 10}).total == 51.0);
  LossBreakdown u{0.5, 2, 3, 0.25, 0};
  CHECK(total_loss(u, LossWeights{0, 0, 0, 1}).total == 0.25);
  CHECK_THROWS(LossWeights{-1, 0, 0, 0}.validate());
}

TEST_CASE("gradient of the weighted total matches finite differences") {
  Domain d = small_channel();
  auto [net, p] = tiny_net(d, 9);
  Gen g(10);
  LossData data;
  data.ic = State(d.mesh.cells.size());
  for (std::size_t i = 0; i < data.ic.size(); ++i) data.ic.set(i, {0.01 * g.normal(), 0.1, 0.0});
  data.observations = random_obs(d, g, 12);
  data.anchors.times = {1.0};
  data.anchors.states = {data.ic};
  data.anchor_weight = 2.0;
  LossEvaluator ev(d, net, data, LossWeights{1.0, 5.0, 20.0, 3.0}, Execution::serial);
  const std::vector<double> times{0.25, 1.5};
  std::vector<double> grad;
  ev.evaluate(p, times, &grad);
  double worst = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    // Fourth-order central stencil keeps truncation well below the tolerance.
    const double step = 1e-4 * std::max(1.0, std::abs(p[k]));
    auto f = [&](double s) {
      std::vector<double> q = p;
      q[k] += s;
      return ev.evaluate(q, times).total;
    };
    const double fd = (f(-2 * step) - 8 * f(-step) + 8 * f(step) - f(2 * step)) / (12 * step);
    worst = std::max(worst, std::abs(grad[k] - fd) / std::max({std::abs(grad[k]), std::abs(fd), 1e-6}));
  }
  MESSAGE("worst relative gradient error " << worst);
  CHECK(worst <= 1e-6);
}

TEST_CASE("momentum scaling matches a scaled head") {
  Domain d = small_channel();
  auto [net, p] = tiny_net(d, 12);
  const double a = 0.6;
  std::vector<double> ps = p;
  const LayerShape& H = net.head();
  for (int i = 0; i < H.n_in; ++i)
    for (int k = 1; k < 3; ++k) ps[H.w_offset + static_cast<std::size_t>(i) * 3 + static_cast<std::size_t>(k)] *= a;
  for (int k = 1; k < 3; ++k) ps[H.b_offset + static_cast<std::size_t>(k)] *= a;
  LossData data;
  data.ic = State(d.mesh.cells.size());
  LossEvaluator ev(d, net, data, LossWeights{1, 1, 1, 0}, Execution::serial);
  const std::vector<double> times{0.5};
  const auto x = ev.evaluate(p, times, nullptr, a);
  const auto y = ev.evaluate(ps, times);
  CHECK(x.fvm == doctest::Approx(y.fvm).epsilon(1e-11));
  CHECK(x.ic == doctest::Approx(y.ic).epsilon(1e-11));
  CHECK(x.bc == doctest::Approx(y.bc).epsilon(1e-11));
}

TEST_CASE("evaluation is bitwise identical serial vs parallel") {
  Domain d = small_channel();
  auto [net, p] = tiny_net(d, 13);
  Gen g(14);
  LossData data;
  data.ic = State(d.mesh.cells.size());
  data.observations = random_obs(d, g, 30);
  LossEvaluator ser(d, net, data, LossWeights{1, 2, 3, 4}, Execution::serial);
  LossEvaluator par(d, net, data, LossWeights{1, 2, 3, 4}, Execution::parallel);
  const std::vector<double> times{0.1, 0.4, 0.9, 1.3, 1.9};
  std::vector<double> gs, gp;
  const auto a = ser.evaluate(p, times, &gs);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(4);
  const auto b = par.evaluate(p, times, &gp);
  omp_set_num_threads(saved);
  CHECK(a.total == b.total);
  CHECK(a.fvm == b.fvm);
  CHECK(gs == gp);
}

TEST_CASE("noise injection") {
  Gen g(20);
  std::vector<Observation> obs;
  double umax = 0.0;
  for (int i = 0; i < 10000; ++i) {
    Observation o;
    o.u = g.uniform(-1, 1);
    o.v = g.uniform(-1, 1);
    o.mask_u = o.mask_v = true;
    umax = std::max(umax, std::hypot(o.u, o.v));
    obs.push_back(o);
  }
  const auto same = add_noise(obs, 0.0, 1);
  for (std::size_t i = 0; i < obs.size(); ++i) CHECK(same[i].u == obs[i].u);
  const auto a = add_noise(obs, 0.05, 42), b = add_noise(obs, 0.05, 42);
  double s2 = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    CHECK(a[i].u == b[i].u);
    CHECK(a[i].h == obs[i].h);
    const double du = a[i].u - obs[i].u, dv = a[i].v - obs[i].v;
    mean += du + dv;
    s2 += du * du + dv * dv;
  }
  const double n = 2.0 * obs.size();
  const double sd = std::sqrt(s2 / n - (mean / n) * (mean / n));
  CHECK(sd == doctest::Approx(0.05 * umax).epsilon(0.02));
  CHECK_THROWS(add_noise(obs, -0.1, 1));
}

TEST_CASE("observation and anchor files") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "fvpinn_loss_io";
  fs::remove_all(dir);
  fs::create_directories(dir);

  Gen g(30);
  Domain d = small_channel();
  const auto obs = random_obs(d, g, 25);
  write_file_atomic((dir / "obs.csv").string(), format_observations(obs));
  const auto back = read_observations((dir / "obs.csv").string());
  REQUIRE(back.size() == obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    CHECK(back[i].x == obs[i].x);
    CHECK(back[i].mask_u == obs[i].mask_u);
    if (obs[i].mask_u) CHECK(back[i].u == obs[i].u);
    if (obs[i].mask_h) CHECK(back[i].h == obs[i].h);
  }

  write_file_atomic((dir / "bad.csv").string(), "x,y,t,h,u,v,mask_h,mask_u,mask_v\n1,1,0,,0.2,,0,2,0\n");
  CHECK_THROWS(read_observations((dir / "bad.csv").string()));
  write_file_atomic((dir / "none.csv").string(), "x,y,t,h,u,v,mask_h,mask_u,mask_v\n1,1,0,,,,0,0,0\n");
  CHECK_THROWS(read_observations((dir / "none.csv").string()));
  write_file_atomic((dir / "nohdr.csv").string(), "1,1,0,,0.2,,0,1,0\n");
  CHECK_THROWS(read_observations((dir / "nohdr.csv").string()));

  Trajectory tr;
  tr.times = {0.0, 0.5};
  tr.states = {State(6), State(6)};
  for (std::size_t i = 0; i < 6; ++i) tr.states[1].set(i, {0.1 * i, -0.2, 1.0 / 3.0});
  write_trajectory((dir / "traj").string(), tr);
  const AnchorSet as = read_anchor_set((dir / "traj" / "index.csv").string(), 6);
  CHECK(as.times == tr.times);
  CHECK(as.states == tr.states);
  CHECK_THROWS(read_anchor_set((dir / "traj" / "index.csv").string(), 7));

  write_file_atomic((dir / "dup.csv").string(), "cell_id,xi,uh,vh\n0,0,0,0\n0,0,0,0\n");
  CHECK_THROWS(read_anchor((dir / "dup.csv").string(), 2));
  fs::remove_all(dir);
}

}
