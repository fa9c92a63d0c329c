#include <doctest.h>

#include <cmath>

#include "fvpinn/reference.hpp"
#include "fvpinn/teacher.hpp"
#include "support.hpp"

using namespace fvpinn;

namespace {

// Independent star-state oracle: bisection on the shock speed S, with the
// middle state from Rankine-Hugoniot and the rarefaction invariant as the
// residual. Different unknown than the library's depth bisection.
struct Oracle {
  double h_m, u_m, s;
};

Oracle star_by_shock_speed(double hl, double hr, double g) {
  auto middle = [&](double s) {
    // Mass and momentum jumps for a shock into still water at speed s:
    // h_m u_m = s (h_m - h_r), h_m u_m^2 + g h_m^2/2 - g h_r^2/2 = s h_m u_m.
    // Eliminating u_m: g (h_m + h_r)(h_m - h_r)^2 h_m / 2 = ... solve for h_m by bisection.
    auto f = [&](double hm) {
      const double um = s * (hm - hr) / hm;
      return hm * um * um + 0.5 * g * (hm * hm - hr * hr) - s * hm * um;
    };
    double lo = hr * (1 + 1e-15), hi = 100.0 * hl;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (f(mid) > 0) hi = mid;
      else lo = mid;
    }
    const double hm = 0.5 * (lo + hi);
    return std::pair{hm, s * (hm - hr) / hm};
  };
  // Rarefaction: u_m = 2 (sqrt(g h_l) - sqrt(g h_m)); residual increases with s.
  double lo = std::sqrt(g * hr) * (1 + 1e-12), hi = 10.0 * std::sqrt(g * hl);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const auto [hm, um] = middle(mid);
    const double r = um - 2.0 * (std::sqrt(g * hl) - std::sqrt(g * hm));
    if (r > 0) hi = mid;
    else lo = mid;
  }
  const double s = 0.5 * (lo + hi);
  const auto [hm, um] = middle(s);
  return {hm, um, s};
}

}  // namespace

TEST_SUITE("reference") {

TEST_CASE("step at t = 0 and undisturbed left state") {
  DamBreakSpec spec;
  auto a = stoker_dambreak(spec, 9.999, 0.0);
  CHECK(a.h == 2.0);
  CHECK(a.u == 0.0);
  a = stoker_dambreak(spec, 10.0, 0.0);
  CHECK(a.h == 0.5);
  a = stoker_dambreak(spec, 10.0 - std::sqrt(9.81 * 2.0) * 1.0 - 1e-9, 1.0);
  CHECK(a.h == 2.0);
  CHECK(a.u == 0.0);
  CHECK_THROWS(stoker_dambreak(spec, 1.0, -1.0));
  CHECK_THROWS(stoker_star_state(DamBreakSpec{0.5, 2.0, 0.0, 9.81}));
}

TEST_CASE("star state agrees with an independent oracle") {
  DamBreakSpec spec;
  const DamBreakStar st = stoker_star_state(spec);
  const Oracle o = star_by_shock_speed(2.0, 0.5, 9.81);
  CHECK(std::abs(st.h_mid - o.h_m) < 1e-10);
  CHECK(std::abs(st.u_mid - o.u_m) < 1e-9);
  CHECK(std::abs(st.shock_speed - o.s) < 1e-9);
  // Frozen from the oracle run above.
  CHECK(st.h_mid == doctest::Approx(1.10349385383699).epsilon(1e-12));
  CHECK(st.u_mid == doctest::Approx(2.27853679228872).epsilon(1e-11));
  CHECK(st.shock_speed == doctest::Approx(4.16632469418852).epsilon(1e-11));
}

TEST_CASE("Rankine-Hugoniot conditions at the assembled shock") {
  DamBreakSpec spec;
  const DamBreakStar st = stoker_star_state(spec);
  for (double t : {0.5, 1.0, 2.5}) {
    const double xs = spec.x0 + st.shock_speed * t;
    const auto l = stoker_dambreak(spec, st, xs - 1e-9, t);
    const auto r = stoker_dambreak(spec, st, xs + 1e-9, t);
    const double s = st.shock_speed, g = spec.g;
    const double mass = s * (l.h - r.h) - (l.h * l.u - r.h * r.u);
    const double mom = s * (l.h * l.u - r.h * r.u) -
                       (l.h * l.u * l.u + 0.5 * g * l.h * l.h - r.h * r.u * r.u - 0.5 * g * r.h * r.h);
    CHECK(std::abs(mass) <= 1e-10 * std::abs(l.h * l.u));
    CHECK(std::abs(mom) <= 1e-10 * (l.h * l.u * l.u + 0.5 * g * l.h * l.h));
  }
}

TEST_CASE("rarefaction fan is continuous at head and tail") {
  DamBreakSpec spec;
  const DamBreakStar st = stoker_star_state(spec);
  const double t = 1.0, cl = std::sqrt(spec.g * spec.h_left), cm = std::sqrt(spec.g * st.h_mid);
  const double head = spec.x0 - cl * t, tail = spec.x0 + (st.u_mid - cm) * t;
  auto a = stoker_dambreak(spec, st, head + 1e-9, t);
  CHECK(a.h == doctest::Approx(spec.h_left).epsilon(1e-8));
  a = stoker_dambreak(spec, st, tail - 1e-9, t);
  auto b = stoker_dambreak(spec, st, tail + 1e-9, t);
  CHECK(a.h == doctest::Approx(b.h).epsilon(1e-8));
  CHECK(a.u == doctest::Approx(b.u).epsilon(1e-8));
}

TEST_CASE("Stoker mass is time invariant") {
  DamBreakSpec spec;
  const DamBreakStar st = stoker_star_state(spec);
  const double lo = -40.0, hi = 60.0;
  const int n = 400000;
  auto mass = [&](double t) {
    double m = 0.0;
    const double dx = (hi - lo) / n;
    for (int i = 0; i < n; ++i) m += stoker_dambreak(spec, st, lo + (i + 0.5) * dx, t).h * dx;
    return m;
  };
  const double m0 = 2.0 * (spec.x0 - lo) + 0.5 * (hi - spec.x0);
  for (double t : {0.0, 1.0, 3.0}) CHECK(mass(t) == doctest::Approx(m0).epsilon(1e-6));
}

TEST_CASE("bump bed") {
  CHECK(bump_bed(10.0) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(bump_bed(8.0) == 0.0);
  CHECK(bump_bed(12.0) == 0.0);
  CHECK(bump_bed(8.0 + 1e-9) == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(bump_bed(0.0) == 0.0);
  for (double d : {0.1, 0.7, 1.3, 1.99, 2.5}) CHECK(bump_bed(10.0 + d) == bump_bed(10.0 - d));
}

TEST_CASE("lake at rest") {
  Mesh m = generate_strip_mesh(25.0, 50, 0.5, [](double x, double) { return bump_bed(x); }, 0.5);
  const State q = lake_at_rest(m, 0.5);
  for (std::size_t i = 0; i < q.size(); ++i) {
    CHECK(q.xi[i] == 0.0);
    CHECK(q.uh[i] == 0.0);
  }
  Domain d = Domain::build(m, PhysParams{});
  for (std::size_t i = 0; i < q.size(); ++i)
    CHECK(q.xi[i] + d.bathy.h_s[i] == doctest::Approx(0.5 - m.cells[i].z_b).epsilon(1e-15));
  State r;
  rhs(d, q, r);
  for (std::size_t i = 0; i < q.size(); ++i) {
    CHECK(r.xi[i] == 0.0);
    CHECK(r.uh[i] == 0.0);
    CHECK(r.vh[i] == 0.0);
  }
  Mesh dry = generate_strip_mesh(25.0, 50, 0.5, [](double x, double) { return bump_bed(x); }, 0.1);
  CHECK_THROWS(lake_at_rest(dry, 0.1));
}

}
