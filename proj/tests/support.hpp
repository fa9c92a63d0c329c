#pragma once

// Shared fixtures and hand-rolled generators for the unit tests.

#include <cmath>
#include <random>
#include <vector>

#include "fvpinn/mesh.hpp"
#include "fvpinn/swe.hpp"

namespace fvpinn::testing {

inline double rel_diff(double a, double b) {
  const double s = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / s;
}

/// Uniform draws from [lo, hi).
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  Vec2 unit_vector() {
    const double a = uniform(0.0, 2.0 * M_PI);
    return {std::cos(a), std::sin(a)};
  }
  /// Wet state with depth in [0.05, 3] and speeds up to 3 m/s.
  Conserved<double> wet_state(double h_s) {
    const double h = uniform(0.05, 3.0);
    return {h - h_s, h * uniform(-3.0, 3.0), h * uniform(-3.0, 3.0)};
  }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// nx x ny unit-square grid of rectangular cells with all-wall boundaries.
inline Mesh box_mesh(int nx, int ny, double lx, double ly, const BedProfile& bed, double ref_ws) {
  std::vector<Node> nodes;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const double x = lx * i / nx, y = ly * j / ny;
      nodes.push_back({static_cast<int>(nodes.size()), x, y, bed(x, y)});
    }
  std::vector<std::vector<int>> cells;
  std::vector<int> zones;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int a = j * (nx + 1) + i;
      cells.push_back({a, a + 1, a + nx + 2, a + nx + 1});
      zones.push_back(0);
    }
  PatchEdges walls{"walls", PatchKind::wall, 0.0, {}};
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int c = j * nx + i;
      if (j == 0) walls.edges.push_back({c, 0});
      if (i == nx - 1) walls.edges.push_back({c, 1});
      if (j == ny - 1) walls.edges.push_back({c, 2});
      if (i == 0) walls.edges.push_back({c, 3});
    }
  return build_mesh(std::move(nodes), std::move(cells), std::move(zones), {walls}, ref_ws);
}

inline BedProfile flat(double z = 0.0) {
  return [z](double, double) { return z; };
}

}  // namespace fvpinn::testing
