#pragma once

// Fourier-feature MLP surrogate (x, y, t) -> (xi, uh, vh). This header holds
// the data model and a generic per-point forward pass that works for any AD
// scalar; network_batch.hpp has the fast blocked kernels used in training.

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fvpinn/ad.hpp"
#include "fvpinn/mesh.hpp"
#include "fvpinn/swe.hpp"

namespace fvpinn {

using ParamVector = std::vector<double>;

struct NetworkConfig {
  int width = 64;
  int depth = 5;  // hidden affine+tanh layers
  int fourier_features = 32;
  double sigma = 2.0;
  bool residual = false;

  void validate() const;
  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// z-score statistics for (x, y, t).
struct Normalizer {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> scale{1.0, 1.0, 1.0};

  /// x, y from centroid mean/std; t from the uniform distribution on [t0, t1].
  static Normalizer from_mesh(const Mesh& mesh, double t0, double t1);

  template <class S>
  std::array<S, 3> normalize(const S& x, const S& y, const S& t) const {
    return {(x - mean[0]) * (1.0 / scale[0]), (y - mean[1]) * (1.0 / scale[1]),
            (t - mean[2]) * (1.0 / scale[2])};
  }
  std::array<double, 3> denormalize(const std::array<double, 3>& z) const {
    return {z[0] * scale[0] + mean[0], z[1] * scale[1] + mean[1], z[2] * scale[2] + mean[2]};
  }
  friend bool operator==(const Normalizer&, const Normalizer&) = default;
};

struct FourierEmbedding {
  Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> B;  // m x 3, fixed after init
  double sigma = 0.0;

  int features() const noexcept { return static_cast<int>(B.rows()); }
  int output_size() const noexcept { return 2 * features(); }
};

/// [cos(B p); sin(B p)]
template <class S>
std::vector<S> embed(const FourierEmbedding& e, const std::array<S, 3>& p) {
  const int m = e.features();
  std::vector<S> out(static_cast<std::size_t>(2 * m));
  for (int k = 0; k < m; ++k) {
    const S a = p[0] * e.B(k, 0) + p[1] * e.B(k, 1) + p[2] * e.B(k, 2);
    out[static_cast<std::size_t>(k)] = ad::cos(a);
    out[static_cast<std::size_t>(m + k)] = ad::sin(a);
  }
  return out;
}

/// Offsets of one affine layer inside the flat parameter vector. W is stored
/// column-major (n_out x n_in) followed by b (n_out).
struct LayerShape {
  int n_in = 0;
  int n_out = 0;
  std::size_t w_offset = 0;
  std::size_t b_offset = 0;
  bool residual = false;
};

struct SurrogateNetwork {
  NetworkConfig config;
  FourierEmbedding embedding;
  Normalizer normalizer;
  std::vector<LayerShape> layers;  // hidden layers then the 3-output head
  std::size_t n_params = 0;

  static SurrogateNetwork build(const NetworkConfig& config, FourierEmbedding embedding,
                                Normalizer normalizer);
  const LayerShape& head() const { return layers.back(); }
};

/// B ~ N(0, sigma^2), Xavier-uniform weights, zero biases; deterministic per seed.
std::pair<SurrogateNetwork, ParamVector> init_network(const NetworkConfig& config,
                                                      std::uint64_t seed,
                                                      const Normalizer& normalizer = {});

/// Raw head outputs (eta_raw, uh, vh) for one point.
template <class S, class P>
std::array<S, 3> forward_raw(const SurrogateNetwork& net, std::span<const P> params, const S& x,
                             const S& y, const S& t) {
  std::vector<S> h = embed(net.embedding, net.normalizer.normalize(x, y, t));
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const LayerShape& L = net.layers[l];
    const bool last = l + 1 == net.layers.size();
    std::vector<S> a(static_cast<std::size_t>(L.n_out));
    for (int o = 0; o < L.n_out; ++o) {
      S acc = S(params[L.b_offset + static_cast<std::size_t>(o)]);
      for (int i = 0; i < L.n_in; ++i)
        acc = acc + S(params[L.w_offset + static_cast<std::size_t>(i) * L.n_out +
                             static_cast<std::size_t>(o)]) *
                        h[static_cast<std::size_t>(i)];
      a[static_cast<std::size_t>(o)] = last ? acc : ad::tanh(acc);
    }
    if (L.residual)
      for (std::size_t o = 0; o < a.size(); ++o) a[o] = a[o] + h[o];
    h = std::move(a);
  }
  return {h[0], h[1], h[2]};
}

/// (xi, uh, vh) with h = softplus(eta_raw + h_s) > 0 and xi = h - h_s.
template <class S, class P>
std::array<S, 3> forward_point(const SurrogateNetwork& net, std::span<const P> params, const S& x,
                               const S& y, const S& t, double h_s) {
  std::array<S, 3> o = forward_raw<S, P>(net, params, x, y, t);
  o[0] = ad::softplus(o[0] + h_s) - h_s;
  return o;
}

Conserved<double> predict(const SurrogateNetwork& net, std::span<const double> params, double x,
                          double y, double t, double h_s);

/// Exact dQ/dt at a point. With P = ad::Var the result stays on the tape, so
/// it can itself be differentiated with respect to the parameters.
template <class P>
std::array<P, 3> time_partial(const SurrogateNetwork& net, std::span<const P> params, double x,
                              double y, double t, double h_s) {
  using D = ad::Dual<P>;
  std::vector<D> dp;
  dp.reserve(params.size());
  for (const P& p : params) dp.emplace_back(p, P(0.0));
  const std::span<const D> sp(dp);
  return ad::time_partial<P>(
      [&](const D& xx, const D& yy, const D& tt) {
        return forward_point<D, D>(net, sp, xx, yy, tt, h_s);
      },
      P(x), P(y), P(t));
}

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Versioned text record with hexfloat values, so the round trip is exact.
std::string format_checkpoint(const SurrogateNetwork& net, std::span<const double> params);
std::pair<SurrogateNetwork, ParamVector> parse_checkpoint(const std::string& text);
void save_checkpoint(const std::string& path, const SurrogateNetwork& net,
                     std::span<const double> params);
std::pair<SurrogateNetwork, ParamVector> load_checkpoint(const std::string& path);

}  // namespace fvpinn
