#include "fvpinn/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "fvpinn/io.hpp"

namespace fvpinn {

void NetworkConfig::validate() const {
  if (width <= 0) throw std::invalid_argument("network width must be positive");
  if (depth <= 0) throw std::invalid_argument("network depth must be positive");
  if (fourier_features <= 0) throw std::invalid_argument("Fourier feature count must be positive");
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("Fourier sigma must be finite and non-negative");
}

Normalizer Normalizer::from_mesh(const Mesh& mesh, double t0, double t1) {
  if (!(t1 > t0)) throw std::invalid_argument("normaliser needs t1 > t0");
  Normalizer n;
  const double nc = static_cast<double>(mesh.cells.size());
  for (int k = 0; k < 2; ++k) {
    double mean = 0.0;
    for (const Cell& c : mesh.cells) mean += c.centroid[static_cast<std::size_t>(k)];
    mean /= nc;
    double var = 0.0;
    for (const Cell& c : mesh.cells) {
      const double d = c.centroid[static_cast<std::size_t>(k)] - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / nc);
    n.mean[static_cast<std::size_t>(k)] = mean;
    // A single row of cells has zero spread in y (up to centroid rounding).
    n.scale[static_cast<std::size_t>(k)] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0;
  }
  n.mean[2] = 0.5 * (t0 + t1);
  n.scale[2] = (t1 - t0) / std::sqrt(12.0);
  return n;
}

SurrogateNetwork SurrogateNetwork::build(const NetworkConfig& config, FourierEmbedding embedding,
                                         Normalizer normalizer) {
  config.validate();
  if (embedding.features() != config.fourier_features)
    throw std::invalid_argument("embedding has " + std::to_string(embedding.features()) +
                                " rows, config asks for " +
                                std::to_string(config.fourier_features));
  SurrogateNetwork net;
  net.config = config;
  net.embedding = std::move(embedding);
  net.normalizer = normalizer;
  std::size_t off = 0;
  int n_in = net.embedding.output_size();
  for (int l = 0; l <= config.depth; ++l) {
    LayerShape s;
    s.n_in = n_in;
    s.n_out = l == config.depth ? 3 : config.width;
    s.w_offset = off;
    off += static_cast<std::size_t>(s.n_in) * static_cast<std::size_t>(s.n_out);
    s.b_offset = off;
    off += static_cast<std::size_t>(s.n_out);
    s.residual = config.residual && l < config.depth && s.n_in == s.n_out;
    net.layers.push_back(s);
    n_in = s.n_out;
  }
  net.n_params = off;
  return net;
}

std::pair<SurrogateNetwork, ParamVector> init_network(const NetworkConfig& config,
                                                      std::uint64_t seed,
                                                      const Normalizer& normalizer) {
  config.validate();
  std::mt19937_64 rng(seed);
  FourierEmbedding e;
  e.sigma = config.sigma;
  e.B.resize(config.fourier_features, 3);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < config.fourier_features; ++k)
    for (int j = 0; j < 3; ++j) e.B(k, j) = config.sigma * normal(rng);

  SurrogateNetwork net = SurrogateNetwork::build(config, std::move(e), normalizer);
  ParamVector p(net.n_params, 0.0);
  for (const LayerShape& L : net.layers) {
    const double limit = std::sqrt(6.0 / (L.n_in + L.n_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    const std::size_t n = static_cast<std::size_t>(L.n_in) * static_cast<std::size_t>(L.n_out);
    for (std::size_t i = 0; i < n; ++i) p[L.w_offset + i] = u(rng);
  }
  return {std::move(net), std::move(p)};
}

Conserved<double> predict(const SurrogateNetwork& net, std::span<const double> params, double x,
                          double y, double t, double h_s) {
  const auto q = forward_point<double, double>(net, params, x, y, t, h_s);
  return {q[0], q[1], q[2]};
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr const char* kMagic = "FVPINN-CHECKPOINT";
constexpr int kVersion = 1;

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double unhex(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw CheckpointError("bad number '" + s + "' in checkpoint");
  return v;
}

}  // namespace

std::string format_checkpoint(const SurrogateNetwork& net, std::span<const double> params) {
  if (params.size() != net.n_params) throw CheckpointError("parameter vector size mismatch");
  std::ostringstream o;
  const NetworkConfig& c = net.config;
  o << kMagic << ' ' << kVersion << '\n';
  o << "config " << c.width << ' ' << c.depth << ' ' << c.fourier_features << ' ' << hex(c.sigma)
    << ' ' << (c.residual ? 1 : 0) << '\n';
  o << "normalizer";
  for (double v : net.normalizer.mean) o << ' ' << hex(v);
  for (double v : net.normalizer.scale) o << ' ' << hex(v);
  o << '\n';
  o << "fourier " << net.embedding.B.rows() << '\n';
  for (int k = 0; k < net.embedding.B.rows(); ++k)
    o << hex(net.embedding.B(k, 0)) << ' ' << hex(net.embedding.B(k, 1)) << ' '
      << hex(net.embedding.B(k, 2)) << '\n';
  o << "params " << params.size() << '\n';
  for (double v : params) o << hex(v) << '\n';
  o << "end\n";
  return o.str();
}

std::pair<SurrogateNetwork, ParamVector> parse_checkpoint(const std::string& text) {
  std::istringstream in(text);
  auto word = [&](const char* expect) {
    std::string w;
    if (!(in >> w) || w != expect)
      throw CheckpointError(std::string("checkpoint: expected '") + expect + "', got '" + w + "'");
  };
  auto num = [&] {
    std::string w;
    if (!(in >> w)) throw CheckpointError("checkpoint truncated");
    return unhex(w);
  };
  auto count = [&] {
    long n = -1;
    if (!(in >> n) || n < 0) throw CheckpointError("checkpoint: bad count");
    return n;
  };
  word(kMagic);
  if (count() != kVersion) throw CheckpointError("unsupported checkpoint version");
  word("config");
  NetworkConfig c;
  c.width = static_cast<int>(count());
  c.depth = static_cast<int>(count());
  c.fourier_features = static_cast<int>(count());
  c.sigma = num();
  c.residual = count() != 0;
  word("normalizer");
  Normalizer nz;
  for (double& v : nz.mean) v = num();
  for (double& v : nz.scale) v = num();
  word("fourier");
  FourierEmbedding e;
  e.sigma = c.sigma;
  const long m = count();
  e.B.resize(m, 3);
  for (long k = 0; k < m; ++k)
    for (int j = 0; j < 3; ++j) e.B(k, j) = num();
  SurrogateNetwork net = SurrogateNetwork::build(c, std::move(e), nz);
  word("params");
  const long np = count();
  if (static_cast<std::size_t>(np) != net.n_params)
    throw CheckpointError("checkpoint parameter count does not match its configuration");
  ParamVector p(static_cast<std::size_t>(np));
  for (double& v : p) v = num();
  word("end");
  return {std::move(net), std::move(p)};
}

void save_checkpoint(const std::string& path, const SurrogateNetwork& net,
                     std::span<const double> params) {
  write_file_atomic(path, format_checkpoint(net, params));
}

std::pair<SurrogateNetwork, ParamVector> load_checkpoint(const std::string& path) {
  return parse_checkpoint(read_file(path));
}

}  // namespace fvpinn
