#include "fvpinn/network_batch.hpp"

#include <cmath>
#include <stdexcept>

namespace fvpinn {

namespace {

using Eigen::MatrixXd;
using ConstMap = Eigen::Map<const MatrixXd>;
using Map = Eigen::Map<MatrixXd>;

}  // namespace

BatchNetwork::BatchNetwork(const SurrogateNetwork& net, Execution exec, int block_size)
    : net_(&net), exec_(exec), block_size_(block_size) {
  if (block_size_ <= 0) throw std::invalid_argument("block size must be positive");
}

void BatchNetwork::forward(std::span<const double> params, const PointBatch& points,
                           bool with_time_derivative) {
  if (params.size() != net_->n_params) throw std::invalid_argument("parameter vector size mismatch");
  params_ = params.data();
  tangent_ = with_time_derivative;
  const std::size_t n = points.size();
  q_.assign(n, {});
  q_t_.assign(tangent_ ? n : 0, {});
  const std::size_t nb = (n + static_cast<std::size_t>(block_size_) - 1) / block_size_;
  blocks_.assign(nb, {});
  for (std::size_t k = 0; k < nb; ++k) {
    blocks_[k].begin = k * static_cast<std::size_t>(block_size_);
    blocks_[k].n = static_cast<int>(std::min<std::size_t>(block_size_, n - blocks_[k].begin));
  }
  const long count = static_cast<long>(nb);
#pragma omp parallel for schedule(static) if (exec_ == Execution::parallel)
  for (long k = 0; k < count; ++k) forward_block(blocks_[static_cast<std::size_t>(k)], points);
}

void BatchNetwork::forward_block(Block& b, const PointBatch& pts) {
  const SurrogateNetwork& net = *net_;
  const int n = b.n;
  const int cols = tangent_ ? 2 * n : n;
  const int m = net.embedding.features();
  const Normalizer& nz = net.normalizer;

  // Embedding.
  MatrixXd z(3, n);
  for (int j = 0; j < n; ++j) {
    const std::size_t i = b.begin + static_cast<std::size_t>(j);
    const auto p = nz.normalize(pts.x[i], pts.y[i], pts.t[i]);
    z(0, j) = p[0];
    z(1, j) = p[1];
    z(2, j) = p[2];
  }
  const MatrixXd e = net.embedding.B * z;
  MatrixXd h(2 * m, cols);
  h.topLeftCorner(m, n) = e.array().cos().matrix();
  h.block(m, 0, m, n) = e.array().sin().matrix();
  if (tangent_) {
    const Eigen::VectorXd de = net.embedding.B.col(2) * (1.0 / nz.scale[2]);
    for (int j = 0; j < n; ++j) {
      h.block(0, n + j, m, 1) = -(h.block(m, j, m, 1).array() * de.array()).matrix();
      h.block(m, n + j, m, 1) = (h.block(0, j, m, 1).array() * de.array()).matrix();
    }
  }

  const std::size_t nl = net.layers.size();
  b.input.assign(nl, {});
  b.s.assign(nl - 1, {});
  b.da.assign(nl - 1, {});
  for (std::size_t l = 0; l + 1 < nl; ++l) {
    const LayerShape& L = net.layers[l];
    const ConstMap w(params_ + L.w_offset, L.n_out, L.n_in);
    const Eigen::Map<const Eigen::VectorXd> bias(params_ + L.b_offset, L.n_out);
    MatrixXd a = w * h;
    a.leftCols(n).colwise() += bias;
    MatrixXd s = a.leftCols(n).array().tanh().matrix();
    MatrixXd next(L.n_out, cols);
    next.leftCols(n) = s;
    if (tangent_) {
      b.da[l] = a.rightCols(n);
      next.rightCols(n) = ((1.0 - s.array().square()) * b.da[l].array()).matrix();
    }
    if (L.residual) next += h;
    b.input[l] = std::move(h);
    b.s[l] = std::move(s);
    h = std::move(next);
  }

  const LayerShape& H = net.head();
  const ConstMap w(params_ + H.w_offset, H.n_out, H.n_in);
  MatrixXd o = w * h;
  b.input[nl - 1] = std::move(h);
  b.z0.resize(n);
  if (tangent_) b.d_o0 = o.block(0, n, 1, n);
  for (int j = 0; j < n; ++j) {
    const std::size_t i = b.begin + static_cast<std::size_t>(j);
    const double o0 = o(0, j) + params_[H.b_offset];
    const double o1 = o(1, j) + params_[H.b_offset + 1];
    const double o2 = o(2, j) + params_[H.b_offset + 2];
    const double hs = pts.h_s[i];
    b.z0(j) = o0 + hs;
    q_[i] = {ad::softplus(b.z0(j)) - hs, o1, o2};
    if (tangent_) q_t_[i] = {ad::sigmoid(b.z0(j)) * o(0, n + j), o(1, n + j), o(2, n + j)};
  }
}

void BatchNetwork::backward(std::span<const Conserved<double>> cot_q,
                            std::span<const Conserved<double>> cot_qt, std::span<double> grad) {
  if (cot_q.size() != q_.size()) throw std::invalid_argument("cotangent size mismatch");
  if (tangent_ && cot_qt.size() != q_.size())
    throw std::invalid_argument("time-derivative cotangent size mismatch");
  if (grad.size() != net_->n_params) throw std::invalid_argument("gradient size mismatch");
  const long count = static_cast<long>(blocks_.size());
#pragma omp parallel for schedule(static) if (exec_ == Execution::parallel)
  for (long k = 0; k < count; ++k)
    backward_block(blocks_[static_cast<std::size_t>(k)], cot_q, cot_qt);
  // Fixed-order reduction.
  for (Block& b : blocks_) {
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += b.grad[static_cast<Eigen::Index>(i)];
    b.grad.resize(0);
  }
}

void BatchNetwork::backward_block(Block& b, std::span<const Conserved<double>> cot_q,
                                  std::span<const Conserved<double>> cot_qt) {
  const SurrogateNetwork& net = *net_;
  const int n = b.n;
  const int cols = tangent_ ? 2 * n : n;
  b.grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.n_params));
  double* g = b.grad.data();

  // Output transform.
  MatrixXd c(3, cols);
  for (int j = 0; j < n; ++j) {
    const std::size_t i = b.begin + static_cast<std::size_t>(j);
    const double sg = ad::sigmoid(b.z0(j));
    c(0, j) = cot_q[i].xi * sg;
    c(1, j) = cot_q[i].uh;
    c(2, j) = cot_q[i].vh;
    if (tangent_) {
      c(0, j) += cot_qt[i].xi * sg * (1.0 - sg) * b.d_o0(j);
      c(0, n + j) = cot_qt[i].xi * sg;
      c(1, n + j) = cot_qt[i].uh;
      c(2, n + j) = cot_qt[i].vh;
    }
  }

  const std::size_t nl = net.layers.size();
  for (std::size_t l = nl; l-- > 0;) {
    const LayerShape& L = net.layers[l];
    const ConstMap w(params_ + L.w_offset, L.n_out, L.n_in);
    MatrixXd gpre;  // cotangent of [a | da]
    if (l + 1 == nl) {
      gpre = std::move(c);
    } else {
      const auto s = b.s[l].array();
      const auto ds = 1.0 - s.square();
      gpre.resize(L.n_out, cols);
      if (tangent_) {
        const auto cd = c.rightCols(n).array();
        gpre.rightCols(n) = (ds * cd).matrix();
        gpre.leftCols(n) = (ds * (c.leftCols(n).array() - 2.0 * s * b.da[l].array() * cd)).matrix();
      } else {
        gpre = (ds * c.array()).matrix();
      }
    }
    Map wg(g + L.w_offset, L.n_out, L.n_in);
    wg.noalias() += gpre * b.input[l].transpose();
    Eigen::Map<Eigen::VectorXd> bg(g + L.b_offset, L.n_out);
    bg += gpre.leftCols(n).rowwise().sum();
    if (l == 0) break;  // the embedding has no parameters
    MatrixXd prev = w.transpose() * gpre;
    if (L.residual) prev += c;
    c = std::move(prev);
  }
}

}  // namespace fvpinn
