#pragma once

// Blocked forward and reverse passes of the surrogate over many points at
// once, with an optional forward tangent in t. Points are processed in fixed
// blocks and per-block gradients are summed in block order, so serial and
// parallel execution give bitwise identical results.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fvpinn/execution.hpp"
#include "fvpinn/network.hpp"

namespace fvpinn {

struct PointBatch {
  std::vector<double> x, y, t, h_s;

  std::size_t size() const noexcept { return x.size(); }
  void add(double px, double py, double pt, double hs) {
    x.push_back(px);
    y.push_back(py);
    t.push_back(pt);
    h_s.push_back(hs);
  }
  void clear() {
    x.clear();
    y.clear();
    t.clear();
    h_s.clear();
  }
};

class BatchNetwork {
 public:
  explicit BatchNetwork(const SurrogateNetwork& net, Execution exec = Execution::parallel,
                        int block_size = 64);

  /// Evaluates (xi, uh, vh) at every point, plus d/dt when requested, and
  /// keeps what backward() needs.
  void forward(std::span<const double> params, const PointBatch& points, bool with_time_derivative);

  const std::vector<Conserved<double>>& q() const noexcept { return q_; }
  const std::vector<Conserved<double>>& q_t() const noexcept { return q_t_; }

  /// grad += J^T [cot_q; cot_qt] for the last forward(). cot_qt is ignored
  /// (may be empty) when the forward pass had no time derivative.
  void backward(std::span<const Conserved<double>> cot_q, std::span<const Conserved<double>> cot_qt,
                std::span<double> grad);

  Execution execution() const noexcept { return exec_; }

 private:
  struct Block {
    std::size_t begin = 0;
    int n = 0;
    std::vector<Eigen::MatrixXd> input;  // per layer: [H | dH]
    std::vector<Eigen::MatrixXd> s;      // per hidden layer: tanh output
    std::vector<Eigen::MatrixXd> da;     // per hidden layer: tangent of the pre-activation
    Eigen::RowVectorXd z0;               // eta_raw + h_s
    Eigen::RowVectorXd d_o0;             // tangent of eta_raw
    Eigen::VectorXd grad;
  };

  void forward_block(Block& b, const PointBatch& pts);
  void backward_block(Block& b, std::span<const Conserved<double>> cot_q,
                      std::span<const Conserved<double>> cot_qt);

  const SurrogateNetwork* net_;
  Execution exec_;
  int block_size_;
  const double* params_ = nullptr;
  bool tangent_ = false;
  std::vector<Block> blocks_;
  std::vector<Conserved<double>> q_, q_t_;
};

}  // namespace fvpinn
