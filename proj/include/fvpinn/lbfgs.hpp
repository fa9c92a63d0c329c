#pragma once

// Limited-memory BFGS with a strong-Wolfe line search (two-loop recursion,
// bracketing plus cubic-interpolation zoom).

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fvpinn {

struct LBFGSConfig {
  int memory = 10;
  int max_iterations = 0;
  double c1 = 1e-4;
  double c2 = 0.9;
  double gtol = 1e-9;  // on the max-norm of the gradient
  int max_line_search = 30;

  void validate() const;
};

/// f(x) with its gradient written into `grad` (already sized).
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LBFGSResult {
  std::vector<double> x;
  double f = 0.0;
  double grad_norm = 0.0;  // max-norm at x
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  bool line_search_failed = false;
  std::string message;
};

/// Called after every accepted iteration with (iteration, f, grad max-norm).
using IterationCallback = std::function<void(int, double, double)>;

LBFGSResult lbfgs_minimize(std::vector<double> x0, const Objective& f, const LBFGSConfig& cfg,
                           const IterationCallback& on_iteration = {});

}  // namespace fvpinn
