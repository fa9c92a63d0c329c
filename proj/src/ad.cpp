#include "fvpinn/ad.hpp"

namespace fvpinn::ad {

thread_local Tape* Tape::active_ = nullptr;

std::vector<double> Tape::adjoints(std::int32_t root) const {
  std::vector<double> adj(nodes_.size(), 0.0);
  if (root == kNone) return adj;
  adj[static_cast<std::size_t>(root)] = 1.0;
  for (std::int32_t i = root; i >= 0; --i) {
    const double a = adj[static_cast<std::size_t>(i)];
    if (a == 0.0) continue;
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.p0 != kNone) adj[static_cast<std::size_t>(n.p0)] += n.w0 * a;
    if (n.p1 != kNone) adj[static_cast<std::size_t>(n.p1)] += n.w1 * a;
  }
  return adj;
}

GradientResult value_and_grad(const Program& program, std::span<const double> params) {
  Tape tape;
  TapeScope scope(tape);
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (double p : params) leaves.push_back(Var::make_leaf(p));

  const Var out = program(leaves);
  if (const char* bad = tape.first_non_finite()) throw NonFiniteError(bad);

  GradientResult result;
  result.value = out.value();
  result.gradient.assign(params.size(), 0.0);
  if (out.is_constant()) return result;
  const std::vector<double> adj = tape.adjoints(out.index());
  for (std::size_t k = 0; k < leaves.size(); ++k)
    result.gradient[k] = adj[static_cast<std::size_t>(leaves[k].index())];
  return result;
}

}  // namespace fvpinn::ad
