#include "mte/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace mte {

namespace {

double evaluate(const ScalarBuilder& build, const std::vector<Tensor*>& leaves) {
  Graph g;
  std::vector<NodeId> ids;
  ids.reserve(leaves.size());
  for (Tensor* t : leaves) ids.push_back(g.param(*t));
  return g.scalar(build(g, ids));
}

}  // namespace

double gradient_check(const ScalarBuilder& build, std::vector<Tensor*> leaves, double h) {
  // Analytic pass.
  Graph g;
  std::vector<NodeId> ids;
  ids.reserve(leaves.size());
  for (Tensor* t : leaves) {
    t->zero_grad();
    ids.push_back(g.param(*t));
  }
  g.backward(build(g, ids));

  double max_rel = 0.0;
  for (Tensor* t : leaves) {
    for (std::size_t i = 0; i < t->numel(); ++i) {
      const double saved = t->data[i];
      t->data[i] = saved + h;
      const double up = evaluate(build, leaves);
      t->data[i] = saved - h;
      const double down = evaluate(build, leaves);
      t->data[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = (*t->grad)[i];
      const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
      max_rel = std::max(max_rel, std::fabs(analytic - numeric) / denom);
    }
  }
  return max_rel;
}

}  // namespace mte
