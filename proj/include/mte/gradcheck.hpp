#ifndef MTE_GRADCHECK_HPP_
#define MTE_GRADCHECK_HPP_

#include <functional>
#include <vector>

#include "mte/graph.hpp"
#include "mte/tensor.hpp"

namespace mte {

// Builds a scalar-valued graph over the given leaves (bound as parameters)
// and must return the root node.
using ScalarBuilder = std::function<NodeId(Graph&, const std::vector<NodeId>&)>;

// Central finite differences (step h) per coordinate of every leaf against
// the analytic gradient from one backward pass. Returns the max relative
// error with denominator max(|analytic|, |numeric|, 1e-8). Leaves are
// restored to their original values on return.
double gradient_check(const ScalarBuilder& build, std::vector<Tensor*> leaves, double h = 1e-4);

}  // namespace mte

#endif  // MTE_GRADCHECK_HPP_
