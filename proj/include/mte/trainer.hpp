#ifndef MTE_TRAINER_HPP_
#define MTE_TRAINER_HPP_

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mte/graph.hpp"
#include "mte/layers.hpp"
#include "mte/rng.hpp"
#include "mte/types.hpp"

namespace mte {

enum class Subset { Train, Val };

// Builds one scalar loss node per task (in fixed task order) for the given
// instance indices of the chosen subset.
using BatchLossFn = std::function<std::vector<std::pair<std::string, NodeId>>(
    Graph&, Subset, const std::vector<std::size_t>&, bool training, Rng& dropout_rng)>;

// Mini-batch Adam on the joint weighted loss with per-epoch seeded shuffling,
// early stopping on the summed validation loss (patience from config) and
// best-validation parameter restore. Deterministic given cfg.seed. A
// non-finite training loss aborts with NumericError naming epoch and batch.
TrainHistory run_training(const std::vector<Param*>& params, const BatchLossFn& losses,
                          std::size_t n_train, std::size_t n_val, const TrainConfig& cfg);

}  // namespace mte

#endif  // MTE_TRAINER_HPP_
