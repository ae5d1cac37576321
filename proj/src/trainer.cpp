#include "mte/trainer.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "mte/adam.hpp"
#include "mte/error.hpp"

namespace mte {

namespace {

struct LossAccumulator {
  std::map<std::string, double> sums;
  std::size_t count = 0;

  void add(const std::vector<std::pair<std::string, NodeId>>& losses, const Graph& g,
           std::size_t batch) {
    for (const auto& [task, node] : losses) sums[task] += g.scalar(node) * batch;
    count += batch;
  }
  std::map<std::string, double> means() const {
    std::map<std::string, double> out;
    for (const auto& [task, sum] : sums) out[task] = sum / static_cast<double>(count);
    return out;
  }
};

double joint_of(const std::map<std::string, double>& per_task, const TrainConfig& cfg) {
  double joint = 0.0;
  for (const auto& [task, v] : per_task) joint += cfg.weight_of(task) * v;
  return joint;
}

std::vector<std::vector<std::size_t>> batches_of(const std::vector<std::size_t>& order,
                                                 std::size_t batch_size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    const std::size_t end = std::min(order.size(), i + batch_size);
    out.emplace_back(order.begin() + i, order.begin() + end);
  }
  return out;
}

}  // namespace

TrainHistory run_training(const std::vector<Param*>& params, const BatchLossFn& losses,
                          std::size_t n_train, std::size_t n_val, const TrainConfig& cfg) {
  cfg.validate();
  if (n_train == 0) throw DataError("training set is empty");

  AdamOptimizer optimizer(
      [&] {
        std::vector<Tensor*> ts;
        ts.reserve(params.size());
        for (Param* p : params) ts.push_back(&p->value);
        return ts;
      }());

  Rng root(cfg.seed);
  Rng shuffle_rng = root.split(101);
  Rng dropout_rng = root.split(202);

  TrainHistory history;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<Tensor> best_snapshot;
  std::size_t patience_left = cfg.patience;

  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    LossAccumulator train_acc;
    std::size_t batch_no = 0;
    for (const auto& batch : batches_of(order, cfg.batch_size)) {
      Graph g;
      const auto task_losses = losses(g, Subset::Train, batch, true, dropout_rng);
      std::vector<NodeId> nodes;
      std::vector<double> weights;
      for (const auto& [task, node] : task_losses) {
        nodes.push_back(node);
        weights.push_back(cfg.weight_of(task));
      }
      const NodeId joint = g.weighted_sum(nodes, weights);
      if (!std::isfinite(g.scalar(joint))) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch + 1) +
                           ", batch " + std::to_string(batch_no + 1));
      }
      optimizer.zero_grads();
      g.backward(joint);
      optimizer.step();
      train_acc.add(task_losses, g, batch.size());
      ++batch_no;
    }

    EpochStats stats;
    stats.train_loss = train_acc.means();
    stats.train_joint = joint_of(stats.train_loss, cfg);

    if (n_val > 0) {
      LossAccumulator val_acc;
      std::vector<std::size_t> val_order(n_val);
      std::iota(val_order.begin(), val_order.end(), 0);
      for (const auto& batch : batches_of(val_order, cfg.batch_size)) {
        Graph g;
        const auto task_losses = losses(g, Subset::Val, batch, false, dropout_rng);
        val_acc.add(task_losses, g, batch.size());
      }
      stats.val_loss = val_acc.means();
      stats.val_joint = joint_of(stats.val_loss, cfg);
    } else {
      stats.val_joint = std::numeric_limits<double>::quiet_NaN();
    }
    history.push_back(stats);

    if (n_val > 0) {
      if (stats.val_joint < best_val) {
        best_val = stats.val_joint;
        best_snapshot.clear();
        best_snapshot.reserve(params.size());
        for (Param* p : params) best_snapshot.push_back(p->value);
        patience_left = cfg.patience;
      } else if (cfg.patience > 0 && --patience_left == 0) {
        break;
      }
    }
  }

  if (!best_snapshot.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i]->value.data = best_snapshot[i].data;
      params[i]->value.grad.reset();
    }
  }
  return history;
}

}  // namespace mte
