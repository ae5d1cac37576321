#ifndef MTE_ENSEMBLE_HPP_
#define MTE_ENSEMBLE_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mte/features.hpp"
#include "mte/model.hpp"
#include "mte/types.hpp"

namespace mte {

// instance id -> representation vector, as read from a dump or produced by
// extract_representation.
using RepSource = std::map<std::string, std::vector<double>>;

// Concatenated per-instance rows in fixed block order [LSTM | CNN | GRU | Feat].
// The feature block is either already 128-d (projected) or raw, in which case
// the ensemble's projector maps it during the forward pass.
struct EnsembleInput {
  std::vector<std::string> ids;
  Tensor lstm, cnn, gru;  // n x rep_width each
  Tensor feat;            // n x 128 or n x raw_width
  bool feat_is_raw = false;

  std::size_t size() const { return ids.size(); }
};

// Aligns the four sources over the given instance order; an id missing from
// any source is an alignment error naming the id and the source.
EnsembleInput assemble(const std::vector<std::string>& ids, const RepSource& lstm_rep,
                       const RepSource& cnn_rep, const RepSource& gru_rep,
                       const RepSource& feat_rep, bool feat_is_raw = false);

struct EnsembleDims {
  std::size_t rep_width = 128;   // per block
  std::size_t shared1 = 256;
  std::size_t shared2 = 128;
  std::size_t task1 = 64;
  std::size_t task2 = 32;
  double dropout_rate = 0.25;
  std::size_t projector_hidden = 256;
};

// Stacked MLP over the concatenated representations: two shared hidden
// layers (with dropout), then two task-specific hidden layers and a head per
// task, all predicted in one forward pass. When built with a raw feature
// width, an attached projector is trained jointly from the same loss.
class EnsembleModel {
 public:
  EnsembleModel(std::vector<TaskSpec> tasks, EnsembleDims dims, std::uint64_t seed,
                std::size_t feat_raw_width = 0);

  TrainHistory train(const EnsembleInput& train_in, const std::vector<Instance>& train_gold,
                     const EnsembleInput& val_in, const std::vector<Instance>& val_gold,
                     const TrainConfig& cfg);
  Predictions predict(const EnsembleInput& inputs);

  // Per-task output nodes for a batch of input rows.
  std::vector<std::pair<std::string, NodeId>> forward_batch(Graph& g, const EnsembleInput& inputs,
                                                            const std::vector<std::size_t>& idx,
                                                            bool training, Rng& dropout_rng);

  std::vector<Param*> params();
  std::size_t parameter_count();
  const std::vector<TaskSpec>& tasks() const { return tasks_; }
  const EnsembleDims& dims() const { return dims_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t feat_raw_width() const { return feat_raw_width_; }
  FeatureProjector* projector() { return projector_ ? &*projector_ : nullptr; }

  struct TaskHead {
    Dense h1, h2, out;
  };
  std::vector<TaskHead>& heads() { return heads_; }

 private:
  std::vector<TaskSpec> tasks_;
  EnsembleDims dims_;
  std::uint64_t seed_;
  std::size_t feat_raw_width_;

  Dense shared1_, shared2_;
  std::vector<TaskHead> heads_;
  std::optional<FeatureProjector> projector_;
};

}  // namespace mte

#endif  // MTE_ENSEMBLE_HPP_
