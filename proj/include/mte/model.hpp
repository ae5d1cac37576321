#ifndef MTE_MODEL_HPP_
#define MTE_MODEL_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mte/layers.hpp"
#include "mte/trainer.hpp"
#include "mte/types.hpp"

namespace mte {

enum class EncoderKind { Cnn, Lstm, Gru };

std::string encoder_name(EncoderKind kind);
EncoderKind encoder_by_name(const std::string& name);

struct ModelDims {
  std::size_t embed_dim = 300;
  std::size_t max_len = 50;
  std::size_t conv_filters = 100;           // per width
  std::vector<std::size_t> conv_widths = {2, 3, 4};
  std::size_t rnn_hidden = 128;             // per stacked layer
  std::size_t shared_width = 128;           // the exported representation
  std::size_t task_hidden = 100;            // per-task dense
  double dropout_rate = 0.25;
};

struct TaskOutput {
  TaskSpec spec;
  std::vector<std::string> pred_class;            // classification
  std::vector<std::vector<double>> distribution;  // classification, n x k
  std::vector<double> scores;                     // regression, n
};

using Predictions = std::map<std::string, TaskOutput>;

// One multi-task network: encoder trunk -> shared dense (the task-aware
// representation) -> per-task dense -> per-task output head (softmax for
// classification, sigmoid for regression).
class MultiTaskModel {
 public:
  MultiTaskModel(EncoderKind kind, std::vector<TaskSpec> tasks, const EmbeddingTable* table,
                 ModelDims dims, std::uint64_t seed);

  TrainHistory train(const std::vector<Instance>& train_set, const std::vector<Instance>& val_set,
                     const TrainConfig& cfg);
  Predictions predict(const std::vector<Instance>& instances);
  std::vector<RepresentationRecord> extract_representation(const std::vector<Instance>& instances);

  std::vector<Param*> params();
  std::size_t parameter_count();
  const std::vector<TaskSpec>& tasks() const { return tasks_; }
  EncoderKind kind() const { return kind_; }
  const ModelDims& dims() const { return dims_; }
  std::uint64_t seed() const { return seed_; }
  const EmbeddingTable* table() const { return table_; }
  void set_table(const EmbeddingTable* table);

  struct TaskHead {
    Dense hidden;
    Dense out;
  };
  // Exposed for gradient-isolation checks and the checkpoint codec.
  std::vector<TaskHead>& heads() { return heads_; }

  struct BatchNodes {
    NodeId rep = 0;                         // B x shared_width
    std::vector<std::pair<std::string, NodeId>> outputs;
  };
  BatchNodes forward_batch(Graph& g, const std::vector<std::vector<std::string>>& sequences,
                           bool training, Rng& dropout_rng);

 private:
  NodeId encode(Graph& g, const std::vector<std::vector<std::string>>& sequences);
  std::size_t encoder_width() const;

  EncoderKind kind_;
  std::vector<TaskSpec> tasks_;
  const EmbeddingTable* table_;
  ModelDims dims_;
  std::uint64_t seed_;

  std::vector<Conv1d> conv1_, conv2_;       // CNN, one per width
  std::optional<LstmLayer> lstm1_, lstm2_;
  std::optional<GruLayer> gru1_, gru2_;
  Dense shared_;
  std::vector<TaskHead> heads_;
};

// Gold tensors for a batch; shared by the base models and the ensemble.
Tensor onehot_targets(const std::vector<Instance>& instances,
                      const std::vector<std::size_t>& idx, const TaskSpec& task);
Tensor scalar_targets(const std::vector<Instance>& instances,
                      const std::vector<std::size_t>& idx, const TaskSpec& task);
// DataError unless every instance carries a label/target for every task.
void check_task_coverage(const std::vector<Instance>& instances,
                         const std::vector<TaskSpec>& tasks);

}  // namespace mte

#endif  // MTE_MODEL_HPP_
