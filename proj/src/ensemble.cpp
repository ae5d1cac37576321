#include "mte/ensemble.hpp"

#include <algorithm>
#include <array>

#include "mte/error.hpp"

namespace mte {

namespace {

void fill_block(Tensor& block, const RepSource& source, const std::vector<std::string>& ids,
                const char* source_name) {
  std::size_t width = 0;
  for (std::size_t r = 0; r < ids.size(); ++r) {
    auto it = source.find(ids[r]);
    if (it == source.end()) {
      throw DataError("instance '" + ids[r] + "' missing from " + std::string(source_name) +
                      " representations");
    }
    if (r == 0) {
      width = it->second.size();
      block = Tensor({ids.size(), width});
    } else if (it->second.size() != width) {
      throw DataError("representation width mismatch for instance '" + ids[r] + "' in " +
                      source_name);
    }
    std::copy(it->second.begin(), it->second.end(), &block.data[r * width]);
  }
}

}  // namespace

EnsembleInput assemble(const std::vector<std::string>& ids, const RepSource& lstm_rep,
                       const RepSource& cnn_rep, const RepSource& gru_rep,
                       const RepSource& feat_rep, bool feat_is_raw) {
  EnsembleInput in;
  in.ids = ids;
  in.feat_is_raw = feat_is_raw;
  fill_block(in.lstm, lstm_rep, ids, "lstm");
  fill_block(in.cnn, cnn_rep, ids, "cnn");
  fill_block(in.gru, gru_rep, ids, "gru");
  fill_block(in.feat, feat_rep, ids, "feature");
  return in;
}

EnsembleModel::EnsembleModel(std::vector<TaskSpec> tasks, EnsembleDims dims, std::uint64_t seed,
                             std::size_t feat_raw_width)
    : tasks_(std::move(tasks)), dims_(dims), seed_(seed), feat_raw_width_(feat_raw_width) {
  if (tasks_.empty()) throw ConfigError("an ensemble model needs at least one task");

  Rng rng(seed_);
  const std::size_t input_width = 4 * dims_.rep_width;
  shared1_ = Dense("ens.shared1", input_width, dims_.shared1, Activation::Relu, rng.split(1));
  shared2_ = Dense("ens.shared2", dims_.shared1, dims_.shared2, Activation::Relu, rng.split(2));
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    const TaskSpec& t = tasks_[i];
    TaskHead head;
    head.h1 = Dense("ens.task." + t.name + ".h1", dims_.shared2, dims_.task1, Activation::Relu,
                    rng.split(10 + 3 * i));
    head.h2 = Dense("ens.task." + t.name + ".h2", dims_.task1, dims_.task2, Activation::Relu,
                    rng.split(11 + 3 * i));
    const Activation out_act = t.kind == TaskSpec::Kind::Classification
                                   ? Activation::SoftmaxRows
                                   : Activation::Sigmoid;
    head.out = Dense("ens.task." + t.name + ".out", dims_.task2, t.output_width(), out_act,
                     rng.split(12 + 3 * i));
    heads_.push_back(std::move(head));
  }
  if (feat_raw_width_ > 0) {
    projector_.emplace(feat_raw_width_, rng.split(99).next_u64(), dims_.projector_hidden,
                       dims_.rep_width);
  }
}

std::vector<std::pair<std::string, NodeId>> EnsembleModel::forward_batch(
    Graph& g, const EnsembleInput& inputs, const std::vector<std::size_t>& idx, bool training,
    Rng& dropout_rng) {
  auto rows_of = [&](const Tensor& block) {
    Tensor rows({idx.size(), block.cols()});
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const double* src = &block.data[idx[r] * block.cols()];
      std::copy(src, src + block.cols(), &rows.data[r * block.cols()]);
    }
    return rows;
  };

  if (inputs.feat_is_raw != (projector_ != std::nullopt)) {
    throw ConfigError(inputs.feat_is_raw
                          ? "raw feature input fed to an ensemble without a projector"
                          : "projected feature input fed to an ensemble expecting raw features");
  }
  for (const Tensor* block : {&inputs.lstm, &inputs.cnn, &inputs.gru}) {
    if (block->cols() != dims_.rep_width) {
      throw DimensionError("representation block width " + std::to_string(block->cols()) +
                           ", ensemble expects " + std::to_string(dims_.rep_width));
    }
  }

  NodeId feat;
  if (projector_) {
    feat = projector_->forward(g, g.constant(rows_of(inputs.feat)));
  } else {
    if (inputs.feat.cols() != dims_.rep_width) {
      throw DimensionError("feature block width " + std::to_string(inputs.feat.cols()) +
                           ", ensemble expects " + std::to_string(dims_.rep_width));
    }
    feat = g.constant(rows_of(inputs.feat));
  }

  const std::array<NodeId, 4> blocks = {g.constant(rows_of(inputs.lstm)),
                                        g.constant(rows_of(inputs.cnn)),
                                        g.constant(rows_of(inputs.gru)), feat};
  NodeId x = g.concat_cols(blocks);
  NodeId h = shared1_.forward(g, x);
  h = g.dropout(h, dims_.dropout_rate, training, dropout_rng);
  h = shared2_.forward(g, h);
  h = g.dropout(h, dims_.dropout_rate, training, dropout_rng);

  std::vector<std::pair<std::string, NodeId>> out;
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    NodeId t = heads_[i].h1.forward(g, h);
    t = heads_[i].h2.forward(g, t);
    out.emplace_back(tasks_[i].name, heads_[i].out.forward(g, t));
  }
  return out;
}

std::vector<Param*> EnsembleModel::params() {
  std::vector<Param*> out;
  shared1_.collect(out);
  shared2_.collect(out);
  for (TaskHead& h : heads_) {
    h.h1.collect(out);
    h.h2.collect(out);
    h.out.collect(out);
  }
  if (projector_) projector_->collect(out);
  return out;
}

std::size_t EnsembleModel::parameter_count() {
  std::size_t n = 0;
  for (Param* p : params()) n += p->value.numel();
  return n;
}

TrainHistory EnsembleModel::train(const EnsembleInput& train_in,
                                  const std::vector<Instance>& train_gold,
                                  const EnsembleInput& val_in,
                                  const std::vector<Instance>& val_gold, const TrainConfig& cfg) {
  if (train_in.size() != train_gold.size() || val_in.size() != val_gold.size()) {
    throw DataError("ensemble inputs and gold instances are not aligned");
  }
  check_task_coverage(train_gold, tasks_);
  check_task_coverage(val_gold, tasks_);

  const BatchLossFn losses = [&](Graph& g, Subset subset, const std::vector<std::size_t>& idx,
                                 bool training, Rng& rng) {
    const EnsembleInput& in = subset == Subset::Train ? train_in : val_in;
    const auto& gold = subset == Subset::Train ? train_gold : val_gold;
    auto outputs = forward_batch(g, in, idx, training, rng);
    std::vector<std::pair<std::string, NodeId>> out;
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
      const TaskSpec& task = tasks_[i];
      const NodeId pred = outputs[i].second;
      NodeId loss_node;
      if (task.kind == TaskSpec::Kind::Classification) {
        loss_node = g.cross_entropy_loss(pred, g.constant(onehot_targets(gold, idx, task)));
      } else {
        loss_node = g.mse_loss(pred, g.constant(scalar_targets(gold, idx, task)));
      }
      out.emplace_back(task.name, loss_node);
    }
    return out;
  };

  return run_training(params(), losses, train_in.size(), val_in.size(), cfg);
}

Predictions EnsembleModel::predict(const EnsembleInput& inputs) {
  Predictions out;
  for (const TaskSpec& t : tasks_) {
    TaskOutput to;
    to.spec = t;
    out.emplace(t.name, std::move(to));
  }
  Rng dummy(0);
  const std::size_t chunk = 256;
  for (std::size_t start = 0; start < inputs.size(); start += chunk) {
    const std::size_t end = std::min(inputs.size(), start + chunk);
    std::vector<std::size_t> idx(end - start);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
    Graph g;
    auto outputs = forward_batch(g, inputs, idx, false, dummy);
    for (std::size_t ti = 0; ti < tasks_.size(); ++ti) {
      const TaskSpec& task = tasks_[ti];
      const Tensor& y = g.value(outputs[ti].second);
      TaskOutput& to = out.at(task.name);
      for (std::size_t r = 0; r < y.rows(); ++r) {
        if (task.kind == TaskSpec::Kind::Classification) {
          std::vector<double> dist(y.cols());
          std::size_t best = 0;
          for (std::size_t c = 0; c < y.cols(); ++c) {
            dist[c] = y.at(r, c);
            if (dist[c] > dist[best]) best = c;
          }
          to.pred_class.push_back(task.classes[best]);
          to.distribution.push_back(std::move(dist));
        } else {
          to.scores.push_back(y.at(r, 0));
        }
      }
    }
  }
  return out;
}

}  // namespace mte
