#include "mte/model.hpp"

#include <algorithm>

#include "mte/error.hpp"
#include "mte/features.hpp"

namespace mte {

std::string encoder_name(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::Cnn: return "cnn";
    case EncoderKind::Lstm: return "lstm";
    case EncoderKind::Gru: return "gru";
  }
  return "?";
}

EncoderKind encoder_by_name(const std::string& name) {
  if (name == "cnn") return EncoderKind::Cnn;
  if (name == "lstm") return EncoderKind::Lstm;
  if (name == "gru") return EncoderKind::Gru;
  throw ConfigError("unknown encoder '" + name + "' (expected cnn, lstm or gru)");
}

MultiTaskModel::MultiTaskModel(EncoderKind kind, std::vector<TaskSpec> tasks,
                               const EmbeddingTable* table, ModelDims dims, std::uint64_t seed)
    : kind_(kind), tasks_(std::move(tasks)), table_(table), dims_(std::move(dims)), seed_(seed) {
  if (tasks_.empty()) throw ConfigError("a multi-task model needs at least one task");
  if (table_ && table_->dim != dims_.embed_dim) {
    throw ConfigError("embedding table dim " + std::to_string(table_->dim) +
                      " does not match model embed_dim " + std::to_string(dims_.embed_dim));
  }

  Rng rng(seed_);
  if (kind_ == EncoderKind::Cnn) {
    const std::size_t w_max = *std::max_element(dims_.conv_widths.begin(),
                                                dims_.conv_widths.end());
    // conv1 needs max_len >= w_max; conv2 runs over the locally pooled
    // concatenation, so ceil((max_len - w_max + 1) / 2) >= w_max too.
    if (dims_.max_len < w_max || (dims_.max_len - w_max + 1 + 1) / 2 < w_max) {
      throw ConfigError("max_len " + std::to_string(dims_.max_len) +
                        " too short for the conv-pool-conv-pool stack (need >= " +
                        std::to_string(3 * w_max - 2) + ")");
    }
    for (std::size_t i = 0; i < dims_.conv_widths.size(); ++i) {
      const std::size_t w = dims_.conv_widths[i];
      conv1_.emplace_back("enc.conv1.w" + std::to_string(w), w, dims_.embed_dim,
                          dims_.conv_filters, rng.split(10 + i));
      conv2_.emplace_back("enc.conv2.w" + std::to_string(w), w,
                          dims_.conv_filters * dims_.conv_widths.size(), dims_.conv_filters,
                          rng.split(20 + i));
    }
  } else if (kind_ == EncoderKind::Lstm) {
    lstm1_.emplace("enc.lstm1", dims_.embed_dim, dims_.rnn_hidden, rng.split(10));
    lstm2_.emplace("enc.lstm2", dims_.rnn_hidden, dims_.rnn_hidden, rng.split(11));
  } else {
    gru1_.emplace("enc.gru1", dims_.embed_dim, dims_.rnn_hidden, rng.split(10));
    gru2_.emplace("enc.gru2", dims_.rnn_hidden, dims_.rnn_hidden, rng.split(11));
  }

  shared_ = Dense("shared", encoder_width(), dims_.shared_width, Activation::Relu, rng.split(30));
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    const TaskSpec& t = tasks_[i];
    TaskHead head;
    head.hidden = Dense("task." + t.name + ".hidden", dims_.shared_width, dims_.task_hidden,
                        Activation::Relu, rng.split(40 + 2 * i));
    const Activation out_act = t.kind == TaskSpec::Kind::Classification
                                   ? Activation::SoftmaxRows
                                   : Activation::Sigmoid;
    head.out = Dense("task." + t.name + ".out", dims_.task_hidden, t.output_width(), out_act,
                     rng.split(41 + 2 * i));
    heads_.push_back(std::move(head));
  }
}

std::size_t MultiTaskModel::encoder_width() const {
  return kind_ == EncoderKind::Cnn ? dims_.conv_filters * dims_.conv_widths.size()
                                   : dims_.rnn_hidden;
}

void MultiTaskModel::set_table(const EmbeddingTable* table) {
  if (table && table->dim != dims_.embed_dim) {
    throw ConfigError("embedding table dim " + std::to_string(table->dim) +
                      " does not match model embed_dim " + std::to_string(dims_.embed_dim));
  }
  table_ = table;
}

NodeId MultiTaskModel::encode(Graph& g, const std::vector<std::vector<std::string>>& sequences) {
  if (!table_) throw ConfigError("model has no embedding table attached");
  const BatchEmbedding batch = embed_batch(sequences, *table_, dims_.max_len);
  const std::size_t B = batch.batch, L = batch.steps;
  NodeId x = g.constant(batch.stacked);

  if (kind_ == EncoderKind::Cnn) {
    // conv-pool-conv-pool: local window-2 stride-2 pool after the first conv,
    // global max after the second. The per-width pooled sequences are cut to
    // their common length so the channel concatenation lines up.
    std::vector<std::size_t> pooled_len;
    std::vector<NodeId> pooled;
    for (std::size_t i = 0; i < conv1_.size(); ++i) {
      const std::size_t positions = L - conv1_[i].width + 1;
      NodeId c = conv1_[i].forward(g, x, B, L);
      pooled.push_back(local_maxpool2(g, c, B, positions));
      pooled_len.push_back((positions + 1) / 2);
    }
    const std::size_t q = *std::min_element(pooled_len.begin(), pooled_len.end());
    for (std::size_t i = 0; i < pooled.size(); ++i) {
      if (pooled_len[i] == q) continue;
      std::vector<std::size_t> keep;
      keep.reserve(B * q);
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < q; ++t) keep.push_back(b * pooled_len[i] + t);
      pooled[i] = g.gather_rows(pooled[i], std::move(keep));
    }
    NodeId seq = g.concat_cols(pooled);
    std::vector<NodeId> features;
    for (std::size_t i = 0; i < conv2_.size(); ++i) {
      const std::size_t positions = q - conv2_[i].width + 1;
      NodeId c = conv2_[i].forward(g, seq, B, q);
      features.push_back(global_maxpool(g, c, B, positions));
    }
    return g.concat_cols(features);
  }

  std::vector<NodeId> steps;
  steps.reserve(L);
  for (std::size_t t = 0; t < L; ++t) {
    std::vector<std::size_t> rows;
    rows.reserve(B);
    for (std::size_t b = 0; b < B; ++b) rows.push_back(b * L + t);
    steps.push_back(g.gather_rows(x, std::move(rows)));
  }
  if (kind_ == EncoderKind::Lstm) {
    return lstm2_->forward(g, lstm1_->forward(g, steps)).back();
  }
  return gru2_->forward(g, gru1_->forward(g, steps)).back();
}

MultiTaskModel::BatchNodes MultiTaskModel::forward_batch(
    Graph& g, const std::vector<std::vector<std::string>>& sequences, bool training,
    Rng& dropout_rng) {
  BatchNodes out;
  NodeId enc = encode(g, sequences);
  out.rep = shared_.forward(g, enc);  // post-relu, pre-dropout: the exported representation
  NodeId shared_fed = g.dropout(out.rep, dims_.dropout_rate, training, dropout_rng);
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    NodeId h = heads_[i].hidden.forward(g, shared_fed);
    h = g.dropout(h, dims_.dropout_rate, training, dropout_rng);
    out.outputs.emplace_back(tasks_[i].name, heads_[i].out.forward(g, h));
  }
  return out;
}

std::vector<Param*> MultiTaskModel::params() {
  std::vector<Param*> out;
  for (Conv1d& c : conv1_) c.collect(out);
  for (Conv1d& c : conv2_) c.collect(out);
  if (lstm1_) lstm1_->collect(out);
  if (lstm2_) lstm2_->collect(out);
  if (gru1_) gru1_->collect(out);
  if (gru2_) gru2_->collect(out);
  shared_.collect(out);
  for (TaskHead& h : heads_) {
    h.hidden.collect(out);
    h.out.collect(out);
  }
  return out;
}

std::size_t MultiTaskModel::parameter_count() {
  std::size_t n = 0;
  for (Param* p : params()) n += p->value.numel();
  return n;
}

Tensor onehot_targets(const std::vector<Instance>& instances, const std::vector<std::size_t>& idx,
                      const TaskSpec& task) {
  Tensor gold({idx.size(), task.classes.size()});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const Instance& inst = instances[idx[r]];
    if (inst.label.empty()) {
      throw DataError("instance '" + inst.id + "' has no class label for task '" + task.name +
                      "'");
    }
    gold.at(r, task.class_index(inst.label)) = 1.0;
  }
  return gold;
}

Tensor scalar_targets(const std::vector<Instance>& instances, const std::vector<std::size_t>& idx,
                      const TaskSpec& task) {
  Tensor gold({idx.size(), 1});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const Instance& inst = instances[idx[r]];
    auto it = inst.targets.find(task.name);
    if (it == inst.targets.end()) {
      throw DataError("instance '" + inst.id + "' has no target for task '" + task.name + "'");
    }
    gold.data[r] = it->second;
  }
  return gold;
}

void check_task_coverage(const std::vector<Instance>& instances,
                         const std::vector<TaskSpec>& tasks) {
  for (const Instance& inst : instances) {
    for (const TaskSpec& task : tasks) {
      if (task.kind == TaskSpec::Kind::Classification) {
        if (inst.label.empty()) {
          throw DataError("instance '" + inst.id + "' has no class label for task '" + task.name +
                          "'");
        }
        task.class_index(inst.label);
      } else if (!inst.targets.count(task.name)) {
        throw DataError("instance '" + inst.id + "' has no target for task '" + task.name + "'");
      }
    }
  }
}

namespace {

std::vector<std::vector<std::string>> tokenize_all(const std::vector<Instance>& instances) {
  std::vector<std::vector<std::string>> out;
  out.reserve(instances.size());
  for (const Instance& inst : instances) out.push_back(tokenize(inst.text));
  return out;
}

std::vector<std::vector<std::string>> pick(const std::vector<std::vector<std::string>>& all,
                                           const std::vector<std::size_t>& idx) {
  std::vector<std::vector<std::string>> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(all[i]);
  return out;
}

}  // namespace

TrainHistory MultiTaskModel::train(const std::vector<Instance>& train_set,
                                   const std::vector<Instance>& val_set, const TrainConfig& cfg) {
  check_task_coverage(train_set, tasks_);
  check_task_coverage(val_set, tasks_);
  const auto train_tokens = tokenize_all(train_set);
  const auto val_tokens = tokenize_all(val_set);

  const BatchLossFn losses = [&](Graph& g, Subset subset, const std::vector<std::size_t>& idx,
                                 bool training, Rng& rng) {
    const auto& instances = subset == Subset::Train ? train_set : val_set;
    const auto& tokens = subset == Subset::Train ? train_tokens : val_tokens;
    BatchNodes nodes = forward_batch(g, pick(tokens, idx), training, rng);
    std::vector<std::pair<std::string, NodeId>> out;
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
      const TaskSpec& task = tasks_[i];
      const NodeId pred = nodes.outputs[i].second;
      NodeId loss_node;
      if (task.kind == TaskSpec::Kind::Classification) {
        loss_node = g.cross_entropy_loss(pred, g.constant(onehot_targets(instances, idx, task)));
      } else {
        loss_node = g.mse_loss(pred, g.constant(scalar_targets(instances, idx, task)));
      }
      out.emplace_back(task.name, loss_node);
    }
    return out;
  };

  return run_training(params(), losses, train_set.size(), val_set.size(), cfg);
}

Predictions MultiTaskModel::predict(const std::vector<Instance>& instances) {
  Predictions out;
  for (const TaskSpec& t : tasks_) {
    TaskOutput to;
    to.spec = t;
    out.emplace(t.name, std::move(to));
  }
  Rng dummy(0);
  const std::size_t chunk = 64;
  for (std::size_t start = 0; start < instances.size(); start += chunk) {
    const std::size_t end = std::min(instances.size(), start + chunk);
    std::vector<std::vector<std::string>> seqs;
    seqs.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) seqs.push_back(tokenize(instances[i].text));
    Graph g;
    BatchNodes nodes = forward_batch(g, seqs, false, dummy);
    for (std::size_t ti = 0; ti < tasks_.size(); ++ti) {
      const TaskSpec& task = tasks_[ti];
      const Tensor& y = g.value(nodes.outputs[ti].second);
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

std::vector<RepresentationRecord> MultiTaskModel::extract_representation(
    const std::vector<Instance>& instances) {
  std::vector<RepresentationRecord> out;
  out.reserve(instances.size());
  Rng dummy(0);
  const std::size_t chunk = 64;
  for (std::size_t start = 0; start < instances.size(); start += chunk) {
    const std::size_t end = std::min(instances.size(), start + chunk);
    std::vector<std::vector<std::string>> seqs;
    seqs.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) seqs.push_back(tokenize(instances[i].text));
    Graph g;
    BatchNodes nodes = forward_batch(g, seqs, false, dummy);
    const Tensor& rep = g.value(nodes.rep);
    for (std::size_t r = 0; r < rep.rows(); ++r) {
      RepresentationRecord rec;
      rec.id = instances[start + r].id;
      rec.vec.assign(&rep.data[r * rep.cols()], &rep.data[(r + 1) * rep.cols()]);
      out.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace mte
