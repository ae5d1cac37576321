#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mte/adam.hpp"
#include "mte/error.hpp"
#include "mte/model.hpp"
#include "synthetic.hpp"

using namespace mte;
using testsupport::make_keyword_corpus;

namespace {

// Small dims keep the unit tests quick; the spec-sized defaults are covered
// by the width-invariant case and the acceptance run.
ModelDims small_dims(std::size_t embed_dim) {
  ModelDims d;
  d.embed_dim = embed_dim;
  d.max_len = 10;
  d.conv_filters = 8;
  d.rnn_hidden = 12;
  d.shared_width = 16;
  d.task_hidden = 10;
  return d;
}

}  // namespace

TEST_CASE("build_model head construction follows the task specs") {
  auto corpus = make_keyword_corpus(8, 6, 1);
  SUBCASE("classification + regression gives softmax(4) and sigmoid(1)") {
    std::vector<TaskSpec> tasks = {
        TaskSpec::classification("emotion", {"anger", "fear", "joy", "sadness"}),
        TaskSpec::regression("intensity")};
    MultiTaskModel m(EncoderKind::Lstm, tasks, &corpus.table, small_dims(6), 3);
    REQUIRE(m.heads().size() == 2);
    CHECK(m.heads()[0].out.out == 4);
    CHECK(m.heads()[0].out.act == Activation::SoftmaxRows);
    CHECK(m.heads()[1].out.out == 1);
    CHECK(m.heads()[1].out.act == Activation::Sigmoid);
  }
  SUBCASE("three regressions give three sigmoid heads") {
    std::vector<TaskSpec> tasks = {TaskSpec::regression("valence"),
                                   TaskSpec::regression("arousal"),
                                   TaskSpec::regression("dominance")};
    MultiTaskModel m(EncoderKind::Gru, tasks, &corpus.table, small_dims(6), 3);
    REQUIRE(m.heads().size() == 3);
    for (auto& h : m.heads()) {
      CHECK(h.out.out == 1);
      CHECK(h.out.act == Activation::Sigmoid);
    }
  }
  SUBCASE("a single task degenerates to the single-task model") {
    MultiTaskModel m(EncoderKind::Cnn, {TaskSpec::regression("intensity")}, &corpus.table,
                     small_dims(6), 3);
    CHECK(m.heads().size() == 1);
  }
  SUBCASE("zero tasks is a configuration error") {
    CHECK_THROWS_AS(
        MultiTaskModel(EncoderKind::Lstm, {}, &corpus.table, small_dims(6), 3), ConfigError);
  }
}

TEST_CASE("parameter count is a pure function of encoder and tasks") {
  auto corpus = make_keyword_corpus(4, 6, 2);
  MultiTaskModel a(EncoderKind::Cnn, corpus.tasks, &corpus.table, small_dims(6), 11);
  MultiTaskModel b(EncoderKind::Cnn, corpus.tasks, &corpus.table, small_dims(6), 99);
  CHECK(a.parameter_count() == b.parameter_count());
  MultiTaskModel c(EncoderKind::Gru, corpus.tasks, &corpus.table, small_dims(6), 11);
  CHECK(a.parameter_count() != c.parameter_count());
}

TEST_CASE("default architecture exports a 128-wide representation") {
  auto corpus = make_keyword_corpus(3, 16, 4);
  ModelDims dims;  // spec defaults except the embedding, which follows the table
  dims.embed_dim = 16;
  dims.max_len = 12;
  for (auto kind : {EncoderKind::Cnn, EncoderKind::Lstm, EncoderKind::Gru}) {
    MultiTaskModel m(kind, corpus.tasks, &corpus.table, dims, 5);
    const auto reps = m.extract_representation({corpus.instances[0]});
    REQUIRE(reps.size() == 1);
    CHECK(reps[0].vec.size() == 128);
    for (double v : reps[0].vec) CHECK(v >= 0.0);  // post-relu
  }
}

TEST_CASE("untrained predictions are near-uniform, normalized and in range") {
  auto corpus = make_keyword_corpus(12, 6, 6);
  MultiTaskModel m(EncoderKind::Lstm, corpus.tasks, &corpus.table, small_dims(6), 7);
  const Predictions preds = m.predict(corpus.instances);

  const TaskOutput& cls = preds.at("emotion");
  const double k = 2.0;
  for (const auto& dist : cls.distribution) {
    double sum = 0.0;
    for (double p : dist) {
      CHECK(p >= 1.0 / k - 0.1);
      CHECK(p <= 1.0 / k + 0.1);
      sum += p;
    }
    CHECK(std::fabs(sum - 1.0) < 1e-6);
  }
  for (double s : preds.at("intensity").scores) {
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
}

TEST_CASE("training history length and determinism") {
  auto corpus = make_keyword_corpus(40, 6, 8);
  std::vector<Instance> train(corpus.instances.begin(), corpus.instances.begin() + 32);
  std::vector<Instance> val(corpus.instances.begin() + 32, corpus.instances.end());

  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 8;
  cfg.seed = 17;

  MultiTaskModel m1(EncoderKind::Gru, corpus.tasks, &corpus.table, small_dims(6), 17);
  const TrainHistory h1 = m1.train(train, val, cfg);
  CHECK(h1.size() == 1);

  cfg.epochs = 3;
  MultiTaskModel m2(EncoderKind::Gru, corpus.tasks, &corpus.table, small_dims(6), 17);
  const TrainHistory h2 = m2.train(train, val, cfg);
  MultiTaskModel m3(EncoderKind::Gru, corpus.tasks, &corpus.table, small_dims(6), 17);
  const TrainHistory h3 = m3.train(train, val, cfg);
  REQUIRE(h2.size() == h3.size());
  for (std::size_t e = 0; e < h2.size(); ++e) {
    CHECK(h2[e].train_joint == h3[e].train_joint);  // bit-identical
    CHECK(h2[e].val_joint == h3[e].val_joint);
    CHECK(h2[e].train_loss == h3[e].train_loss);
  }
}

TEST_CASE("a missing target is rejected up front") {
  auto corpus = make_keyword_corpus(8, 6, 9);
  corpus.instances[3].targets.clear();
  MultiTaskModel m(EncoderKind::Gru, corpus.tasks, &corpus.table, small_dims(6), 1);
  TrainConfig cfg;
  cfg.epochs = 1;
  CHECK_THROWS_AS(m.train(corpus.instances, {}, cfg), DataError);
}

TEST_CASE("gradient step on one task leaves the other head untouched") {
  auto corpus = make_keyword_corpus(8, 6, 10);
  MultiTaskModel m(EncoderKind::Lstm, corpus.tasks, &corpus.table, small_dims(6), 23);

  const auto params = m.params();
  AdamOptimizer opt([&] {
    std::vector<Tensor*> ts;
    for (Param* p : params) ts.push_back(&p->value);
    return ts;
  }());

  // snapshot every parameter
  std::vector<std::vector<double>> before;
  for (Param* p : params) before.push_back(p->value.data);

  std::vector<std::vector<std::string>> seqs;
  for (const Instance& inst : corpus.instances) seqs.push_back(tokenize(inst.text));
  std::vector<std::size_t> idx = {0, 1, 2, 3};

  Graph g;
  Rng rng(0);
  std::vector<std::vector<std::string>> batch;
  for (std::size_t i : idx) batch.push_back(seqs[i]);
  auto nodes = m.forward_batch(g, batch, true, rng);
  // loss on task 0 (classification) alone
  NodeId loss =
      g.cross_entropy_loss(nodes.outputs[0].second,
                           g.constant(onehot_targets(corpus.instances, idx, corpus.tasks[0])));
  opt.zero_grads();
  g.backward(loss);
  opt.step();

  bool trunk_changed = false;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params[i]->name;
    if (name.rfind("task.intensity.", 0) == 0) {
      CHECK(params[i]->value.data == before[i]);  // bit-identical
    } else if (name.rfind("enc.", 0) == 0 || name.rfind("shared", 0) == 0) {
      trunk_changed = trunk_changed || params[i]->value.data != before[i];
    }
  }
  CHECK(trunk_changed);
}

TEST_CASE("representation extraction is order-invariant and repeatable") {
  auto corpus = make_keyword_corpus(10, 6, 11);
  MultiTaskModel m(EncoderKind::Cnn, corpus.tasks, &corpus.table, small_dims(6), 31);

  const auto fwd = m.extract_representation(corpus.instances);
  std::vector<Instance> reversed(corpus.instances.rbegin(), corpus.instances.rend());
  const auto rev = m.extract_representation(reversed);
  for (std::size_t i = 0; i < fwd.size(); ++i) {
    CHECK(fwd[i].id == rev[rev.size() - 1 - i].id);
    CHECK(fwd[i].vec == rev[rev.size() - 1 - i].vec);  // bit-identical
  }
  const auto again = m.extract_representation(corpus.instances);
  for (std::size_t i = 0; i < fwd.size(); ++i) CHECK(fwd[i].vec == again[i].vec);
}

TEST_CASE("single-task training is bit-reproducible as the baseline") {
  auto corpus = make_keyword_corpus(24, 6, 12);
  std::vector<Instance> train(corpus.instances.begin(), corpus.instances.begin() + 20);
  std::vector<Instance> val(corpus.instances.begin() + 20, corpus.instances.end());
  std::vector<TaskSpec> single = {TaskSpec::regression("intensity")};

  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  cfg.seed = 5;

  MultiTaskModel a(EncoderKind::Gru, single, &corpus.table, small_dims(6), 5);
  MultiTaskModel b(EncoderKind::Gru, single, &corpus.table, small_dims(6), 5);
  a.train(train, val, cfg);
  b.train(train, val, cfg);
  const auto pa = a.params();
  const auto pb = b.params();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i]->value.data == pb[i]->value.data);
  }
}

TEST_CASE("nan loss aborts with epoch and batch named") {
  auto corpus = make_keyword_corpus(8, 6, 13);
  MultiTaskModel m(EncoderKind::Gru, corpus.tasks, &corpus.table, small_dims(6), 5);
  // poison the classification head (past the relus) so the loss goes NaN
  for (Param* p : m.params()) {
    if (p->name == "task.emotion.out.w") {
      p->value.data[0] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  TrainConfig cfg;
  cfg.epochs = 1;
  try {
    m.train(corpus.instances, {}, cfg);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch 1") != std::string::npos);
    CHECK(msg.find("batch 1") != std::string::npos);
  }
}
