// mte: batch driver for the multi-task emotion/sentiment ensemble.
//
// Pipeline: train-base (one encoder at a time) -> extract (task-aware
// representations) -> train-ensemble (stacked MLP over the three encoder
// representations plus the hand-crafted feature block) -> evaluate.
//
// Exit codes: 0 success, 2 usage error, 3 data/format error, 4 numeric
// failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_set>

#include <CLI11.hpp>

#include "mte/checkpoint.hpp"
#include "mte/data.hpp"
#include "mte/ensemble.hpp"
#include "mte/evaluation.hpp"
#include "mte/features.hpp"
#include "mte/model.hpp"
#include "mte/tsvio.hpp"

namespace fs = std::filesystem;
using namespace mte;

namespace {

struct RunConfig {
  std::string problem = "coarse-emotion";
  std::string encoder = "lstm";
  std::string data;
  std::string embeddings;
  std::string lexicons;
  std::string out = ".";
  std::uint64_t seed = 0;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  std::size_t max_len = 50;
  bool compare_single = false;
  bool dependent = false;

  TrainConfig train_config() const {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = batch_size;
    cfg.seed = seed;
    return cfg;
  }
};

DatasetSchema schema_of(const std::string& problem) {
  if (problem == "coarse-emotion") return DatasetSchema::emoint();
  if (problem == "fine-emotion") return DatasetSchema::vad();
  if (problem == "fine-sentiment") return DatasetSchema::va();
  throw ConfigError("unknown problem '" + problem +
                    "' (expected coarse-emotion, fine-emotion or fine-sentiment)");
}

std::vector<TaskSpec> tasks_of(const std::string& problem) {
  if (problem == "coarse-emotion") {
    return {TaskSpec::classification("emotion", DatasetSchema::emoint().class_labels),
            TaskSpec::regression("intensity")};
  }
  if (problem == "fine-emotion") {
    return {TaskSpec::regression("valence"), TaskSpec::regression("arousal"),
            TaskSpec::regression("dominance")};
  }
  if (problem == "fine-sentiment") {
    return {TaskSpec::regression("valence"), TaskSpec::regression("arousal")};
  }
  throw ConfigError("unknown problem '" + problem + "'");
}

std::string with_data_root(const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  const char* root = std::getenv("MTE_DATA_ROOT");
  if (root && *root) return (fs::path(root) / path).string();
  return path;
}

// --data is either a single TSV (split 70/10/20 with the run seed) or a
// directory holding pre-split train.tsv / val.tsv / test.tsv.
Split load_splits(const RunConfig& rc) {
  const DatasetSchema schema = schema_of(rc.problem);
  const std::string data = with_data_root(rc.data);
  if (data.empty()) throw ConfigError("--data is required");
  Split s;
  if (fs::is_directory(data)) {
    s.train = load_dataset((fs::path(data) / "train.tsv").string(), schema).instances;
    s.val = load_dataset((fs::path(data) / "val.tsv").string(), schema).instances;
    s.test = load_dataset((fs::path(data) / "test.tsv").string(), schema).instances;
  } else {
    LoadResult loaded = load_dataset(data, schema);
    if (loaded.skipped > 0) {
      std::cerr << "warning: skipped " << loaded.skipped << " malformed rows in " << data << "\n";
    }
    s = split(std::move(loaded.instances), SplitRatios{}, rc.seed);
  }
  normalize_targets(s.train, schema);
  normalize_targets(s.val, schema);
  normalize_targets(s.test, schema);
  return s;
}

std::unordered_set<std::string> vocabulary_of(const Split& s) {
  std::unordered_set<std::string> vocab;
  for (const auto* part : {&s.train, &s.val, &s.test}) {
    for (const Instance& inst : *part) {
      for (const std::string& tok : tokenize(inst.text)) vocab.insert(tok);
    }
  }
  return vocab;
}

EmbeddingTable load_table(const RunConfig& rc, const Split& s) {
  const std::string path = with_data_root(rc.embeddings);
  if (path.empty()) throw ConfigError("--embeddings is required");
  EmbeddingLoadResult r = load_embeddings(path, vocabulary_of(s), 0);
  if (r.skipped > 0) {
    std::cerr << "warning: skipped " << r.skipped << " malformed embedding lines\n";
  }
  r.table.oov_policy = EmbeddingTable::OovPolicy::SeededUniform;
  r.table.oov_seed = rc.seed;
  return r.table;
}

std::vector<std::string> task_names(const std::vector<TaskSpec>& tasks) {
  std::vector<std::string> names;
  for (const TaskSpec& t : tasks) names.push_back(t.name);
  return names;
}

EvalReport evaluate_predictions(const std::vector<TaskSpec>& tasks,
                                const std::vector<Instance>& gold, const Predictions& preds,
                                bool dependent, const std::string& row_prefix = "") {
  EvalReport report;
  report.dependent_mode = dependent;

  const TaskSpec* cls_task = nullptr;
  for (const TaskSpec& t : tasks) {
    if (t.kind == TaskSpec::Kind::Classification) cls_task = &t;
  }

  for (const TaskSpec& t : tasks) {
    const std::string row = row_prefix + t.name;
    const TaskOutput& out = preds.at(t.name);
    if (t.kind == TaskSpec::Kind::Classification) {
      std::vector<std::string> gold_labels;
      for (const Instance& inst : gold) gold_labels.push_back(inst.label);
      report.add(row, "accuracy", accuracy(gold_labels, out.pred_class), gold.size());
    } else {
      std::vector<double> gold_scores;
      for (const Instance& inst : gold) gold_scores.push_back(inst.targets.at(t.name));
      try {
        report.add(row, "pearson", pearson(gold_scores, out.scores), gold.size());
      } catch (const MetricError& e) {
        report.add_error(row, "pearson", e.what());
      }
      if (dependent && cls_task) {
        std::vector<std::string> gold_labels;
        for (const Instance& inst : gold) gold_labels.push_back(inst.label);
        const TaskOutput& cls_out = preds.at(cls_task->name);
        try {
          const DependentPearson dp =
              dependent_pearson(gold_labels, cls_out.pred_class, gold_scores, out.scores);
          report.add(row, "pearson_dependent", dp.r, dp.n_used);
        } catch (const MetricError& e) {
          report.add_error(row, "pearson_dependent", e.what());
        }
      }
    }
  }
  return report;
}

std::string confusion_text(const ConfusionMatrix& m) {
  std::ostringstream os;
  os << "confusion (rows = gold, columns = predicted)\n";
  os << "class";
  for (const std::string& c : m.classes) os << '\t' << c;
  os << '\n';
  for (std::size_t g = 0; g < m.k(); ++g) {
    os << m.classes[g];
    for (std::size_t p = 0; p < m.k(); ++p) os << '\t' << m.at(g, p);
    os << '\n';
  }
  return os.str();
}

std::vector<PredictionRow> prediction_rows(const std::vector<std::string>& ids,
                                           const std::vector<TaskSpec>& tasks,
                                           const Predictions& preds) {
  std::vector<PredictionRow> rows;
  for (const TaskSpec& t : tasks) {
    const TaskOutput& out = preds.at(t.name);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      PredictionRow row;
      row.id = ids[i];
      row.task = t.name;
      row.value = t.kind == TaskSpec::Kind::Classification ? out.pred_class[i]
                                                           : format_double(out.scores[i]);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

int cmd_train_base(const RunConfig& rc) {
  const Split s = load_splits(rc);
  const EmbeddingTable table = load_table(rc, s);

  ModelDims dims;
  dims.embed_dim = table.dim;
  dims.max_len = rc.max_len;
  MultiTaskModel model(encoder_by_name(rc.encoder), tasks_of(rc.problem), &table, dims, rc.seed);
  std::cout << "training " << rc.encoder << " model: " << model.parameter_count()
            << " parameters, " << s.train.size() << " train / " << s.val.size() << " val / "
            << s.test.size() << " test instances\n";

  const TrainHistory history = model.train(s.train, s.val, rc.train_config());

  fs::create_directories(rc.out);
  const std::string ckpt = (fs::path(rc.out) / (rc.encoder + "_model.ckpt")).string();
  save_checkpoint(model, ckpt);
  write_history((fs::path(rc.out) / (rc.encoder + "_history.tsv")).string(), history,
                task_names(model.tasks()));
  std::cout << "wrote " << ckpt << " after " << history.size() << " epochs\n";
  return 0;
}

int cmd_extract(const RunConfig& rc, const std::string& checkpoint, const std::string& subset) {
  const Split s = load_splits(rc);
  const EmbeddingTable table = load_table(rc, s);
  MultiTaskModel model = load_multitask_checkpoint(with_data_root(checkpoint), &table);

  std::vector<Instance> instances;
  if (subset == "train" || subset == "all") {
    instances.insert(instances.end(), s.train.begin(), s.train.end());
  }
  if (subset == "val" || subset == "all") {
    instances.insert(instances.end(), s.val.begin(), s.val.end());
  }
  if (subset == "test" || subset == "all") {
    instances.insert(instances.end(), s.test.begin(), s.test.end());
  }
  if (instances.empty()) {
    throw ConfigError("--split must be one of train, val, test, all");
  }

  const std::vector<RepresentationRecord> reps = model.extract_representation(instances);
  fs::create_directories(fs::path(rc.out).parent_path().empty()
                             ? fs::path(".")
                             : fs::path(rc.out).parent_path());
  write_representations(rc.out, reps);
  std::cout << "wrote " << reps.size() << " representations to " << rc.out << "\n";
  return 0;
}

struct EnsembleSources {
  std::string lstm, cnn, gru, features;  // features empty -> fit pipeline + projector
};

RepSource rows_for(const std::vector<Instance>& instances, const FeaturePipeline& pipeline) {
  RepSource out;
  for (const Instance& inst : instances) out[inst.id] = pipeline.raw_features(inst.text);
  return out;
}

int cmd_train_ensemble(const RunConfig& rc, const EnsembleSources& src) {
  const Split s = load_splits(rc);
  const std::vector<TaskSpec> tasks = tasks_of(rc.problem);

  const RepSource lstm_rep = read_representations(with_data_root(src.lstm));
  const RepSource cnn_rep = read_representations(with_data_root(src.cnn));
  const RepSource gru_rep = read_representations(with_data_root(src.gru));

  auto ids_of = [](const std::vector<Instance>& part) {
    std::vector<std::string> ids;
    for (const Instance& inst : part) ids.push_back(inst.id);
    return ids;
  };

  RepSource feat_rep;
  std::optional<FeaturePipeline> pipeline;
  std::optional<EmbeddingTable> table;
  bool feat_is_raw = false;
  if (!src.features.empty()) {
    feat_rep = read_representations(with_data_root(src.features));
  } else {
    if (rc.lexicons.empty()) {
      throw ConfigError("train-ensemble needs --features or --lexicons (+ --embeddings)");
    }
    const Split table_scope = s;
    table = load_table(rc, table_scope);
    pipeline = FeaturePipeline::fit(s.train, &*table, LexiconSet::load(with_data_root(rc.lexicons)));
    feat_is_raw = true;
    for (const auto* part : {&s.train, &s.val, &s.test}) {
      for (const auto& [id, vec] : rows_for(*part, *pipeline)) feat_rep[id] = vec;
    }
  }

  const EnsembleInput train_in =
      assemble(ids_of(s.train), lstm_rep, cnn_rep, gru_rep, feat_rep, feat_is_raw);
  const EnsembleInput val_in =
      assemble(ids_of(s.val), lstm_rep, cnn_rep, gru_rep, feat_rep, feat_is_raw);
  const EnsembleInput test_in =
      assemble(ids_of(s.test), lstm_rep, cnn_rep, gru_rep, feat_rep, feat_is_raw);

  EnsembleDims dims;
  EnsembleModel model(tasks, dims, rc.seed, feat_is_raw ? pipeline->raw_width() : 0);
  std::cout << "training ensemble: " << model.parameter_count() << " parameters\n";
  const TrainHistory history = model.train(train_in, s.train, val_in, s.val, rc.train_config());

  fs::create_directories(rc.out);
  save_checkpoint(model, (fs::path(rc.out) / "ensemble_model.ckpt").string());
  write_history((fs::path(rc.out) / "ensemble_history.tsv").string(), history, task_names(tasks));

  const Predictions preds = model.predict(test_in);
  write_predictions((fs::path(rc.out) / "predictions.tsv").string(),
                    prediction_rows(test_in.ids, tasks, preds));

  EvalReport report = evaluate_predictions(tasks, s.test, preds, rc.dependent);

  if (rc.compare_single) {
    // Same architecture and budget, one task per model.
    for (const TaskSpec& t : tasks) {
      EnsembleModel single({t}, dims, rc.seed, feat_is_raw ? pipeline->raw_width() : 0);
      single.train(train_in, s.train, val_in, s.val, rc.train_config());
      const Predictions sp = single.predict(test_in);
      const EvalReport sr = evaluate_predictions({t}, s.test, sp, rc.dependent, "single:");
      report.entries.insert(report.entries.end(), sr.entries.begin(), sr.entries.end());
    }
  }

  std::ostringstream text;
  text << report.to_text();
  for (const TaskSpec& t : tasks) {
    if (t.kind == TaskSpec::Kind::Classification) {
      std::vector<std::string> gold_labels;
      for (const Instance& inst : s.test) gold_labels.push_back(inst.label);
      text << confusion_text(confusion(gold_labels, preds.at(t.name).pred_class, t.classes));
    }
  }
  write_text_file((fs::path(rc.out) / "report.txt").string(), text.str());
  write_text_file((fs::path(rc.out) / "report.tsv").string(), report.to_tsv());

  if (feat_is_raw) {
    // Interop dump of the jointly trained projection.
    std::vector<RepresentationRecord> projected;
    for (const auto* part : {&s.train, &s.val, &s.test}) {
      for (const Instance& inst : *part) {
        projected.push_back(
            RepresentationRecord{inst.id, model.projector()->project(feat_rep.at(inst.id))});
      }
    }
    write_representations((fs::path(rc.out) / "features_projected.tsv").string(), projected);
  }

  std::cout << text.str();
  return 0;
}

int cmd_evaluate(const RunConfig& rc, const std::string& pred_path, const std::string& gold_path) {
  const DatasetSchema schema = schema_of(rc.problem);
  const std::vector<TaskSpec> tasks = tasks_of(rc.problem);

  LoadResult gold_loaded = load_dataset(with_data_root(gold_path), schema);
  normalize_targets(gold_loaded.instances, schema);
  const std::vector<Instance>& gold = gold_loaded.instances;

  const std::vector<PredictionRow> rows = read_predictions(with_data_root(pred_path));
  std::map<std::pair<std::string, std::string>, std::string> by_key;
  for (const PredictionRow& r : rows) by_key[{r.task, r.id}] = r.value;

  Predictions preds;
  for (const TaskSpec& t : tasks) {
    TaskOutput out;
    out.spec = t;
    for (const Instance& inst : gold) {
      auto it = by_key.find({t.name, inst.id});
      if (it == by_key.end()) {
        throw DataError("no prediction for instance '" + inst.id + "', task '" + t.name + "'");
      }
      if (t.kind == TaskSpec::Kind::Classification) {
        out.pred_class.push_back(it->second);
      } else {
        try {
          out.scores.push_back(std::stod(it->second));
        } catch (const std::exception&) {
          throw DataError("bad score '" + it->second + "' for instance '" + inst.id + "'");
        }
      }
    }
    preds.emplace(t.name, std::move(out));
  }

  EvalReport report = evaluate_predictions(tasks, gold, preds, rc.dependent);
  std::ostringstream text;
  text << report.to_text();
  for (const TaskSpec& t : tasks) {
    if (t.kind == TaskSpec::Kind::Classification) {
      std::vector<std::string> gold_labels;
      for (const Instance& inst : gold) gold_labels.push_back(inst.label);
      text << confusion_text(confusion(gold_labels, preds.at(t.name).pred_class, t.classes));
    }
  }
  std::cout << text.str();
  if (!rc.out.empty() && rc.out != ".") {
    fs::create_directories(rc.out);
    write_text_file((fs::path(rc.out) / "report.txt").string(), text.str());
    write_text_file((fs::path(rc.out) / "report.tsv").string(), report.to_tsv());
  }
  return 0;
}

void add_common(CLI::App* cmd, RunConfig& rc, bool needs_model_flags) {
  cmd->add_option("--problem", rc.problem,
                  "coarse-emotion | fine-emotion | fine-sentiment")
      ->capture_default_str();
  cmd->add_option("--data", rc.data, "dataset TSV or pre-split directory");
  cmd->add_option("--out", rc.out, "output directory/file")->capture_default_str();
  cmd->add_option("--seed", rc.seed, "run seed")->capture_default_str();
  if (needs_model_flags) {
    cmd->add_option("--embeddings", rc.embeddings, "embedding text file");
    cmd->add_option("--lexicons", rc.lexicons, "lexicon manifest");
    cmd->add_option("--epochs", rc.epochs, "training epochs")->capture_default_str();
    cmd->add_option("--batch-size", rc.batch_size, "mini-batch size")->capture_default_str();
    cmd->add_option("--max-len", rc.max_len, "token window length")->capture_default_str();
  }
}

// Flat key=value config: every key mirrors a long flag of the subcommand;
// values fill only options that were not given on the command line.
void apply_config_file(CLI::App* cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + " is not key=value: " + path);
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (!opt) {
      throw ConfigError("config key '" + key + "' does not match any flag of '" +
                        cmd->get_name() + "'");
    }
    if (opt->count() > 0) continue;  // flags win
    opt->add_result(value);
    opt->run_callback();
  }
}

void add_config_flag(CLI::App* cmd, std::string& config_path) {
  cmd->add_option("--config", config_path, "flat key=value config file; flags win");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-task emotion/sentiment ensemble driver"};
  app.require_subcommand(1);

  RunConfig rc;
  std::string checkpoint, subset = "all", pred_path, gold_path, config_path;
  EnsembleSources sources;

  CLI::App* train_base = app.add_subcommand("train-base", "train one encoder's multi-task model");
  add_common(train_base, rc, true);
  train_base->add_option("--encoder", rc.encoder, "cnn | lstm | gru")->capture_default_str();
  add_config_flag(train_base, config_path);

  CLI::App* extract = app.add_subcommand("extract", "dump task-aware representations");
  add_common(extract, rc, true);
  extract->add_option("--checkpoint", checkpoint, "trained base-model checkpoint");
  extract->add_option("--split", subset, "train | val | test | all")->capture_default_str();
  add_config_flag(extract, config_path);

  CLI::App* train_ens = app.add_subcommand("train-ensemble", "train the stacked ensemble");
  add_common(train_ens, rc, true);
  train_ens->add_option("--reps-lstm", sources.lstm, "LSTM representation TSV");
  train_ens->add_option("--reps-cnn", sources.cnn, "CNN representation TSV");
  train_ens->add_option("--reps-gru", sources.gru, "GRU representation TSV");
  train_ens->add_option("--features", sources.features,
                        "pre-projected 128-d feature TSV (otherwise fitted from --lexicons)");
  train_ens->add_flag("--compare-single", rc.compare_single,
                      "also train per-task single-task ensembles");
  train_ens->add_flag("--dependent", rc.dependent, "dependent intensity evaluation");
  add_config_flag(train_ens, config_path);

  CLI::App* evaluate = app.add_subcommand("evaluate", "score predictions against gold data");
  add_common(evaluate, rc, false);
  evaluate->add_option("--pred", pred_path, "predictions TSV");
  evaluate->add_option("--gold", gold_path, "gold dataset TSV");
  evaluate->add_flag("--dependent", rc.dependent, "dependent intensity evaluation");
  add_config_flag(evaluate, config_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    for (CLI::App* cmd : {train_base, extract, train_ens, evaluate}) {
      if (cmd->parsed() && !config_path.empty()) apply_config_file(cmd, config_path);
    }
    // required inputs, checked after the config file had its chance
    if (extract->parsed() && checkpoint.empty()) {
      throw ConfigError("extract needs --checkpoint");
    }
    if (train_ens->parsed() &&
        (sources.lstm.empty() || sources.cnn.empty() || sources.gru.empty())) {
      throw ConfigError("train-ensemble needs --reps-lstm, --reps-cnn and --reps-gru");
    }
    if (evaluate->parsed() && (pred_path.empty() || gold_path.empty())) {
      throw ConfigError("evaluate needs --pred and --gold");
    }
    if (train_base->parsed()) return cmd_train_base(rc);
    if (extract->parsed()) return cmd_extract(rc, checkpoint, subset);
    if (train_ens->parsed()) return cmd_train_ensemble(rc, sources);
    if (evaluate->parsed()) return cmd_evaluate(rc, pred_path, gold_path);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
