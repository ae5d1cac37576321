#ifndef MTE_TYPES_HPP_
#define MTE_TYPES_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mte/error.hpp"

namespace mte {

// One text with its label set: optional class label plus named regression
// targets (in [0,1] once normalized).
struct Instance {
  std::string id;
  std::string text;
  std::string label;  // empty when the problem has no classification task
  std::map<std::string, double> targets;
};

struct TaskSpec {
  enum class Kind { Classification, Regression };

  std::string name;
  Kind kind = Kind::Regression;
  std::vector<std::string> classes;  // classification only, k >= 2

  static TaskSpec classification(std::string name, std::vector<std::string> classes) {
    if (classes.size() < 2) {
      throw ConfigError("classification task '" + name + "' needs at least 2 classes");
    }
    return TaskSpec{std::move(name), Kind::Classification, std::move(classes)};
  }
  static TaskSpec regression(std::string name) {
    return TaskSpec{std::move(name), Kind::Regression, {}};
  }

  std::size_t output_width() const {
    return kind == Kind::Classification ? classes.size() : 1;
  }
  std::size_t class_index(const std::string& label) const {
    for (std::size_t i = 0; i < classes.size(); ++i) {
      if (classes[i] == label) return i;
    }
    throw DataError("label '" + label + "' not in class list of task '" + name + "'");
  }
};

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  std::size_t patience = 5;  // early stopping on summed validation loss
  std::map<std::string, double> task_weights;  // absent task -> 1.0
  std::uint64_t seed = 0;

  double weight_of(const std::string& task) const {
    auto it = task_weights.find(task);
    return it == task_weights.end() ? 1.0 : it->second;
  }
  void validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    for (const auto& [task, w] : task_weights) {
      if (w <= 0.0) throw ConfigError("task weight for '" + task + "' must be > 0");
    }
  }
};

struct EpochStats {
  std::map<std::string, double> train_loss;
  std::map<std::string, double> val_loss;
  double train_joint = 0.0;
  double val_joint = 0.0;
};

using TrainHistory = std::vector<EpochStats>;

// instance id -> 128-d task-aware vector; the ensemble's input currency.
struct RepresentationRecord {
  std::string id;
  std::vector<double> vec;
};

}  // namespace mte

#endif  // MTE_TYPES_HPP_
