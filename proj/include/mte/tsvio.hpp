#ifndef MTE_TSVIO_HPP_
#define MTE_TSVIO_HPP_

#include <map>
#include <string>
#include <vector>

#include "mte/types.hpp"

namespace mte {

// Canonical float formatting (%.17g): reruns with the same seed reproduce
// output files byte for byte.
std::string format_double(double v);

// Representation dump: one `id<TAB>v1..vN` row per instance.
void write_representations(const std::string& path,
                           const std::vector<RepresentationRecord>& records);
std::map<std::string, std::vector<double>> read_representations(const std::string& path);

// Per-epoch history: epoch, per-task train loss, train joint, per-task val
// loss, val joint.
void write_history(const std::string& path, const TrainHistory& history,
                   const std::vector<std::string>& task_names);

// Predictions: `id<TAB>task<TAB>value` (class name or scalar).
struct PredictionRow {
  std::string id;
  std::string task;
  std::string value;
};
void write_predictions(const std::string& path, const std::vector<PredictionRow>& rows);
std::vector<PredictionRow> read_predictions(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace mte

#endif  // MTE_TSVIO_HPP_
