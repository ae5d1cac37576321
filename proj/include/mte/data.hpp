#ifndef MTE_DATA_HPP_
#define MTE_DATA_HPP_

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "mte/layers.hpp"
#include "mte/types.hpp"

namespace mte {

// Canonical TSV schemas. emoint: id, text, emotion, intensity (0..1);
// vad: id, text, valence, arousal, dominance (1..5); va: id, text,
// valence, arousal (1..9).
struct DatasetSchema {
  enum class Format { EmoInt, Vad, Va };

  Format format = Format::EmoInt;
  double score_lo = 0.0;
  double score_hi = 1.0;
  std::vector<std::string> target_names;
  std::vector<std::string> class_labels;  // emoint only

  static DatasetSchema emoint();
  static DatasetSchema vad();
  static DatasetSchema va();
  static DatasetSchema by_name(const std::string& name);  // "emoint" | "vad" | "va"
};

struct LoadResult {
  std::vector<Instance> instances;
  std::size_t skipped = 0;  // malformed rows
};

// Malformed rows (wrong field count, unparseable or out-of-range score,
// unknown class label) are skipped and counted; more than 10% malformed or
// an empty file raises DataError. An optional header row is detected by its
// unparseable score fields.
LoadResult load_dataset(const std::string& path, const DatasetSchema& schema);

// x -> (x - lo) / (hi - lo) per target; emoint intensity is already 0..1.
void normalize_targets(std::vector<Instance>& instances, const DatasetSchema& schema);
double denormalize_target(double value, const DatasetSchema& schema);

struct SplitRatios {
  int train = 70, val = 10, test = 20;
};

struct Split {
  std::vector<Instance> train, val, test;
};

// Deterministic function of (ids, seed): instances are sorted by id before
// the seeded shuffle, so input order never matters. Sizes are floor(n*r)
// with the remainder going to train.
Split split(std::vector<Instance> instances, SplitRatios ratios, std::uint64_t seed);

struct Fold {
  std::vector<Instance> train, test;
};

// k near-equal folds (sizes differ by at most 1); every instance tests once.
std::vector<Fold> kfold(std::vector<Instance> instances, std::size_t k, std::uint64_t seed);

// GloVe text layout: token then `dim` space-separated decimals per line.
// Only tokens in `filter` are retained (empty filter keeps nothing). Lines
// with unparseable numbers are skipped and counted; a line whose field count
// disagrees with the established dimension is a format error. expected_dim=0
// infers the dimension from the first valid line; otherwise it is enforced.
struct EmbeddingLoadResult {
  EmbeddingTable table;
  std::size_t skipped = 0;
};

EmbeddingLoadResult load_embeddings(const std::string& path,
                                    const std::unordered_set<std::string>& filter,
                                    std::size_t expected_dim = 300);

}  // namespace mte

#endif  // MTE_DATA_HPP_
