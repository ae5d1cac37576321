#ifndef MTE_TESTS_SYNTHETIC_HPP_
#define MTE_TESTS_SYNTHETIC_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "mte/ensemble.hpp"
#include "mte/layers.hpp"
#include "mte/types.hpp"

namespace mte::testsupport {

// Keyword-separable corpus: every sentence carries 1..5 keywords from
// exactly one of two families, so the class is the family and the intensity
// is the clamped keyword count / 5. A bag-of-keywords model is Bayes-optimal.
struct KeywordCorpus {
  std::vector<Instance> instances;
  EmbeddingTable table;
  std::vector<TaskSpec> tasks;  // classification(neg|pos) + intensity regression
};

KeywordCorpus make_keyword_corpus(std::size_t n, std::size_t embed_dim, std::uint64_t seed,
                                  std::size_t sentence_len = 10);

// Representation-level complementarity: three rep sources, each informative
// for a disjoint third of the instances (pure noise elsewhere), plus a noise
// feature block. Any single source caps out near 2/3 accuracy; all four
// together separate the classes completely.
struct ComplementaryReps {
  RepSource lstm, cnn, gru, feat;
  RepSource zero;  // all-zero block of the same width, for single-source baselines
  std::vector<Instance> train_gold, val_gold, test_gold;
  std::vector<TaskSpec> tasks;  // one binary classification task

  std::vector<std::string> ids_of(const std::vector<Instance>& part) const;
};

ComplementaryReps make_complementary_reps(std::size_t n, std::uint64_t seed,
                                          std::size_t rep_width = 128);

// Writes the corpus as an emoint-format TSV (families mapped onto the joy
// and sadness labels) plus a matching embedding text file; used by the CLI
// round trips.
void write_emoint_fixture(const KeywordCorpus& corpus, const std::string& data_path,
                          const std::string& embeddings_path);

}  // namespace mte::testsupport

#endif  // MTE_TESTS_SYNTHETIC_HPP_
