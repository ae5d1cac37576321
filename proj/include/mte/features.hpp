#ifndef MTE_FEATURES_HPP_
#define MTE_FEATURES_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mte/layers.hpp"
#include "mte/types.hpp"

namespace mte {

// Lowercases, splits on whitespace, splits terminal punctuation (.,!?;:)
// into single-character tokens, keeps #hashtags, @mentions and emoticons
// whole, and collapses URLs to "<url>".
std::vector<std::string> tokenize(const std::string& text);
// Same rules without case folding (the sentiment scorer needs ALL-CAPS info).
std::vector<std::string> tokenize_cased(const std::string& text);

class TfIdfVectorizer {
 public:
  enum class Mode { WordNgrams, CharNgrams };  // word 1-3 grams | char 3-5 grams

  // tf = raw count; idf = ln((1+N)/(1+df)) + 1; document vectors are
  // L2-normalized. Vocabulary is capped at max_features columns by document
  // frequency, ties broken lexicographically; columns are assigned in
  // lexicographic n-gram order.
  static TfIdfVectorizer fit(const std::vector<std::string>& corpus, Mode mode,
                             std::size_t max_features = 5000);

  // Sparse (column, weight) pairs sorted by column. A document with no known
  // n-grams yields an empty vector (norm 0, no normalization applied).
  std::vector<std::pair<std::size_t, double>> transform(const std::string& doc) const;

  std::size_t width() const { return vocab_.size(); }
  Mode mode() const { return mode_; }
  double idf_of(const std::string& ngram) const;
  std::uint64_t fingerprint() const { return fingerprint_; }
  const std::map<std::string, std::size_t>& vocabulary() const { return vocab_; }

 private:
  std::vector<std::string> ngrams_of(const std::string& doc) const;

  Mode mode_ = Mode::WordNgrams;
  std::map<std::string, std::size_t> vocab_;  // ngram -> column
  std::vector<double> idf_;                   // per column
  std::uint64_t fingerprint_ = 0;
};

// Sum of tf-idf-weighted in-vocabulary token embeddings over the sum of
// weights; all-zero weights fall back to the unweighted mean, and a document
// with no in-vocabulary tokens yields the zero vector.
std::vector<double> weighted_embedding_average(const std::vector<std::string>& tokens,
                                               const EmbeddingTable& table,
                                               const TfIdfVectorizer& word_vectorizer);

enum class LexiconKind { Polarity, Score, EmotionAssociation, Emoticon, Valence, Booster };

struct Lexicon {
  std::string name;
  LexiconKind kind = LexiconKind::Score;
  std::map<std::string, double> scores;  // polarity uses +-1
  std::map<std::string, std::map<std::string, double>> emotion_assoc;
  std::vector<std::string> emotions;  // sorted, emotion-association only

  std::size_t feature_width() const;
};

// Loaded from a manifest: one `name<TAB>kind<TAB>path` line per lexicon,
// paths relative to the manifest. Lexicon files are TSV; see README for the
// per-kind column layout. Feature columns follow manifest order.
class LexiconSet {
 public:
  static LexiconSet load(const std::string& manifest_path);
  static LexiconSet from_lexicons(std::vector<Lexicon> lexicons);

  // Per polarity lexicon: positive count, negative count. Per score lexicon:
  // sum of positive scores, sum of negative scores. Per emotion-association
  // lexicon and emotion (sorted): match count, score sum. Emoticon: positive
  // and negative score sums. Valence/booster lexicons feed the sentiment
  // scorer, not this block.
  std::vector<double> features(const std::vector<std::string>& tokens) const;
  std::size_t feature_width() const;

  const Lexicon* valence() const;
  const Lexicon* boosters() const;
  const std::vector<Lexicon>& lexicons() const { return lexicons_; }

 private:
  std::vector<Lexicon> lexicons_;
};

struct VaderScore {
  double compound = 0.0;  // in [-1, 1]
  double pos_ratio = 0.0;
  double neg_ratio = 0.0;
  double neu_ratio = 1.0;
};

// Simplified VADER over cased tokens: per-token valence from the lexicon,
// ALL-CAPS x1.25, preceding booster adds +-0.293 toward the token's sign,
// negation in the 3 preceding tokens flips by x(-0.74); '!' tokens (up to 3)
// add 0.292 each to |s| preserving sign; compound = s / sqrt(s^2 + 15).
// Ratios count tokens with positive/negative/zero effective valence.
VaderScore vader_score(const std::vector<std::string>& cased_tokens, const LexiconSet& lexicons);

// Fitted feature extractor: [word tf-idf | char tf-idf | weighted embedding
// | lexicon block | 4-d sentiment block].
class FeaturePipeline {
 public:
  static FeaturePipeline fit(const std::vector<Instance>& train_corpus,
                             const EmbeddingTable* table, LexiconSet lexicons,
                             std::size_t max_features = 5000);

  std::vector<double> raw_features(const std::string& text) const;
  std::size_t raw_width() const;

  const TfIdfVectorizer& word_tfidf() const { return word_; }
  const TfIdfVectorizer& char_tfidf() const { return char_; }
  const LexiconSet& lexicons() const { return lexicons_; }

 private:
  TfIdfVectorizer word_, char_;
  const EmbeddingTable* table_ = nullptr;
  LexiconSet lexicons_;
};

// Two relu denses (raw -> 256 -> 128); trained jointly from the ensemble
// loss when attached to an ensemble model.
struct FeatureProjector {
  Dense d1, d2;
  std::size_t raw_width = 0;

  FeatureProjector() = default;
  FeatureProjector(std::size_t raw_width, std::uint64_t seed, std::size_t hidden = 256,
                   std::size_t out = 128);

  NodeId forward(Graph& g, NodeId raw);
  // Eager convenience for dumps and tests.
  std::vector<double> project(const std::vector<double>& raw);
  void collect(std::vector<Param*>& into);
};

}  // namespace mte

#endif  // MTE_FEATURES_HPP_
