#include "mte/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "mte/error.hpp"
#include "mte/graph.hpp"

namespace mte {

namespace {

bool is_terminal_punct(char c) {
  return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':';
}

bool is_url(const std::string& tok) {
  return tok.rfind("http://", 0) == 0 || tok.rfind("https://", 0) == 0 ||
         tok.rfind("www.", 0) == 0;
}

bool is_emoticon(const std::string& tok) {
  if (tok.size() < 2) return false;
  if (tok == "<3") return true;
  static const std::string heads = ":;=8";
  static const std::string tails = ")(DPpdoO*|/\\-^[]3cC";
  if (heads.find(tok[0]) == std::string::npos) return false;
  for (std::size_t i = 1; i < tok.size(); ++i) {
    if (tails.find(tok[i]) == std::string::npos) return false;
  }
  return true;
}

std::string lowercased(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> tokenize_impl(const std::string& text, bool fold_case) {
  std::vector<std::string> tokens;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    if (is_url(tok)) {
      tokens.push_back("<url>");
      continue;
    }
    if (is_emoticon(tok)) {
      tokens.push_back(tok);
      continue;
    }
    const bool tagged = tok[0] == '#' || tok[0] == '@';
    // Peel terminal punctuation off the end, each mark its own token.
    std::size_t end = tok.size();
    while (end > 0 && is_terminal_punct(tok[end - 1])) --end;
    std::string stem = tok.substr(0, end);
    if (!stem.empty() && !tagged && is_emoticon(stem)) {
      // e.g. ":)." -> [":)", "."]
    } else if (!stem.empty() && fold_case) {
      stem = lowercased(stem);
    }
    if (!stem.empty()) tokens.push_back(stem);
    for (std::size_t i = end; i < tok.size(); ++i) tokens.push_back(std::string(1, tok[i]));
  }
  return tokens;
}

std::uint64_t fnv1a(const std::string& s, std::uint64_t h) {
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
  return h;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) { return tokenize_impl(text, true); }

std::vector<std::string> tokenize_cased(const std::string& text) {
  return tokenize_impl(text, false);
}

std::vector<std::string> TfIdfVectorizer::ngrams_of(const std::string& doc) const {
  std::vector<std::string> grams;
  if (mode_ == Mode::WordNgrams) {
    const std::vector<std::string> toks = tokenize(doc);
    for (std::size_t n = 1; n <= 3; ++n) {
      if (toks.size() < n) break;
      for (std::size_t i = 0; i + n <= toks.size(); ++i) {
        std::string g = toks[i];
        for (std::size_t j = 1; j < n; ++j) {
          g += '\x1f';
          g += toks[i + j];
        }
        grams.push_back(std::move(g));
      }
    }
  } else {
    const std::string s = lowercased(doc);
    for (std::size_t n = 3; n <= 5; ++n) {
      if (s.size() < n) break;
      for (std::size_t i = 0; i + n <= s.size(); ++i) grams.push_back(s.substr(i, n));
    }
  }
  return grams;
}

TfIdfVectorizer TfIdfVectorizer::fit(const std::vector<std::string>& corpus, Mode mode,
                                     std::size_t max_features) {
  if (corpus.empty()) throw DataError("tf-idf fit: empty corpus");

  TfIdfVectorizer v;
  v.mode_ = mode;
  std::uint64_t fp = 1469598103934665603ULL;
  std::map<std::string, std::size_t> df;
  for (const std::string& doc : corpus) {
    fp = fnv1a(doc, fp);
    std::set<std::string> seen;
    for (std::string& g : v.ngrams_of(doc)) seen.insert(std::move(g));
    for (const std::string& g : seen) ++df[g];
  }
  v.fingerprint_ = fp;

  if (df.size() > max_features) {
    // Keep the max_features highest-df n-grams; ties lexicographic.
    std::vector<std::pair<std::string, std::size_t>> ranked(df.begin(), df.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    ranked.resize(max_features);
    df.clear();
    for (auto& [g, c] : ranked) df.emplace(std::move(g), c);
  }

  const double n_docs = static_cast<double>(corpus.size());
  v.idf_.reserve(df.size());
  for (const auto& [gram, count] : df) {
    v.vocab_.emplace(gram, v.vocab_.size());
    v.idf_.push_back(std::log((1.0 + n_docs) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  return v;
}

std::vector<std::pair<std::size_t, double>> TfIdfVectorizer::transform(
    const std::string& doc) const {
  std::map<std::size_t, double> counts;
  for (const std::string& g : ngrams_of(doc)) {
    auto it = vocab_.find(g);
    if (it != vocab_.end()) counts[it->second] += 1.0;
  }
  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(counts.size());
  double norm_sq = 0.0;
  for (const auto& [col, tf] : counts) {
    const double w = tf * idf_[col];
    norm_sq += w * w;
    out.emplace_back(col, w);
  }
  if (norm_sq > 0.0) {
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (auto& [col, w] : out) w *= inv;
  }
  return out;
}

double TfIdfVectorizer::idf_of(const std::string& ngram) const {
  auto it = vocab_.find(ngram);
  return it == vocab_.end() ? 0.0 : idf_[it->second];
}

std::vector<double> weighted_embedding_average(const std::vector<std::string>& tokens,
                                               const EmbeddingTable& table,
                                               const TfIdfVectorizer& word_vectorizer) {
  std::map<std::string, double> counts;
  for (const std::string& t : tokens) {
    if (table.vocab.count(t)) counts[t] += 1.0;
  }
  std::vector<double> out(table.dim, 0.0);
  if (counts.empty()) return out;

  double weight_sum = 0.0;
  for (auto& [tok, tf] : counts) {
    const double w = tf * word_vectorizer.idf_of(tok);
    weight_sum += w;
    tf = w;  // reuse the map as token -> weight
  }
  if (weight_sum <= 0.0) {
    // No informative weights; fall back to the plain mean.
    for (auto& [tok, w] : counts) w = 1.0;
    weight_sum = static_cast<double>(counts.size());
  }
  for (const auto& [tok, w] : counts) {
    if (w == 0.0) continue;
    const std::vector<double> e = table.vector_of(tok);
    for (std::size_t i = 0; i < table.dim; ++i) out[i] += w * e[i];
  }
  for (double& v : out) v /= weight_sum;
  return out;
}

std::size_t Lexicon::feature_width() const {
  switch (kind) {
    case LexiconKind::Polarity:
    case LexiconKind::Score:
    case LexiconKind::Emoticon:
      return 2;
    case LexiconKind::EmotionAssociation:
      return 2 * emotions.size();
    case LexiconKind::Valence:
    case LexiconKind::Booster:
      return 0;  // consumed by the sentiment scorer
  }
  return 0;
}

namespace {

LexiconKind kind_by_name(const std::string& s) {
  if (s == "polarity") return LexiconKind::Polarity;
  if (s == "score") return LexiconKind::Score;
  if (s == "emotion-association") return LexiconKind::EmotionAssociation;
  if (s == "emoticon") return LexiconKind::Emoticon;
  if (s == "valence") return LexiconKind::Valence;
  if (s == "booster") return LexiconKind::Booster;
  throw DataError("unknown lexicon kind '" + s + "'");
}

Lexicon load_lexicon(const std::string& name, LexiconKind kind, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lexicon file: " + path);
  Lexicon lex;
  lex.name = name;
  lex.kind = kind;
  std::set<std::string> emotion_set;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        f.push_back(line.substr(start));
        break;
      }
      f.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    const std::string token = lowercased(f[0]);
    try {
      switch (kind) {
        case LexiconKind::Polarity: {
          if (f.size() != 2) throw std::invalid_argument("fields");
          double v;
          if (f[1] == "positive") {
            v = 1.0;
          } else if (f[1] == "negative") {
            v = -1.0;
          } else {
            v = std::stod(f[1]);
            if (v != 1.0 && v != -1.0) throw std::invalid_argument("polarity");
          }
          lex.scores[token] = v;
          break;
        }
        case LexiconKind::Score:
        case LexiconKind::Emoticon:
        case LexiconKind::Valence:
          if (f.size() != 2) throw std::invalid_argument("fields");
          lex.scores[token] = std::stod(f[1]);
          break;
        case LexiconKind::Booster:
          lex.scores[token] = 1.0;  // membership list; optional second column ignored
          break;
        case LexiconKind::EmotionAssociation: {
          if (f.size() != 3) throw std::invalid_argument("fields");
          const std::string emotion = lowercased(f[1]);
          lex.emotion_assoc[token][emotion] = std::stod(f[2]);
          emotion_set.insert(emotion);
          break;
        }
      }
    } catch (const std::exception&) {
      throw DataError("malformed lexicon line " + std::to_string(lineno) + " in " + path);
    }
  }
  lex.emotions.assign(emotion_set.begin(), emotion_set.end());
  return lex;
}

}  // namespace

LexiconSet LexiconSet::load(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open lexicon manifest: " + manifest_path);
  const std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();

  LexiconSet set;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string name, kind_s, rel;
    if (!(ls >> name >> kind_s >> rel)) {
      throw DataError("malformed manifest line " + std::to_string(lineno) + " in " +
                      manifest_path);
    }
    const std::filesystem::path p = base / rel;
    set.lexicons_.push_back(load_lexicon(name, kind_by_name(kind_s), p.string()));
  }
  return set;
}

LexiconSet LexiconSet::from_lexicons(std::vector<Lexicon> lexicons) {
  LexiconSet set;
  set.lexicons_ = std::move(lexicons);
  for (Lexicon& lex : set.lexicons_) {
    if (lex.kind == LexiconKind::EmotionAssociation && lex.emotions.empty()) {
      std::set<std::string> emotions;
      for (const auto& [tok, m] : lex.emotion_assoc) {
        for (const auto& [e, v] : m) emotions.insert(e);
      }
      lex.emotions.assign(emotions.begin(), emotions.end());
    }
  }
  return set;
}

std::size_t LexiconSet::feature_width() const {
  std::size_t w = 0;
  for (const Lexicon& lex : lexicons_) w += lex.feature_width();
  return w;
}

std::vector<double> LexiconSet::features(const std::vector<std::string>& tokens) const {
  std::vector<double> out;
  out.reserve(feature_width());
  for (const Lexicon& lex : lexicons_) {
    switch (lex.kind) {
      case LexiconKind::Polarity: {
        double pos = 0.0, neg = 0.0;
        for (const std::string& t : tokens) {
          auto it = lex.scores.find(t);
          if (it == lex.scores.end()) continue;
          (it->second > 0.0 ? pos : neg) += 1.0;
        }
        out.push_back(pos);
        out.push_back(neg);
        break;
      }
      case LexiconKind::Score:
      case LexiconKind::Emoticon: {
        double pos = 0.0, neg = 0.0;
        for (const std::string& t : tokens) {
          auto it = lex.scores.find(t);
          if (it == lex.scores.end()) continue;
          (it->second > 0.0 ? pos : neg) += it->second;
        }
        out.push_back(pos);
        out.push_back(neg);
        break;
      }
      case LexiconKind::EmotionAssociation: {
        for (const std::string& emotion : lex.emotions) {
          double count = 0.0, sum = 0.0;
          for (const std::string& t : tokens) {
            auto it = lex.emotion_assoc.find(t);
            if (it == lex.emotion_assoc.end()) continue;
            auto eit = it->second.find(emotion);
            if (eit == it->second.end()) continue;
            count += 1.0;
            sum += eit->second;
          }
          out.push_back(count);
          out.push_back(sum);
        }
        break;
      }
      case LexiconKind::Valence:
      case LexiconKind::Booster:
        break;
    }
  }
  return out;
}

const Lexicon* LexiconSet::valence() const {
  for (const Lexicon& lex : lexicons_) {
    if (lex.kind == LexiconKind::Valence) return &lex;
  }
  return nullptr;
}

const Lexicon* LexiconSet::boosters() const {
  for (const Lexicon& lex : lexicons_) {
    if (lex.kind == LexiconKind::Booster) return &lex;
  }
  return nullptr;
}

namespace {

bool is_negation(const std::string& folded) {
  static const std::set<std::string> kNegations = {
      "not",    "no",      "never",   "none",    "cannot",  "can't",    "don't",
      "won't",  "isn't",   "wasn't",  "aren't",  "didn't",  "doesn't",  "couldn't",
      "shouldn't", "wouldn't", "ain't", "n't",   "neither", "nor",      "nothing"};
  return kNegations.count(folded) > 0;
}

bool is_all_caps(const std::string& tok) {
  if (tok.size() < 2) return false;
  for (unsigned char c : tok) {
    if (!std::isalpha(c) || !std::isupper(c)) return false;
  }
  return true;
}

}  // namespace

VaderScore vader_score(const std::vector<std::string>& cased_tokens, const LexiconSet& lexicons) {
  VaderScore score;
  const std::size_t n = cased_tokens.size();
  if (n == 0) return score;

  const Lexicon* valence = lexicons.valence();
  const Lexicon* boosters = lexicons.boosters();

  std::vector<std::string> folded(n);
  for (std::size_t i = 0; i < n; ++i) folded[i] = lowercased(cased_tokens[i]);

  double s = 0.0;
  std::size_t pos = 0, neg = 0, neu = 0;
  std::size_t exclamations = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (cased_tokens[i] == "!") ++exclamations;
    double v = 0.0;
    if (valence) {
      auto it = valence->scores.find(folded[i]);
      if (it != valence->scores.end()) v = it->second;
    }
    if (v != 0.0) {
      if (is_all_caps(cased_tokens[i])) v *= 1.25;
      if (i > 0 && boosters && boosters->scores.count(folded[i - 1])) {
        v += (v > 0.0 ? 0.293 : -0.293);
      }
      for (std::size_t back = 1; back <= 3 && back <= i; ++back) {
        if (is_negation(folded[i - back])) {
          v *= -0.74;
          break;
        }
      }
    }
    s += v;
    if (v > 0.0) {
      ++pos;
    } else if (v < 0.0) {
      ++neg;
    } else {
      ++neu;
    }
  }

  const double ep = 0.292 * static_cast<double>(std::min<std::size_t>(exclamations, 3));
  if (s > 0.0) {
    s += ep;
  } else if (s < 0.0) {
    s -= ep;
  }
  score.compound = s / std::sqrt(s * s + 15.0);
  score.pos_ratio = static_cast<double>(pos) / static_cast<double>(n);
  score.neg_ratio = static_cast<double>(neg) / static_cast<double>(n);
  score.neu_ratio = static_cast<double>(neu) / static_cast<double>(n);
  return score;
}

FeaturePipeline FeaturePipeline::fit(const std::vector<Instance>& train_corpus,
                                     const EmbeddingTable* table, LexiconSet lexicons,
                                     std::size_t max_features) {
  std::vector<std::string> docs;
  docs.reserve(train_corpus.size());
  for (const Instance& inst : train_corpus) docs.push_back(inst.text);

  FeaturePipeline p;
  p.word_ = TfIdfVectorizer::fit(docs, TfIdfVectorizer::Mode::WordNgrams, max_features);
  p.char_ = TfIdfVectorizer::fit(docs, TfIdfVectorizer::Mode::CharNgrams, max_features);
  p.table_ = table;
  p.lexicons_ = std::move(lexicons);
  return p;
}

std::size_t FeaturePipeline::raw_width() const {
  return word_.width() + char_.width() + table_->dim + lexicons_.feature_width() + 4;
}

std::vector<double> FeaturePipeline::raw_features(const std::string& text) const {
  std::vector<double> out(raw_width(), 0.0);
  std::size_t off = 0;
  for (const auto& [col, w] : word_.transform(text)) out[off + col] = w;
  off += word_.width();
  for (const auto& [col, w] : char_.transform(text)) out[off + col] = w;
  off += char_.width();

  const std::vector<std::string> tokens = tokenize(text);
  const std::vector<double> emb = weighted_embedding_average(tokens, *table_, word_);
  std::copy(emb.begin(), emb.end(), out.begin() + off);
  off += table_->dim;

  const std::vector<double> lex = lexicons_.features(tokens);
  std::copy(lex.begin(), lex.end(), out.begin() + off);
  off += lexicons_.feature_width();

  const VaderScore v = vader_score(tokenize_cased(text), lexicons_);
  out[off + 0] = v.compound;
  out[off + 1] = v.pos_ratio;
  out[off + 2] = v.neg_ratio;
  out[off + 3] = v.neu_ratio;
  return out;
}

FeatureProjector::FeatureProjector(std::size_t raw_width_, std::uint64_t seed, std::size_t hidden,
                                   std::size_t out)
    : raw_width(raw_width_) {
  Rng rng(seed);
  d1 = Dense("projector.d1", raw_width_, hidden, Activation::Relu, rng.split(1));
  d2 = Dense("projector.d2", hidden, out, Activation::Relu, rng.split(2));
}

NodeId FeatureProjector::forward(Graph& g, NodeId raw) {
  if (g.value(raw).cols() != raw_width) {
    throw DimensionError("feature projector fitted for width " + std::to_string(raw_width) +
                         ", got " + std::to_string(g.value(raw).cols()));
  }
  return d2.forward(g, d1.forward(g, raw));
}

std::vector<double> FeatureProjector::project(const std::vector<double>& raw) {
  Graph g;
  NodeId out = forward(g, g.constant(Tensor({1, raw.size()}, raw)));
  return g.value(out).data;
}

void FeatureProjector::collect(std::vector<Param*>& into) {
  d1.collect(into);
  d2.collect(into);
}

}  // namespace mte
