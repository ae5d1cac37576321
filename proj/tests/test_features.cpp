#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "mte/features.hpp"
#include "mte/gradcheck.hpp"
#include "mte/rng.hpp"

using namespace mte;

namespace {

LexiconSet fixture_lexicons() { return LexiconSet::load(std::string(MTE_FIXTURES) + "/lexicons/manifest.tsv"); }

Lexicon valence_lexicon(std::map<std::string, double> scores) {
  Lexicon lex;
  lex.name = "v";
  lex.kind = LexiconKind::Valence;
  lex.scores = std::move(scores);
  return lex;
}

EmbeddingTable table_2d() {
  EmbeddingTable t;
  t.dim = 2;
  t.vocab = {{"one", 0}, {"two", 1}};
  t.matrix = Tensor({2, 2}, {1, 0, 0, 1});
  return t;
}

}  // namespace

TEST_CASE("tokenizer rules") {
  CHECK(tokenize("Happy Birthday!") == std::vector<std::string>{"happy", "birthday", "!"});
  CHECK(tokenize("#joy :)") == std::vector<std::string>{"#joy", ":)"});
  CHECK(tokenize("see http://a.b") == std::vector<std::string>{"see", "<url>"});
  CHECK(tokenize("") == std::vector<std::string>{});
  CHECK(tokenize("wow!!!") == std::vector<std::string>{"wow", "!", "!", "!"});
  CHECK(tokenize("@Sam, hi.") == std::vector<std::string>{"@sam", ",", "hi", "."});
  CHECK(tokenize_cased("SO Happy") == std::vector<std::string>{"SO", "Happy"});
}

TEST_CASE("tf-idf idf formula on tiny corpora") {
  const auto v1 = TfIdfVectorizer::fit({"one two"}, TfIdfVectorizer::Mode::WordNgrams);
  // single document: every n-gram has df == N == 1 -> idf = ln(2/2)+1 = 1
  CHECK(v1.idf_of("one") == doctest::Approx(1.0));
  CHECK(v1.idf_of("two") == doctest::Approx(1.0));

  const auto v2 = TfIdfVectorizer::fit({"shared alone", "shared other"},
                                       TfIdfVectorizer::Mode::WordNgrams);
  CHECK(v2.idf_of("shared") == doctest::Approx(1.0));                   // ln(3/3)+1
  CHECK(v2.idf_of("alone") == doctest::Approx(std::log(1.5) + 1.0));    // ln(3/2)+1
  CHECK((std::log(1.5) + 1.0) == doctest::Approx(1.405).epsilon(1e-3));
}

TEST_CASE("transform of unseen content is the zero vector") {
  const auto v = TfIdfVectorizer::fit({"aaa bbb"}, TfIdfVectorizer::Mode::WordNgrams);
  CHECK(v.transform("zzz yyy xxx").empty());
}

TEST_CASE("tf-idf matches a brute-force oracle on small corpora") {
  Rng rng(2024);
  std::vector<std::string> words = {"red", "blue", "green", "gold", "iron", "wood"};
  for (int round = 0; round < 5; ++round) {
    std::vector<std::string> corpus;
    const std::size_t n_docs = 2 + rng.index(19);  // up to 20 docs
    for (std::size_t d = 0; d < n_docs; ++d) {
      std::string doc;
      const std::size_t len = 1 + rng.index(8);
      for (std::size_t k = 0; k < len; ++k) {
        if (k) doc += ' ';
        doc += words[rng.index(words.size())];
      }
      corpus.push_back(doc);
    }

    for (const auto mode :
         {TfIdfVectorizer::Mode::WordNgrams, TfIdfVectorizer::Mode::CharNgrams}) {
      const auto v = TfIdfVectorizer::fit(corpus, mode);

      // Independent oracle: explicit per-document n-gram listing, explicit
      // document-frequency table, idf formula and L2 normalization.
      auto grams_of = [&](const std::string& doc) {
        std::vector<std::string> grams;
        if (mode == TfIdfVectorizer::Mode::WordNgrams) {
          const auto toks = tokenize(doc);
          for (std::size_t n = 1; n <= 3; ++n) {
            for (std::size_t i = 0; i + n <= toks.size(); ++i) {
              std::string gram = toks[i];
              for (std::size_t j = 1; j < n; ++j) gram += std::string(1, '\x1f') + toks[i + j];
              grams.push_back(gram);
            }
          }
        } else {
          std::string s = doc;
          for (char& c : s) c = static_cast<char>(std::tolower(c));
          for (std::size_t n = 3; n <= 5; ++n) {
            for (std::size_t i = 0; i + n <= s.size(); ++i) grams.push_back(s.substr(i, n));
          }
        }
        return grams;
      };

      std::map<std::string, std::size_t> df;
      for (const std::string& doc : corpus) {
        std::set<std::string> seen;
        for (const auto& gram : grams_of(doc)) seen.insert(gram);
        for (const auto& gram : seen) ++df[gram];
      }

      for (const std::string& doc : corpus) {
        std::map<std::string, double> tf;
        for (const auto& gram : grams_of(doc)) tf[gram] += 1.0;
        std::map<std::string, double> expected;
        double norm_sq = 0.0;
        for (const auto& [gram, count] : tf) {
          const double idf =
              std::log((1.0 + corpus.size()) / (1.0 + static_cast<double>(df.at(gram)))) + 1.0;
          expected[gram] = count * idf;
          norm_sq += expected[gram] * expected[gram];
        }
        const auto sparse = v.transform(doc);
        REQUIRE(sparse.size() == expected.size());
        std::map<std::size_t, double> by_col;
        for (const auto& [gram, w] : expected) {
          by_col[v.vocabulary().at(gram)] = w / std::sqrt(norm_sq);
        }
        for (const auto& [col, w] : sparse) {
          CHECK(std::fabs(w - by_col.at(col)) < 1e-10);
        }
      }
    }
  }
}

TEST_CASE("vocabulary cap keeps the highest document frequencies") {
  const auto v = TfIdfVectorizer::fit({"a b c", "a b", "a d"},
                                      TfIdfVectorizer::Mode::WordNgrams, 2);
  CHECK(v.width() == 2);
  CHECK(v.vocabulary().count("a") == 1);  // df 3
  // df-2 tie between "b" and the bigram "a<sep>b"; the lexicographically
  // smaller n-gram wins ('\x1f' sorts before 'b')
  CHECK(v.vocabulary().count(std::string("a") + '\x1f' + "b") == 1);
  CHECK(v.vocabulary().count("b") == 0);
}

TEST_CASE("weighted embedding average") {
  const EmbeddingTable t = table_2d();
  SUBCASE("equal weights give the midpoint") {
    const auto v = TfIdfVectorizer::fit({"one two"}, TfIdfVectorizer::Mode::WordNgrams);
    const auto avg = weighted_embedding_average({"one", "two"}, t, v);
    CHECK(avg[0] == doctest::Approx(0.5));
    CHECK(avg[1] == doctest::Approx(0.5));
  }
  SUBCASE("a zero-weight token drops out") {
    // "two" is out of the fitted vocabulary -> idf weight 0
    const auto v = TfIdfVectorizer::fit({"one one"}, TfIdfVectorizer::Mode::WordNgrams);
    const auto avg = weighted_embedding_average({"one", "two"}, t, v);
    CHECK(avg == std::vector<double>{1.0, 0.0});
  }
  SUBCASE("weights 1:3 mix accordingly") {
    // craft idf weights via dfs: "one" in both docs (idf 1), "two" rarer
    const auto v = TfIdfVectorizer::fit({"one two", "one"}, TfIdfVectorizer::Mode::WordNgrams);
    const double w_one = v.idf_of("one"), w_two = v.idf_of("two");
    const auto avg = weighted_embedding_average({"one", "two"}, t, v);
    CHECK(avg[0] == doctest::Approx(w_one / (w_one + w_two)));
    CHECK(avg[1] == doctest::Approx(w_two / (w_one + w_two)));
  }
  SUBCASE("no embeddable tokens give zeros") {
    const auto v = TfIdfVectorizer::fit({"one"}, TfIdfVectorizer::Mode::WordNgrams);
    CHECK(weighted_embedding_average({"zzz"}, t, v) == std::vector<double>{0.0, 0.0});
  }
}

TEST_CASE("lexicon feature block") {
  Lexicon pol;
  pol.name = "p";
  pol.kind = LexiconKind::Polarity;
  pol.scores = {{"good", 1.0}, {"bad", -1.0}};
  Lexicon sco;
  sco.name = "s";
  sco.kind = LexiconKind::Score;
  sco.scores = {{"great", 2.5}, {"awful", -3.0}};
  const LexiconSet set = LexiconSet::from_lexicons({pol, sco});

  CHECK(set.feature_width() == 4);
  CHECK(set.features({"good", "good", "bad"}) == std::vector<double>{2, 1, 0, 0});
  CHECK(set.features({}) == std::vector<double>{0, 0, 0, 0});
  CHECK(set.features({"great", "awful", "awful"}) == std::vector<double>{0, 0, 2.5, -6.0});
}

TEST_CASE("emotion association block counts and sums per sorted emotion") {
  Lexicon emo;
  emo.name = "e";
  emo.kind = LexiconKind::EmotionAssociation;
  emo.emotion_assoc = {{"cry", {{"sadness", 1.0}}},
                       {"grin", {{"joy", 0.5}, {"trust", 0.25}}}};
  const LexiconSet set = LexiconSet::from_lexicons({emo});
  // emotions sorted: joy, sadness, trust -> (count, sum) each
  CHECK(set.feature_width() == 6);
  CHECK(set.features({"cry", "grin", "cry"}) ==
        std::vector<double>{1, 0.5, 2, 2.0, 1, 0.25});
}

TEST_CASE("vader scoring rules") {
  SUBCASE("no lexicon hits") {
    const LexiconSet set = LexiconSet::from_lexicons({});
    const VaderScore s = vader_score({"plain", "words"}, set);
    CHECK(s.compound == 0.0);
    CHECK(s.neu_ratio == 1.0);
  }
  SUBCASE("normalization at s = 15") {
    const LexiconSet set = LexiconSet::from_lexicons({valence_lexicon({{"wow", 15.0}})});
    const VaderScore s = vader_score({"wow"}, set);
    CHECK(s.compound == doctest::Approx(15.0 / std::sqrt(240.0)).epsilon(1e-6));
    CHECK(s.compound == doctest::Approx(0.9682).epsilon(1e-3));
    CHECK(s.pos_ratio == 1.0);
  }
  SUBCASE("negation flips and damps") {
    const LexiconSet set = LexiconSet::from_lexicons({valence_lexicon({{"good", 1.9}})});
    const VaderScore s = vader_score({"not", "good"}, set);
    const double expected = -1.406 / std::sqrt(1.406 * 1.406 + 15.0);
    CHECK(s.compound == doctest::Approx(expected).epsilon(1e-6));
    CHECK(s.compound == doctest::Approx(-0.341).epsilon(1e-2));
    CHECK(s.neg_ratio == doctest::Approx(0.5));
  }
  SUBCASE("all-caps amplification") {
    const LexiconSet set = LexiconSet::from_lexicons({valence_lexicon({{"good", 2.0}})});
    const double plain = vader_score({"good"}, set).compound;
    const double caps = vader_score({"GOOD"}, set).compound;
    CHECK(caps > plain);
    const double s_caps = 2.0 * 1.25;
    CHECK(caps == doctest::Approx(s_caps / std::sqrt(s_caps * s_caps + 15.0)));
  }
  SUBCASE("booster raises the following valence token") {
    Lexicon boost;
    boost.name = "b";
    boost.kind = LexiconKind::Booster;
    boost.scores = {{"very", 1.0}};
    const LexiconSet set =
        LexiconSet::from_lexicons({valence_lexicon({{"good", 2.0}}), boost});
    const double s = 2.0 + 0.293;
    CHECK(vader_score({"very", "good"}, set).compound ==
          doctest::Approx(s / std::sqrt(s * s + 15.0)));
  }
  SUBCASE("exclamations add toward the sign, capped at three") {
    const LexiconSet set = LexiconSet::from_lexicons({valence_lexicon({{"good", 2.0}})});
    const double s3 = 2.0 + 3 * 0.292;
    const VaderScore three = vader_score({"good", "!", "!", "!"}, set);
    CHECK(three.compound == doctest::Approx(s3 / std::sqrt(s3 * s3 + 15.0)));
    const VaderScore four = vader_score({"good", "!", "!", "!", "!"}, set);
    const double s4 = 2.0 + 3 * 0.292;  // capped
    CHECK(four.compound == doctest::Approx(s4 / std::sqrt(s4 * s4 + 15.0)));
    // zero total stays zero
    CHECK(vader_score({"meh", "!"}, set).compound == 0.0);
  }
}

TEST_CASE("vader compound is odd under lexicon sign flip") {
  Rng rng(404);
  std::vector<std::string> vocab = {"aa", "bb", "cc", "dd", "ee", "not", "very", "!"};
  for (int round = 0; round < 20; ++round) {
    std::map<std::string, double> scores;
    for (const char* w : {"aa", "bb", "cc", "dd"}) scores[w] = rng.uniform(-3.0, 3.0);
    Lexicon boost;
    boost.name = "b";
    boost.kind = LexiconKind::Booster;
    boost.scores = {{"very", 1.0}};

    std::map<std::string, double> flipped;
    for (const auto& [w, v] : scores) flipped[w] = -v;

    const LexiconSet pos = LexiconSet::from_lexicons({valence_lexicon(scores), boost});
    const LexiconSet neg = LexiconSet::from_lexicons({valence_lexicon(flipped), boost});

    std::vector<std::string> text;
    const std::size_t len = 1 + rng.index(10);
    for (std::size_t i = 0; i < len; ++i) text.push_back(vocab[rng.index(vocab.size())]);

    const VaderScore sp = vader_score(text, pos);
    const VaderScore sn = vader_score(text, neg);
    CHECK(sp.compound == doctest::Approx(-sn.compound).epsilon(1e-12));
    CHECK(sp.pos_ratio == doctest::Approx(sn.neg_ratio));
    CHECK(sp.neg_ratio == doctest::Approx(sn.pos_ratio));
  }
}

TEST_CASE("pipeline raw width matches its declared blocks and is pure") {
  const EmbeddingTable t = table_2d();
  const LexiconSet lex = fixture_lexicons();
  std::vector<Instance> corpus(3);
  corpus[0].text = "one two delighted";
  corpus[1].text = "two crying :)";
  corpus[2].text = "one furious !";
  const FeaturePipeline p = FeaturePipeline::fit(corpus, &t, lex);

  CHECK(p.raw_width() == p.word_tfidf().width() + p.char_tfidf().width() + t.dim +
                             p.lexicons().feature_width() + 4);
  const auto f1 = p.raw_features("one delighted :) !");
  const auto f2 = p.raw_features("one delighted :) !");
  CHECK(f1 == f2);
  CHECK(f1.size() == p.raw_width());
}

TEST_CASE("feature projector shape, zero input and gradient") {
  FeatureProjector proj(10, 77, 8, 5);
  const auto out = proj.project(std::vector<double>(10, 0.0));
  CHECK(out.size() == 5);
  for (double v : out) CHECK(v >= 0.0);
  // input-independent on zero raw vectors
  CHECK(proj.project(std::vector<double>(10, 0.0)) == out);

  CHECK_THROWS_AS(proj.project(std::vector<double>(11, 0.0)), DimensionError);

  // seed chosen to keep every relu preactivation clear of the kink
  Rng rng(1);
  Tensor x({2, 10});
  for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
  const double err = gradient_check(
      [&](Graph& g, const std::vector<NodeId>& in) { return g.sum(proj.forward(g, in[0])); },
      {&x, &proj.d1.w.value, &proj.d1.b.value, &proj.d2.w.value, &proj.d2.b.value});
  CHECK(err < 1e-4);
}
