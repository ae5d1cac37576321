#include "mte/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mte/error.hpp"
#include "mte/tsvio.hpp"

namespace mte {

double accuracy(const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
  if (gold.size() != pred.size()) {
    throw MetricError("accuracy: gold and prediction lengths differ");
  }
  if (gold.empty()) throw MetricError("accuracy undefined on empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hits += gold[i] == pred[i];
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

namespace {

bool is_constant(std::span<const double> v) {
  for (double x : v) {
    if (x != v[0]) return false;
  }
  return true;
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw MetricError("pearson: lengths differ");
  if (x.size() < 2) throw MetricError("pearson undefined for fewer than 2 points");
  if (is_constant(x) || is_constant(y)) {
    throw MetricError("pearson undefined for a constant input vector");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return sxy / std::sqrt(sxx * syy);
}

DependentPearson dependent_pearson(const std::vector<std::string>& gold_classes,
                                   const std::vector<std::string>& pred_classes,
                                   std::span<const double> gold_scores,
                                   std::span<const double> pred_scores) {
  if (gold_classes.size() != pred_classes.size() || gold_classes.size() != gold_scores.size() ||
      gold_classes.size() != pred_scores.size()) {
    throw MetricError("dependent_pearson: input sequences are not aligned");
  }
  std::vector<double> g, p;
  for (std::size_t i = 0; i < gold_classes.size(); ++i) {
    if (gold_classes[i] == pred_classes[i]) {
      g.push_back(gold_scores[i]);
      p.push_back(pred_scores[i]);
    }
  }
  if (g.size() < 2) {
    throw MetricError("dependent evaluation undefined: only " + std::to_string(g.size()) +
                      " correctly classified instances");
  }
  return DependentPearson{pearson(g, p), g.size()};
}

std::size_t ConfusionMatrix::row_sum(std::size_t gold) const {
  std::size_t s = 0;
  for (std::size_t p = 0; p < k(); ++p) s += at(gold, p);
  return s;
}

std::size_t ConfusionMatrix::col_sum(std::size_t pred) const {
  std::size_t s = 0;
  for (std::size_t g = 0; g < k(); ++g) s += at(g, pred);
  return s;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t s = 0;
  for (std::size_t c : counts) s += c;
  return s;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t s = 0;
  for (std::size_t i = 0; i < k(); ++i) s += at(i, i);
  return s;
}

ConfusionMatrix confusion(const std::vector<std::string>& gold,
                          const std::vector<std::string>& pred,
                          const std::vector<std::string>& classes) {
  if (gold.size() != pred.size()) {
    throw MetricError("confusion: gold and prediction lengths differ");
  }
  ConfusionMatrix m;
  m.classes = classes;
  m.counts.assign(classes.size() * classes.size(), 0);
  auto index_of = [&](const std::string& label) {
    auto it = std::find(classes.begin(), classes.end(), label);
    if (it == classes.end()) throw DataError("label '" + label + "' not in class list");
    return static_cast<std::size_t>(it - classes.begin());
  };
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++m.at(index_of(gold[i]), index_of(pred[i]));
  }
  return m;
}

namespace {

// Continued fraction for the incomplete beta (Lentz's method).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                       b * std::log(1.0 - x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return bt * beta_cf(a, b, x) / a;
  }
  return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw MetricError("paired t test: lengths differ");
  const std::size_t n = a.size();
  if (n < 2) throw MetricError("paired t test needs at least 2 pairs");

  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(n);

  if (is_constant(d)) {
    // Degenerate convention: identical samples are indistinguishable (p=1);
    // a constant nonzero shift is maximally distinguishable (p -> 0).
    if (d[0] == 0.0) return TTestResult{0.0, 1.0};
    return TTestResult{d[0] > 0.0 ? std::numeric_limits<double>::infinity()
                                  : -std::numeric_limits<double>::infinity(),
                       0.0};
  }

  double var = 0.0;
  for (double v : d) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n - 1);
  const double t = mean / std::sqrt(var / static_cast<double>(n));
  const double dof = static_cast<double>(n - 1);
  const double p = incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t));
  return TTestResult{t, p};
}

std::pair<std::vector<double>, std::vector<double>> simulate_score_samples(double mean_a,
                                                                           double mean_b,
                                                                           double sigma,
                                                                           std::size_t n,
                                                                           Rng& rng) {
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = rng.normal(mean_a, sigma);
  for (std::size_t i = 0; i < n; ++i) b[i] = rng.normal(mean_b, sigma);
  return {std::move(a), std::move(b)};
}

void EvalReport::add(const std::string& task, const std::string& metric, double value,
                     std::size_t n) {
  entries.push_back(MetricEntry{task, metric, value, n, ""});
}

void EvalReport::add_error(const std::string& task, const std::string& metric,
                           const std::string& why) {
  entries.push_back(MetricEntry{task, metric, 0.0, 0, why});
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os << "dependent_evaluation=" << (dependent_mode ? "true" : "false") << '\n';
  for (const MetricEntry& e : entries) {
    if (!e.error.empty()) {
      os << e.task << '.' << e.metric << "=undefined (" << e.error << ")\n";
    } else {
      os << e.task << '.' << e.metric << '=' << format_double(e.value) << '\n';
      if (e.n > 0) os << e.task << '.' << e.metric << ".n=" << e.n << '\n';
    }
  }
  return os.str();
}

std::string EvalReport::to_tsv() const {
  std::ostringstream os;
  os << "task\tmetric\tvalue\tn\n";
  for (const MetricEntry& e : entries) {
    os << e.task << '\t' << e.metric << '\t'
       << (e.error.empty() ? format_double(e.value) : "undefined:" + e.error) << '\t' << e.n
       << '\n';
  }
  return os.str();
}

}  // namespace mte
