#ifndef MTE_EVALUATION_HPP_
#define MTE_EVALUATION_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mte/rng.hpp"

namespace mte {

// Fraction of exact matches; MetricError on empty input.
double accuracy(const std::vector<std::string>& gold, const std::vector<std::string>& pred);

// Sample Pearson r; MetricError on length < 2, length mismatch, or a
// constant argument (never silently 0).
double pearson(std::span<const double> x, std::span<const double> y);

struct DependentPearson {
  double r = 0.0;
  std::size_t n_used = 0;
};

// Pearson over the instances whose class was predicted correctly.
DependentPearson dependent_pearson(const std::vector<std::string>& gold_classes,
                                   const std::vector<std::string>& pred_classes,
                                   std::span<const double> gold_scores,
                                   std::span<const double> pred_scores);

struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<std::size_t> counts;  // k*k, row = gold, column = predicted

  std::size_t k() const { return classes.size(); }
  std::size_t at(std::size_t gold, std::size_t pred) const { return counts[gold * k() + pred]; }
  std::size_t& at(std::size_t gold, std::size_t pred) { return counts[gold * k() + pred]; }
  std::size_t row_sum(std::size_t gold) const;
  std::size_t col_sum(std::size_t pred) const;
  std::size_t total() const;
  std::size_t trace() const;
};

ConfusionMatrix confusion(const std::vector<std::string>& gold,
                          const std::vector<std::string>& pred,
                          const std::vector<std::string>& classes);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;  // two-sided
};

// Paired t statistic on the differences; p from the Student t CDF via the
// regularized incomplete beta. Zero-variance differences degenerate to
// p = 1 when the mean difference is 0 and p -> 0 otherwise.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

// Samples two score vectors around the given means (normal, shared sigma);
// the sampling procedure paired with the t test utility.
std::pair<std::vector<double>, std::vector<double>> simulate_score_samples(double mean_a,
                                                                           double mean_b,
                                                                           double sigma,
                                                                           std::size_t n,
                                                                           Rng& rng);

// Regularized incomplete beta I_x(a, b); exposed for the t-distribution path.
double incomplete_beta(double a, double b, double x);

// Flat metric report; serializes to key=value text and to TSV.
struct MetricEntry {
  std::string task;
  std::string metric;
  double value = 0.0;
  std::size_t n = 0;
  std::string error;  // non-empty when the metric was undefined
};

struct EvalReport {
  std::vector<MetricEntry> entries;
  bool dependent_mode = false;

  void add(const std::string& task, const std::string& metric, double value, std::size_t n);
  void add_error(const std::string& task, const std::string& metric, const std::string& why);
  std::string to_text() const;
  std::string to_tsv() const;
};

}  // namespace mte

#endif  // MTE_EVALUATION_HPP_
