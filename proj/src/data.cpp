#include "mte/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "mte/rng.hpp"

namespace mte {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    return pos == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

DatasetSchema DatasetSchema::emoint() {
  DatasetSchema s;
  s.format = Format::EmoInt;
  s.score_lo = 0.0;
  s.score_hi = 1.0;
  s.target_names = {"intensity"};
  s.class_labels = {"anger", "fear", "joy", "sadness"};
  return s;
}

DatasetSchema DatasetSchema::vad() {
  DatasetSchema s;
  s.format = Format::Vad;
  s.score_lo = 1.0;
  s.score_hi = 5.0;
  s.target_names = {"valence", "arousal", "dominance"};
  return s;
}

DatasetSchema DatasetSchema::va() {
  DatasetSchema s;
  s.format = Format::Va;
  s.score_lo = 1.0;
  s.score_hi = 9.0;
  s.target_names = {"valence", "arousal"};
  return s;
}

DatasetSchema DatasetSchema::by_name(const std::string& name) {
  if (name == "emoint") return emoint();
  if (name == "vad") return vad();
  if (name == "va") return va();
  throw ConfigError("unknown dataset schema '" + name + "' (expected emoint, vad or va)");
}

LoadResult load_dataset(const std::string& path, const DatasetSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path);

  const std::size_t n_fields = 2 + schema.target_names.size() +
                               (schema.format == DatasetSchema::Format::EmoInt ? 1 : 0);
  LoadResult result;
  std::string line;
  std::size_t lineno = 0;
  std::size_t considered = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_tabs(line);

    auto malformed = [&]() {
      // Row 1 with unparseable scores is treated as an optional header.
      if (lineno == 1) return;
      ++considered;
      ++result.skipped;
    };

    if (fields.size() != n_fields) {
      malformed();
      continue;
    }

    Instance inst;
    inst.id = fields[0];
    inst.text = fields[1];
    std::size_t score_start = 2;
    if (schema.format == DatasetSchema::Format::EmoInt) {
      inst.label = fields[2];
      score_start = 3;
      if (std::find(schema.class_labels.begin(), schema.class_labels.end(), inst.label) ==
          schema.class_labels.end()) {
        malformed();
        continue;
      }
    }

    bool ok = true;
    for (std::size_t i = 0; i < schema.target_names.size(); ++i) {
      double v = 0.0;
      if (!parse_double(fields[score_start + i], v) || v < schema.score_lo ||
          v > schema.score_hi) {
        ok = false;
        break;
      }
      inst.targets[schema.target_names[i]] = v;
    }
    if (!ok) {
      malformed();
      continue;
    }
    ++considered;
    result.instances.push_back(std::move(inst));
  }

  if (result.instances.empty()) {
    throw DataError("no usable rows in dataset file: " + path);
  }
  if (result.skipped * 10 > considered) {
    throw DataError("more than 10% malformed rows in " + path + " (" +
                    std::to_string(result.skipped) + " of " + std::to_string(considered) +
                    "); wrong schema?");
  }
  return result;
}

void normalize_targets(std::vector<Instance>& instances, const DatasetSchema& schema) {
  const double lo = schema.score_lo, hi = schema.score_hi;
  if (lo == 0.0 && hi == 1.0) return;  // emoint passes through unchanged
  for (Instance& inst : instances) {
    for (auto& [name, v] : inst.targets) v = (v - lo) / (hi - lo);
  }
}

double denormalize_target(double value, const DatasetSchema& schema) {
  return schema.score_lo + value * (schema.score_hi - schema.score_lo);
}

namespace {

std::vector<Instance> sorted_shuffled(std::vector<Instance> instances, std::uint64_t seed) {
  std::sort(instances.begin(), instances.end(),
            [](const Instance& a, const Instance& b) { return a.id < b.id; });
  Rng rng(seed);
  rng.shuffle(instances);
  return instances;
}

}  // namespace

Split split(std::vector<Instance> instances, SplitRatios ratios, std::uint64_t seed) {
  if (ratios.train + ratios.val + ratios.test != 100) {
    throw ConfigError("split ratios must sum to 100");
  }
  const std::size_t n = instances.size();
  if (n < 3) throw DataError("cannot split " + std::to_string(n) + " instances three ways");

  std::vector<Instance> shuffled = sorted_shuffled(std::move(instances), seed);
  const std::size_t n_val = n * static_cast<std::size_t>(ratios.val) / 100;
  const std::size_t n_test = n * static_cast<std::size_t>(ratios.test) / 100;
  const std::size_t n_train = n - n_val - n_test;  // floor remainder goes to train

  Split out;
  out.train.assign(shuffled.begin(), shuffled.begin() + n_train);
  out.val.assign(shuffled.begin() + n_train, shuffled.begin() + n_train + n_val);
  out.test.assign(shuffled.begin() + n_train + n_val, shuffled.end());
  return out;
}

std::vector<Fold> kfold(std::vector<Instance> instances, std::size_t k, std::uint64_t seed) {
  const std::size_t n = instances.size();
  if (k < 2 || n < k) {
    throw DataError("cannot make " + std::to_string(k) + " folds from " + std::to_string(n) +
                    " instances");
  }
  std::vector<Instance> shuffled = sorted_shuffled(std::move(instances), seed);

  std::vector<Fold> folds(k);
  std::vector<std::size_t> sizes(k, n / k);
  for (std::size_t i = 0; i < n % k; ++i) ++sizes[i];
  std::size_t start = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t end = start + sizes[f];
    for (std::size_t i = 0; i < n; ++i) {
      if (i >= start && i < end) {
        folds[f].test.push_back(shuffled[i]);
      } else {
        folds[f].train.push_back(shuffled[i]);
      }
    }
    start = end;
  }
  return folds;
}

EmbeddingLoadResult load_embeddings(const std::string& path,
                                    const std::unordered_set<std::string>& filter,
                                    std::size_t expected_dim) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file: " + path);

  EmbeddingLoadResult out;
  std::size_t dim = expected_dim;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> tokens;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::istringstream ls(line);
    std::string token;
    ls >> token;
    std::vector<std::string> raw;
    std::string field;
    while (ls >> field) raw.push_back(field);

    if (dim == 0) {
      dim = raw.size();  // infer from first valid line
    }
    if (raw.size() != dim) {
      throw DataError("embedding line " + std::to_string(lineno) + " has " +
                      std::to_string(raw.size()) + " values, expected " + std::to_string(dim) +
                      ": " + path);
    }
    std::vector<double> values(dim);
    bool ok = true;
    for (std::size_t i = 0; i < dim; ++i) {
      if (!parse_double(raw[i], values[i])) {
        ok = false;
        break;
      }
    }
    if (!ok) {
      ++out.skipped;
      continue;
    }
    if (!filter.count(token)) continue;
    if (out.table.vocab.count(token)) continue;  // first occurrence wins
    out.table.vocab.emplace(token, tokens.size());
    tokens.push_back(token);
    rows.push_back(std::move(values));
  }
  if (dim == 0) throw DataError("embedding file has no valid lines: " + path);

  out.table.dim = dim;
  out.table.matrix = Tensor({rows.size(), dim});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy(rows[r].begin(), rows[r].end(), &out.table.matrix.data[r * dim]);
  }
  return out;
}

}  // namespace mte
