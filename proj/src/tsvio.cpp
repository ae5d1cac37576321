#include "mte/tsvio.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mte/error.hpp"

namespace mte {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << content;
}

void write_representations(const std::string& path,
                           const std::vector<RepresentationRecord>& records) {
  std::ostringstream os;
  for (const RepresentationRecord& rec : records) {
    os << rec.id;
    for (double v : rec.vec) os << '\t' << format_double(v);
    os << '\n';
  }
  write_text_file(path, os.str());
}

std::map<std::string, std::vector<double>> read_representations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open representation file: " + path);
  std::map<std::string, std::vector<double>> out;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string id;
    if (!std::getline(ls, id, '\t')) {
      throw DataError("malformed representation line " + std::to_string(lineno) + " in " + path);
    }
    std::vector<double> vec;
    std::string field;
    while (std::getline(ls, field, '\t')) {
      try {
        vec.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw DataError("bad number on representation line " + std::to_string(lineno) + " in " +
                        path);
      }
    }
    if (vec.empty()) {
      throw DataError("representation line " + std::to_string(lineno) + " has no values: " + path);
    }
    if (width == 0) {
      width = vec.size();
    } else if (vec.size() != width) {
      throw DataError("representation width changed at line " + std::to_string(lineno) + " in " +
                      path);
    }
    out[id] = std::move(vec);
  }
  if (out.empty()) throw DataError("empty representation file: " + path);
  return out;
}

void write_history(const std::string& path, const TrainHistory& history,
                   const std::vector<std::string>& task_names) {
  std::ostringstream os;
  os << "epoch";
  for (const std::string& t : task_names) os << "\ttrain:" << t;
  os << "\ttrain:joint";
  for (const std::string& t : task_names) os << "\tval:" << t;
  os << "\tval:joint\n";
  for (std::size_t e = 0; e < history.size(); ++e) {
    const EpochStats& s = history[e];
    os << (e + 1);
    for (const std::string& t : task_names) {
      auto it = s.train_loss.find(t);
      os << '\t' << (it == s.train_loss.end() ? "nan" : format_double(it->second));
    }
    os << '\t' << format_double(s.train_joint);
    for (const std::string& t : task_names) {
      auto it = s.val_loss.find(t);
      os << '\t' << (it == s.val_loss.end() ? "nan" : format_double(it->second));
    }
    os << '\t' << format_double(s.val_joint) << '\n';
  }
  write_text_file(path, os.str());
}

void write_predictions(const std::string& path, const std::vector<PredictionRow>& rows) {
  std::ostringstream os;
  for (const PredictionRow& r : rows) {
    os << r.id << '\t' << r.task << '\t' << r.value << '\n';
  }
  write_text_file(path, os.str());
}

std::vector<PredictionRow> read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open predictions file: " + path);
  std::vector<PredictionRow> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    PredictionRow row;
    if (!std::getline(ls, row.id, '\t') || !std::getline(ls, row.task, '\t') ||
        !std::getline(ls, row.value, '\t')) {
      throw DataError("malformed prediction line " + std::to_string(lineno) + " in " + path);
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace mte
