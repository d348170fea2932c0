#include "abstain/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "abstain/errors.hpp"
#include "abstain/format.hpp"

namespace abstain {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(
        start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

// "f<k>" -> k, or npos when the name is not a feature column.
std::size_t feature_index(const std::string& name) {
  if (name.size() < 2 || name[0] != 'f') return std::string::npos;
  std::size_t value = 0;
  const auto res = std::from_chars(name.data() + 1, name.data() + name.size(), value);
  if (res.ec != std::errc{} || res.ptr != name.data() + name.size()) {
    return std::string::npos;
  }
  return value;
}

double parse_feature(const std::string& cell, std::size_t line_no) {
  double value = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
    throw input_error("line " + std::to_string(line_no) +
                      ": cannot parse feature value '" + cell + "'");
  }
  if (!std::isfinite(value)) {
    throw input_error("line " + std::to_string(line_no) + ": non-finite feature value");
  }
  return value;
}

}  // namespace

Dataset read_dataset(std::istream& in) {
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;

  // Directives, then the header.
  std::string header;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const std::string directive = trim(t.substr(1));
      if (directive.rfind("labels:", 0) == 0) {
        for (auto& label : split_row(directive.substr(7))) {
          if (!label.empty()) ds.label_set.push_back(std::move(label));
        }
      }
      continue;
    }
    header = t;
    break;
  }
  if (header.empty()) {
    throw input_error("empty dataset: missing header");
  }

  const auto columns = split_row(header);
  std::size_t id_col = std::string::npos, pred_col = std::string::npos,
              truth_col = std::string::npos;
  std::vector<std::pair<std::size_t, std::size_t>> feat_cols;  // (column, index)
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto& name = columns[c];
    if (name == "id") {
      id_col = c;
    } else if (name == "predicted") {
      pred_col = c;
    } else if (name == "truth") {
      truth_col = c;
    } else if (const auto fi = feature_index(name); fi != std::string::npos) {
      feat_cols.emplace_back(c, fi);
    } else {
      throw input_error("unknown column '" + name + "'");
    }
  }
  if (id_col == std::string::npos || pred_col == std::string::npos) {
    throw input_error("header must contain 'id' and 'predicted' columns");
  }
  if (feat_cols.empty()) {
    throw input_error("header declares no feature columns (f0, f1, ...)");
  }
  // The indices must be exactly 0..d-1.
  std::vector<bool> present(feat_cols.size(), false);
  for (const auto& [col, fi] : feat_cols) {
    if (fi >= feat_cols.size() || present[fi]) {
      throw input_error("feature columns must be f0..f" +
                        std::to_string(feat_cols.size() - 1) + " with no gaps");
    }
    present[fi] = true;
  }

  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto cells = split_row(t);
    if (cells.size() != columns.size()) {
      throw input_error("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(columns.size()) + " cells, got " +
                        std::to_string(cells.size()));
    }
    LabeledSample s;
    s.id = cells[id_col];
    s.predicted = cells[pred_col];
    if (truth_col != std::string::npos && !cells[truth_col].empty()) {
      s.truth = cells[truth_col];
    }
    s.features.resize(static_cast<Eigen::Index>(feat_cols.size()));
    for (const auto& [col, fi] : feat_cols) {
      s.features(static_cast<Eigen::Index>(fi)) = parse_feature(cells[col], line_no);
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

Dataset read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw input_error("cannot open data file '" + path + "'");
  }
  return read_dataset(in);
}

void write_dataset(std::ostream& out, const std::vector<LabeledSample>& samples,
                   const std::vector<std::string>& label_set) {
  if (!label_set.empty()) {
    out << "# labels: ";
    for (std::size_t i = 0; i < label_set.size(); ++i) {
      out << (i ? "," : "") << label_set[i];
    }
    out << '\n';
  }
  const Eigen::Index d = samples.empty() ? 0 : samples.front().features.size();
  out << "id,predicted,truth";
  for (Eigen::Index i = 0; i < d; ++i) out << ",f" << i;
  out << '\n';
  for (const auto& s : samples) {
    out << s.id << ',' << s.predicted << ',' << (s.truth ? *s.truth : "");
    for (Eigen::Index i = 0; i < s.features.size(); ++i) {
      out << ',' << format_double(s.features(i));
    }
    out << '\n';
  }
}

void write_dataset_file(const std::string& path,
                        const std::vector<LabeledSample>& samples,
                        const std::vector<std::string>& label_set) {
  std::ofstream out(path);
  if (!out) {
    throw input_error("cannot write data file '" + path + "'");
  }
  write_dataset(out, samples, label_set);
  if (!out) {
    throw input_error("failed while writing '" + path + "'");
  }
}

}  // namespace abstain
