#include "lsmgp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <sstream>

namespace lsmgp {

Matrix LabeledDataset::one_hot() const {
  Matrix Y = Matrix::Zero(n(), n_classes);
  for (long i = 0; i < n(); ++i) Y(i, y[i] - 1) = 1.0;
  return Y;
}

namespace {

struct SparseRow {
  double label = 0.0;
  std::vector<std::pair<int, double>> entries;
};

}  // namespace

LabeledDataset parse_libsvm(std::istream& in) {
  std::vector<SparseRow> rows;
  int max_index = 0;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;  // blank or comment-only line
    SparseRow row;
    char* end = nullptr;
    row.label = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
      throw ParseError("malformed label '" + tok + "'", line_no);
    int prev_index = 0;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == tok.size())
        throw ParseError("malformed feature token '" + tok + "'", line_no);
      const std::string idx_s = tok.substr(0, colon);
      const std::string val_s = tok.substr(colon + 1);
      long idx = std::strtol(idx_s.c_str(), &end, 10);
      if (end == idx_s.c_str() || *end != '\0' || idx < 1)
        throw ParseError("malformed feature index '" + idx_s + "'", line_no);
      if (idx <= prev_index)
        throw ParseError("feature indices must be strictly increasing", line_no);
      const double val = std::strtod(val_s.c_str(), &end);
      if (end == val_s.c_str() || *end != '\0')
        throw ParseError("malformed feature value '" + val_s + "'", line_no);
      prev_index = static_cast<int>(idx);
      max_index = std::max(max_index, static_cast<int>(idx));
      row.entries.emplace_back(static_cast<int>(idx), val);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("no data lines found", line_no >= 1 ? line_no : 1);

  // Remap labels to 1..C by sorted original value.
  std::map<double, int> remap;
  for (const auto& r : rows) remap.emplace(r.label, 0);
  int next = 1;
  std::vector<double> label_map;
  for (auto& [orig, mapped] : remap) {
    mapped = next++;
    label_map.push_back(orig);
  }

  LabeledDataset ds;
  ds.X = Matrix::Zero(static_cast<long>(rows.size()), max_index);
  ds.y.resize(rows.size());
  ds.n_classes = static_cast<int>(remap.size());
  ds.label_map = std::move(label_map);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ds.y[i] = remap.at(rows[i].label);
    for (const auto& [idx, val] : rows[i].entries) ds.X(static_cast<long>(i), idx - 1) = val;
  }
  return ds;
}

LabeledDataset load_libsvm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return parse_libsvm(in);
}

void write_libsvm(const LabeledDataset& ds, std::ostream& out) {
  char buf[64];
  const int D = ds.dim();
  // Keep the feature count parse-recoverable even if the last column is all
  // zeros: the first row then carries an explicit "D:0" entry.
  const bool last_col_empty = D > 0 && (ds.X.col(D - 1).array() == 0.0).all();
  for (long i = 0; i < ds.n(); ++i) {
    const double orig = ds.label_map.empty() ? static_cast<double>(ds.y[i])
                                             : ds.label_map[ds.y[i] - 1];
    std::snprintf(buf, sizeof(buf), "%.17g", orig);
    out << buf;
    for (int j = 0; j < D; ++j) {
      const double v = ds.X(i, j);
      if (v == 0.0 && !(i == 0 && j == D - 1 && last_col_empty)) continue;
      std::snprintf(buf, sizeof(buf), " %d:%.17g", j + 1, v);
      out << buf;
    }
    out << '\n';
  }
}

void write_libsvm_file(const LabeledDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  write_libsvm(ds, out);
}

LabeledDataset normalize(const LabeledDataset& ds) {
  NormalizationStats stats;
  stats.mean = ds.X.colwise().mean();
  Vector var = (ds.X.rowwise() - stats.mean.transpose()).array().square().colwise().mean();
  stats.std = var.array().sqrt();
  for (int j = 0; j < ds.dim(); ++j)
    if (stats.std[j] <= 0.0) stats.std[j] = 1.0;  // constant feature: center only
  LabeledDataset out = ds;
  out.X = apply_normalization(ds.X, stats);
  out.norm = std::move(stats);
  return out;
}

Matrix apply_normalization(const Matrix& X, const NormalizationStats& stats) {
  if (X.cols() != stats.mean.size()) throw DimensionError("normalization stats dim mismatch");
  return (X.rowwise() - stats.mean.transpose()).array().rowwise() /
         stats.std.transpose().array();
}

Matrix invert_normalization(const Matrix& X, const NormalizationStats& stats) {
  if (X.cols() != stats.mean.size()) throw DimensionError("normalization stats dim mismatch");
  return (X.array().rowwise() * stats.std.transpose().array()).matrix().rowwise() +
         stats.mean.transpose();
}

std::pair<LabeledDataset, LabeledDataset> train_test_split(const LabeledDataset& ds,
                                                           double test_fraction,
                                                           std::uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction >= 1.0)
    throw DimensionError("test_fraction must be in [0, 1)");
  Rng rng = Rng::substream(seed, "train-test-split");
  std::vector<long> train_idx, test_idx;
  for (int c = 1; c <= ds.n_classes; ++c) {
    std::vector<long> members;
    for (long i = 0; i < ds.n(); ++i)
      if (ds.y[i] == c) members.push_back(i);
    // Fisher-Yates shuffle, then round the per-class test count to nearest.
    for (std::size_t k = members.size(); k > 1; --k)
      std::swap(members[k - 1], members[rng.uniform_index(k)]);
    const auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(members.size())));
    for (std::size_t k = 0; k < members.size(); ++k)
      (k < n_test ? test_idx : train_idx).push_back(members[k]);
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());

  auto take = [&](const std::vector<long>& idx) {
    LabeledDataset part;
    part.X = Matrix(static_cast<long>(idx.size()), ds.dim());
    part.y.resize(idx.size());
    part.n_classes = ds.n_classes;
    part.label_map = ds.label_map;
    part.norm = ds.norm;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      part.X.row(static_cast<long>(k)) = ds.X.row(idx[k]);
      part.y[k] = ds.y[idx[k]];
    }
    return part;
  };
  return {take(train_idx), take(test_idx)};
}

Matrix toy_centers(int n_classes) {
  Matrix centers(n_classes, 2);
  for (int c = 1; c <= n_classes; ++c) {
    const double angle = 2.0 * M_PI * c / n_classes;
    centers(c - 1, 0) = std::cos(angle);
    centers(c - 1, 1) = std::sin(angle);
  }
  return centers;
}

LabeledDataset gen_toy(const ToySpec& spec) {
  if (spec.n_points < 1 || spec.n_classes < 2 || spec.sigma2 < 0.0)
    throw DimensionError("gen_toy: invalid spec");
  Rng rng = Rng::substream(spec.seed, "gen-toy");
  const Matrix centers = toy_centers(spec.n_classes);
  const double sd = std::sqrt(spec.sigma2);
  LabeledDataset ds;
  ds.X = Matrix(spec.n_points, 2);
  ds.y.resize(spec.n_points);
  ds.n_classes = spec.n_classes;
  for (int c = 1; c <= spec.n_classes; ++c) ds.label_map.push_back(c);
  for (int i = 0; i < spec.n_points; ++i) {
    const int c = i % spec.n_classes;  // balanced; remainder round-robin
    ds.y[i] = c + 1;
    ds.X(i, 0) = centers(c, 0) + sd * rng.normal();
    ds.X(i, 1) = centers(c, 1) + sd * rng.normal();
  }
  return ds;
}

}  // namespace lsmgp
