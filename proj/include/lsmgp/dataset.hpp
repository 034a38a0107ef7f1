#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lsmgp/common.hpp"
#include "lsmgp/rng.hpp"

namespace lsmgp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Per-feature standardization statistics (training-set mean and std;
// constant features keep std 1 so they are only centered).
struct NormalizationStats {
  Vector mean;
  Vector std;
};

struct LabeledDataset {
  Matrix X;                      // N x D
  std::vector<int> y;            // labels in 1..C
  int n_classes = 0;             // C
  std::vector<double> label_map;  // remapped class c (1-based) <- original label_map[c-1]
  std::optional<NormalizationStats> norm;

  long n() const { return X.rows(); }
  int dim() const { return static_cast<int>(X.cols()); }

  // N x C one-hot view of y.
  Matrix one_hot() const;
};

// LIBSVM multi-class text format: "label idx:val idx:val ...", 1-based
// strictly increasing indices, '#' starts a comment. Labels are remapped to
// 1..C by sorted original value; absent indices densify to 0.
LabeledDataset parse_libsvm(std::istream& in);
LabeledDataset load_libsvm(const std::string& path);
void write_libsvm(const LabeledDataset& ds, std::ostream& out);
void write_libsvm_file(const LabeledDataset& ds, const std::string& path);

// Standardize features in place using the dataset's own statistics; the
// applied stats are stored on the result for later use on test points.
LabeledDataset normalize(const LabeledDataset& ds);
Matrix apply_normalization(const Matrix& X, const NormalizationStats& stats);
Matrix invert_normalization(const Matrix& X, const NormalizationStats& stats);

// Stratified shuffle split; per-class test counts are within one point of
// class_count * test_fraction. Deterministic per seed.
std::pair<LabeledDataset, LabeledDataset> train_test_split(const LabeledDataset& ds,
                                                           double test_fraction,
                                                           std::uint64_t seed);

// Gaussian-mixture toy data: class c center at angle 2*pi*c/C on the unit
// circle in 2-D, isotropic noise variance sigma2, balanced class counts.
struct ToySpec {
  int n_points = 500;
  int n_classes = 3;
  double sigma2 = 0.5;
  std::uint64_t seed = 0;
};

LabeledDataset gen_toy(const ToySpec& spec);

// Class centers used by gen_toy (C x 2).
Matrix toy_centers(int n_classes);

}  // namespace lsmgp
