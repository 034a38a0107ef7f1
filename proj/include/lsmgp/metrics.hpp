#pragma once

#include <string>
#include <vector>

#include "lsmgp/dataset.hpp"
#include "lsmgp/likelihood.hpp"
#include "lsmgp/sparse_gp.hpp"

namespace lsmgp {

struct CalibrationBin {
  double lower = 0.0;  // confidence range (lower, upper]
  double upper = 0.0;
  double mean_confidence = 0.0;
  double accuracy = 0.0;
  long count = 0;
};

struct CalibrationReport {
  int n_bins = 10;
  std::vector<CalibrationBin> bins;
  double ece = 0.0;
  double test_error = 0.0;
  double mean_nll = 0.0;
  long n_points = 0;
};

// Confidence = max predicted probability, prediction = argmax; equal-width
// bins on (0,1]; ECE = sum_b (count_b/N) |acc_b - conf_b|; NLL floors the
// probability of the true label at 1e-12.
CalibrationReport evaluate(const Matrix& probs, const std::vector<int>& labels, int n_bins = 10);

std::string report_to_json(const CalibrationReport& report);
std::string bins_to_csv(const CalibrationReport& report);
std::string confidence_histogram_csv(const CalibrationReport& report);

// Regular grid over a 2-D feature box evaluated through the model predictive.
struct GridSpec {
  double x_min = -2.0, x_max = 2.0;
  double y_min = -2.0, y_max = 2.0;
  int resolution = 50;
  int n_samples = 1000;
  SamplerKind sampler = SamplerKind::kMonteCarlo;
};

// Rows: x, y, p_1..p_C. Feature normalization stats, when present, are
// applied to the grid coordinates before prediction.
Matrix prediction_grid(const SparseGPState& state, const GridSpec& spec,
                       const NormalizationStats* norm, Rng& rng);

std::string grid_to_csv(const Matrix& grid, int n_classes, int resolution);

}  // namespace lsmgp
