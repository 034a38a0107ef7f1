#include "lsmgp/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace lsmgp {

CalibrationReport evaluate(const Matrix& probs, const std::vector<int>& labels, int n_bins) {
  const long N = probs.rows();
  if (static_cast<long>(labels.size()) != N)
    throw DimensionError("evaluate: probs/labels size mismatch");
  if (n_bins < 1) throw DimensionError("evaluate: n_bins must be >= 1");
  for (long i = 0; i < N; ++i) {
    const double s = probs.row(i).sum();
    if (std::fabs(s - 1.0) > 1e-6)
      throw DimensionError("evaluate: probability row " + std::to_string(i) +
                           " sums to " + std::to_string(s));
  }

  CalibrationReport rep;
  rep.n_bins = n_bins;
  rep.n_points = N;
  rep.bins.resize(static_cast<std::size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b) {
    rep.bins[static_cast<std::size_t>(b)].lower = static_cast<double>(b) / n_bins;
    rep.bins[static_cast<std::size_t>(b)].upper = static_cast<double>(b + 1) / n_bins;
  }

  std::vector<double> conf_sum(static_cast<std::size_t>(n_bins), 0.0);
  std::vector<long> correct(static_cast<std::size_t>(n_bins), 0);
  long n_wrong = 0;
  double nll = 0.0;
  for (long i = 0; i < N; ++i) {
    int pred = 0;
    for (int c = 1; c < probs.cols(); ++c)
      if (probs(i, c) > probs(i, pred)) pred = c;
    const double conf = probs(i, pred);
    // equal-width bins on (0,1]: bin b covers (b/B, (b+1)/B]
    int b = static_cast<int>(std::ceil(conf * n_bins)) - 1;
    if (b < 0) b = 0;
    if (b >= n_bins) b = n_bins - 1;
    auto& bin = rep.bins[static_cast<std::size_t>(b)];
    bin.count += 1;
    conf_sum[static_cast<std::size_t>(b)] += conf;
    const bool is_correct = (pred + 1) == labels[static_cast<std::size_t>(i)];
    if (is_correct)
      correct[static_cast<std::size_t>(b)] += 1;
    else
      ++n_wrong;
    nll -= std::log(std::max(probs(i, labels[static_cast<std::size_t>(i)] - 1), 1e-12));
  }
  rep.test_error = static_cast<double>(n_wrong) / static_cast<double>(N);
  rep.mean_nll = nll / static_cast<double>(N);
  for (int b = 0; b < n_bins; ++b) {
    auto& bin = rep.bins[static_cast<std::size_t>(b)];
    if (bin.count > 0) {
      bin.mean_confidence = conf_sum[static_cast<std::size_t>(b)] / bin.count;
      bin.accuracy = static_cast<double>(correct[static_cast<std::size_t>(b)]) / bin.count;
      rep.ece += (static_cast<double>(bin.count) / N) *
                 std::fabs(bin.accuracy - bin.mean_confidence);
    }
  }
  return rep;
}

namespace {
std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

std::string report_to_json(const CalibrationReport& rep) {
  std::ostringstream os;
  os << "{\n  \"n_bins\": " << rep.n_bins << ",\n  \"n_points\": " << rep.n_points
     << ",\n  \"ece\": " << fmt_double(rep.ece)
     << ",\n  \"test_error\": " << fmt_double(rep.test_error)
     << ",\n  \"mean_nll\": " << fmt_double(rep.mean_nll) << ",\n  \"bins\": [\n";
  for (std::size_t b = 0; b < rep.bins.size(); ++b) {
    const auto& bin = rep.bins[b];
    os << "    {\"lower\": " << fmt_double(bin.lower) << ", \"upper\": " << fmt_double(bin.upper)
       << ", \"mean_confidence\": " << fmt_double(bin.mean_confidence)
       << ", \"accuracy\": " << fmt_double(bin.accuracy) << ", \"count\": " << bin.count << "}"
       << (b + 1 < rep.bins.size() ? ",\n" : "\n");
  }
  os << "  ]\n}\n";
  return os.str();
}

std::string bins_to_csv(const CalibrationReport& rep) {
  std::ostringstream os;
  os << "bin,lower,upper,mean_confidence,accuracy,count\n";
  for (std::size_t b = 0; b < rep.bins.size(); ++b) {
    const auto& bin = rep.bins[b];
    os << b + 1 << ',' << fmt_double(bin.lower) << ',' << fmt_double(bin.upper) << ','
       << fmt_double(bin.mean_confidence) << ',' << fmt_double(bin.accuracy) << ','
       << bin.count << '\n';
  }
  return os.str();
}

std::string confidence_histogram_csv(const CalibrationReport& rep) {
  std::ostringstream os;
  os << "bin,lower,upper,count,fraction\n";
  for (std::size_t b = 0; b < rep.bins.size(); ++b) {
    const auto& bin = rep.bins[b];
    const double frac =
        rep.n_points > 0 ? static_cast<double>(bin.count) / rep.n_points : 0.0;
    os << b + 1 << ',' << fmt_double(bin.lower) << ',' << fmt_double(bin.upper) << ','
       << bin.count << ',' << fmt_double(frac) << '\n';
  }
  return os.str();
}

Matrix prediction_grid(const SparseGPState& state, const GridSpec& spec,
                       const NormalizationStats* norm, Rng& rng) {
  if (state.Z.cols() != 2)
    throw DimensionError("prediction_grid: model feature space must be 2-D");
  if (spec.resolution < 1) throw DimensionError("prediction_grid: resolution must be >= 1");
  const int R = spec.resolution;
  const int C = state.n_classes();
  Matrix raw(static_cast<long>(R) * R, 2);
  long row = 0;
  for (int iy = 0; iy < R; ++iy)
    for (int ix = 0; ix < R; ++ix, ++row) {
      // cell centers; a 1x1 grid evaluates the box center
      raw(row, 0) = spec.x_min + (ix + 0.5) * (spec.x_max - spec.x_min) / R;
      raw(row, 1) = spec.y_min + (iy + 0.5) * (spec.y_max - spec.y_min) / R;
    }
  const Matrix pts = norm != nullptr ? apply_normalization(raw, *norm) : raw;
  const auto [means, vars] = latent_predictive(state, pts);
  Matrix grid(raw.rows(), 2 + C);
  grid.leftCols(2) = raw;
  for (long i = 0; i < raw.rows(); ++i) {
    const ClassProbabilities probs =
        predict_proba(means.row(i).transpose(), vars.row(i).transpose(), spec.n_samples,
                      spec.sampler, rng);
    grid.row(i).tail(C) = probs.probs.transpose();
  }
  return grid;
}

std::string grid_to_csv(const Matrix& grid, int n_classes, int resolution) {
  std::ostringstream os;
  os << "# resolution=" << resolution << "\n";
  os << "x,y";
  for (int c = 1; c <= n_classes; ++c) os << ",p" << c;
  os << '\n';
  for (long i = 0; i < grid.rows(); ++i) {
    for (long j = 0; j < grid.cols(); ++j)
      os << (j > 0 ? "," : "") << fmt_double(grid(i, j));
    os << '\n';
  }
  return os.str();
}

}  // namespace lsmgp
