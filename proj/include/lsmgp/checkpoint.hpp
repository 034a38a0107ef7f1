#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lsmgp/dataset.hpp"
#include "lsmgp/sparse_gp.hpp"

namespace lsmgp {

// On-disk model: kernel config(s), inducing inputs, per-class variational
// moments, feature normalization, and the label remap table.
struct ModelCheckpoint {
  static constexpr int kFormatVersion = 1;

  SparseGPState state;
  std::optional<NormalizationStats> norm;
  std::vector<double> label_map;
};

std::string checkpoint_to_json(const ModelCheckpoint& ckpt);
ModelCheckpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const ModelCheckpoint& ckpt, const std::string& path);
ModelCheckpoint load_checkpoint(const std::string& path);

}  // namespace lsmgp
