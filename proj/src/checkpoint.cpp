#include "lsmgp/checkpoint.hpp"

#include <fstream>
#include <json.hpp>

namespace lsmgp {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (long i = 0; i < m.rows(); ++i)
    for (long c = 0; c < m.cols(); ++c) data.push_back(m(i, c));  // row-major
  j["data"] = std::move(data);
  return j;
}

Matrix matrix_from_json(const json& j) {
  const long rows = j.at("rows").get<long>();
  const long cols = j.at("cols").get<long>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<long>(data.size()) != rows * cols)
    throw ParseError("checkpoint: matrix payload size mismatch");
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (long i = 0; i < rows; ++i)
    for (long c = 0; c < cols; ++c) m(i, c) = data[k++];
  return m;
}

json vector_to_json(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector vector_from_json(const json& j) {
  const auto data = j.get<std::vector<double>>();
  Vector v(static_cast<long>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) v[static_cast<long>(i)] = data[i];
  return v;
}

}  // namespace

std::string checkpoint_to_json(const ModelCheckpoint& ckpt) {
  json j;
  j["format_version"] = ModelCheckpoint::kFormatVersion;
  j["n_classes"] = ckpt.state.n_classes();
  j["shared_kernel"] = ckpt.state.shared_kernel;
  j["inducing_inputs"] = matrix_to_json(ckpt.state.Z);
  json kernels = json::array();
  for (const auto& cfg : ckpt.state.kernels) {
    json k;
    k["variance"] = cfg.variance;
    k["length_scales"] = vector_to_json(cfg.length_scales);
    k["jitter"] = cfg.jitter;
    kernels.push_back(std::move(k));
  }
  j["kernels"] = std::move(kernels);
  json mu = json::array(), sigma = json::array();
  for (int c = 0; c < ckpt.state.n_classes(); ++c) {
    mu.push_back(vector_to_json(ckpt.state.mu[static_cast<std::size_t>(c)]));
    sigma.push_back(matrix_to_json(ckpt.state.sigma[static_cast<std::size_t>(c)]));
  }
  j["mu"] = std::move(mu);
  j["sigma"] = std::move(sigma);
  if (ckpt.norm.has_value()) {
    j["normalization"] = {{"mean", vector_to_json(ckpt.norm->mean)},
                          {"std", vector_to_json(ckpt.norm->std)}};
  }
  j["label_map"] = ckpt.label_map;
  return j.dump(2) + "\n";
}

ModelCheckpoint checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  if (j.at("format_version").get<int>() != ModelCheckpoint::kFormatVersion)
    throw ParseError("checkpoint: unsupported format version");
  ModelCheckpoint ckpt;
  const int C = j.at("n_classes").get<int>();
  SparseGPState& st = ckpt.state;
  st.shared_kernel = j.at("shared_kernel").get<bool>();
  st.Z = matrix_from_json(j.at("inducing_inputs"));
  for (const auto& k : j.at("kernels")) {
    KernelConfig cfg(k.at("variance").get<double>(), vector_from_json(k.at("length_scales")),
                     k.at("jitter").get<double>());
    st.kernels.push_back(std::move(cfg));
  }
  for (const auto& v : j.at("mu")) st.mu.push_back(vector_from_json(v));
  for (const auto& m : j.at("sigma")) st.sigma.push_back(matrix_from_json(m));
  if (static_cast<int>(st.mu.size()) != C || static_cast<int>(st.sigma.size()) != C)
    throw ParseError("checkpoint: per-class payload count mismatch");
  st.refresh_kernel_caches();
  if (j.contains("normalization")) {
    NormalizationStats stats;
    stats.mean = vector_from_json(j.at("normalization").at("mean"));
    stats.std = vector_from_json(j.at("normalization").at("std"));
    ckpt.norm = std::move(stats);
  }
  ckpt.label_map = j.at("label_map").get<std::vector<double>>();
  return ckpt;
}

void save_checkpoint(const ModelCheckpoint& ckpt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out << checkpoint_to_json(ckpt);
}

ModelCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return checkpoint_from_json(text);
}

}  // namespace lsmgp
