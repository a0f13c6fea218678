#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "dorsiflex/cnn.hpp"
#include "dorsiflex/error.hpp"
#include "dorsiflex/features.hpp"
#include "dorsiflex/knn.hpp"
#include "dorsiflex/mlp.hpp"
#include "dorsiflex/svm.hpp"

namespace dorsiflex {

enum class ModelKind : std::uint8_t { knn = 0, svm = 1, mlp = 2, cnn = 3 };

inline const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::knn: return "knn";
    case ModelKind::svm: return "svm";
    case ModelKind::mlp: return "mlp";
    case ModelKind::cnn: return "cnn";
  }
  throw ParamError("invalid model kind");
}

inline ModelKind model_kind_from_name(const std::string& name) {
  if (name == "knn") return ModelKind::knn;
  if (name == "svm") return ModelKind::svm;
  if (name == "mlp") return ModelKind::mlp;
  if (name == "cnn") return ModelKind::cnn;
  throw ParamError("unknown model kind: " + name);
}

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// A trained classifier plus everything needed to run it on new segments:
/// the selected feature indices and normalization constants (feature-based
/// kinds only) and the subjects it was trained on, for split guarding.
struct ModelArtifact {
  ModelKind kind = ModelKind::knn;
  std::uint32_t format_version = kModelFormatVersion;
  std::variant<KnnModel, SvmModel, MlpModel, CnnModel> model;
  std::vector<int> selected_features;
  Normalizer normalizer;
  std::vector<std::string> train_subjects;
};

namespace detail {

// Model container: magic, version, kind tag, selected feature names and
// indices, normalizer bounds, training subjects, then shape-tagged tensors
// of little-endian 64-bit floats.
inline constexpr char kModelMagic[4] = {'D', 'F', 'X', 'M'};

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void matrix(const std::string& name, const Eigen::MatrixXd& m) {
    str(name);
    u32(static_cast<std::uint32_t>(m.rows()));
    u32(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) f64(m(i, j));
    }
  }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::vector<char> bytes, std::string path)
      : bytes_(std::move(bytes)), path_(std::move(path)) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    }
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    }
    return std::bit_cast<double>(bits);
  }
  std::string str() {
    const std::uint32_t len = u32();
    need(len);
    std::string s(bytes_.data() + pos_, len);
    pos_ += len;
    return s;
  }
  Eigen::MatrixXd matrix_body() {
    const std::uint32_t rows = u32();
    const std::uint32_t cols = u32();
    if (static_cast<std::uint64_t>(rows) * cols > (1ull << 28)) {
      throw IoError(path_ + ": tensor shape implausibly large");
    }
    Eigen::MatrixXd m(rows, cols);
    for (std::uint32_t j = 0; j < cols; ++j) {
      for (std::uint32_t i = 0; i < rows; ++i) m(i, j) = f64();
    }
    return m;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > bytes_.size()) {
      throw IoError(path_ + ": truncated model file");
    }
  }
  std::vector<char> bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

inline Eigen::MatrixXd require_tensor(
    const std::map<std::string, Eigen::MatrixXd>& tensors,
    const std::string& name, Eigen::Index rows, Eigen::Index cols,
    const std::string& path) {
  const auto it = tensors.find(name);
  if (it == tensors.end()) throw IoError(path + ": missing tensor " + name);
  if ((rows >= 0 && it->second.rows() != rows) ||
      (cols >= 0 && it->second.cols() != cols)) {
    throw IoError(path + ": tensor " + name + " has unexpected shape");
  }
  return it->second;
}

inline void collect_tensors(const ModelArtifact& artifact, ByteWriter& w) {
  std::vector<std::pair<std::string, Eigen::MatrixXd>> tensors;
  if (const auto* knn = std::get_if<KnnModel>(&artifact.model)) {
    Eigen::MatrixXd labels(knn->train_y.size(), 1);
    for (std::size_t i = 0; i < knn->train_y.size(); ++i) {
      labels(static_cast<Eigen::Index>(i), 0) = knn->train_y[i];
    }
    Eigen::MatrixXd k(1, 1);
    k(0, 0) = knn->k;
    tensors = {{"knn.x", knn->train_x}, {"knn.y", labels}, {"knn.k", k}};
  } else if (const auto* svm = std::get_if<SvmModel>(&artifact.model)) {
    Eigen::MatrixXd bias(1, 1);
    bias(0, 0) = svm->b;
    tensors = {{"svm.w", svm->w}, {"svm.b", bias}};
  } else if (const auto* mlp = std::get_if<MlpModel>(&artifact.model)) {
    Eigen::MatrixXd meta(2, 1);
    meta(0, 0) = mlp->input_dim();
    meta(1, 0) = mlp->dropout_rate();
    const std::vector<double> flat = mlp->parameters();
    Eigen::MatrixXd params(static_cast<Eigen::Index>(flat.size()), 1);
    for (std::size_t i = 0; i < flat.size(); ++i) {
      params(static_cast<Eigen::Index>(i), 0) = flat[i];
    }
    tensors = {{"mlp.meta", meta}, {"mlp.params", params}};
  } else {
    const auto& cnn = std::get<CnnModel>(artifact.model);
    const std::vector<double> flat = cnn.parameters();
    Eigen::MatrixXd params(static_cast<Eigen::Index>(flat.size()), 1);
    for (std::size_t i = 0; i < flat.size(); ++i) {
      params(static_cast<Eigen::Index>(i), 0) = flat[i];
    }
    tensors = {{"cnn.params", params}};
  }
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, m] : tensors) w.matrix(name, m);
}

}  // namespace detail

inline void save_model(const ModelArtifact& artifact, const std::string& path) {
  detail::ByteWriter w;
  w.u32(artifact.format_version);
  w.u8(static_cast<std::uint8_t>(artifact.kind));

  w.u32(static_cast<std::uint32_t>(artifact.selected_features.size()));
  const auto& names = feature_names();
  for (int idx : artifact.selected_features) {
    if (idx < 0 || idx >= kFeatureCount) {
      throw ParamError("selected feature index out of range");
    }
    w.u32(static_cast<std::uint32_t>(idx));
    w.str(names[static_cast<std::size_t>(idx)]);
  }

  w.u32(static_cast<std::uint32_t>(artifact.normalizer.size()));
  for (Eigen::Index j = 0; j < artifact.normalizer.size(); ++j) {
    w.f64(artifact.normalizer.lower()[j]);
    w.f64(artifact.normalizer.upper()[j]);
  }

  w.u32(static_cast<std::uint32_t>(artifact.train_subjects.size()));
  for (const std::string& s : artifact.train_subjects) w.str(s);

  detail::collect_tensors(artifact, w);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(detail::kModelMagic, 4);
  out.write(w.bytes().data(),
            static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw IoError("write failed: " + path);
}

inline ModelArtifact load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  if (bytes.size() < 4 ||
      !std::equal(detail::kModelMagic, detail::kModelMagic + 4, bytes.begin())) {
    throw IoError(path + ": not a model file");
  }
  detail::ByteReader r(
      std::vector<char>(bytes.begin() + 4, bytes.end()), path);

  ModelArtifact artifact;
  artifact.format_version = r.u32();
  if (artifact.format_version != kModelFormatVersion) {
    throw IoError(path + ": unsupported format version " +
                  std::to_string(artifact.format_version) + " (expected " +
                  std::to_string(kModelFormatVersion) + ")");
  }
  const std::uint8_t kind_tag = r.u8();
  if (kind_tag > 3) throw IoError(path + ": unknown model kind tag");
  artifact.kind = static_cast<ModelKind>(kind_tag);

  const std::uint32_t n_selected = r.u32();
  if (n_selected > kFeatureCount) {
    throw IoError(path + ": too many selected features");
  }
  for (std::uint32_t i = 0; i < n_selected; ++i) {
    const std::uint32_t idx = r.u32();
    const std::string name = r.str();
    if (idx >= kFeatureCount ||
        feature_names()[idx] != name) {
      throw IoError(path + ": feature name list inconsistent");
    }
    artifact.selected_features.push_back(static_cast<int>(idx));
  }

  const std::uint32_t nz_dim = r.u32();
  if (nz_dim > 0) {
    Eigen::RowVectorXd lo(nz_dim), hi(nz_dim);
    for (std::uint32_t j = 0; j < nz_dim; ++j) {
      lo[j] = r.f64();
      hi[j] = r.f64();
    }
    artifact.normalizer = Normalizer::from_bounds(lo, hi);
  }

  const std::uint32_t n_subjects = r.u32();
  for (std::uint32_t i = 0; i < n_subjects; ++i) {
    artifact.train_subjects.push_back(r.str());
  }

  std::map<std::string, Eigen::MatrixXd> tensors;
  const std::uint32_t n_tensors = r.u32();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    const std::string name = r.str();
    tensors[name] = r.matrix_body();
  }
  if (!r.done()) throw IoError(path + ": trailing bytes after payload");

  switch (artifact.kind) {
    case ModelKind::knn: {
      KnnModel m;
      m.train_x = detail::require_tensor(tensors, "knn.x", -1, -1, path);
      const Eigen::MatrixXd labels = detail::require_tensor(
          tensors, "knn.y", m.train_x.rows(), 1, path);
      for (Eigen::Index i = 0; i < labels.rows(); ++i) {
        m.train_y.push_back(static_cast<int>(labels(i, 0)));
      }
      m.k = static_cast<int>(
          detail::require_tensor(tensors, "knn.k", 1, 1, path)(0, 0));
      if (m.k < 1 || m.k > m.train_x.rows()) {
        throw IoError(path + ": stored k out of range");
      }
      artifact.model = std::move(m);
      break;
    }
    case ModelKind::svm: {
      SvmModel m;
      m.w = detail::require_tensor(tensors, "svm.w", -1, 1, path);
      m.b = detail::require_tensor(tensors, "svm.b", 1, 1, path)(0, 0);
      artifact.model = std::move(m);
      break;
    }
    case ModelKind::mlp: {
      const Eigen::MatrixXd meta =
          detail::require_tensor(tensors, "mlp.meta", 2, 1, path);
      const int input_dim = static_cast<int>(meta(0, 0));
      if (input_dim < 1) throw IoError(path + ": bad mlp input dim");
      Rng rng(0);
      MlpModel m(input_dim, meta(1, 0), rng);
      const Eigen::MatrixXd params =
          detail::require_tensor(tensors, "mlp.params", -1, 1, path);
      if (static_cast<std::size_t>(params.rows()) != m.parameters().size()) {
        throw IoError(path + ": mlp parameter payload has wrong size");
      }
      std::vector<double> flat(params.data(), params.data() + params.rows());
      m.set_parameters(flat);
      artifact.model = std::move(m);
      break;
    }
    case ModelKind::cnn: {
      Rng rng(0);
      CnnModel m(rng);
      const Eigen::MatrixXd params =
          detail::require_tensor(tensors, "cnn.params", -1, 1, path);
      if (static_cast<std::size_t>(params.rows()) != m.parameters().size()) {
        throw IoError(path + ": cnn parameter payload has wrong size");
      }
      std::vector<double> flat(params.data(), params.data() + params.rows());
      m.set_parameters(flat);
      artifact.model = std::move(m);
      break;
    }
  }
  return artifact;
}

}  // namespace dorsiflex
