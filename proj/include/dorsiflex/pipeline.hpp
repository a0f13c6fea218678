#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "dorsiflex/eval.hpp"
#include "dorsiflex/ingest.hpp"
#include "dorsiflex/model_io.hpp"
#include "dorsiflex/selection.hpp"

namespace dorsiflex {

struct TrainOptions {
  ModelKind kind = ModelKind::knn;
  int mrmr_k = 21;
  MrmrScoring scoring = MrmrScoring::quotient;
  int knn_k = 1;
  SvmConfig svm;
  TrainConfig nn;
};

inline std::vector<int> segment_labels(const std::vector<Segment>& segments) {
  std::vector<int> y;
  y.reserve(segments.size());
  for (const Segment& s : segments) y.push_back(s.is_dorsiflexion() ? 1 : 0);
  return y;
}

namespace detail {

inline Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x,
                                      const std::vector<int>& indices) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = x.col(indices[j]);
  }
  return out;
}

}  // namespace detail

/// Fit the full pipeline on training segments: features, normalization and
/// mRMR selection for the feature-based kinds, raw resampled windows for
/// the CNN.
inline ModelArtifact train_artifact(const std::vector<Segment>& train_segments,
                                    const TrainOptions& options) {
  if (train_segments.empty()) throw ParamError("no training segments");
  ModelArtifact artifact;
  artifact.kind = options.kind;
  std::set<std::string> subjects;
  for (const Segment& s : train_segments) subjects.insert(s.subject_id);
  artifact.train_subjects.assign(subjects.begin(), subjects.end());

  const std::vector<int> y = segment_labels(train_segments);

  if (options.kind == ModelKind::cnn) {
    std::vector<RawWindow> windows;
    windows.reserve(train_segments.size());
    for (const Segment& s : train_segments) {
      windows.push_back(resample_to_window(s));
    }
    artifact.model = cnn_train(windows, y, options.nn);
    return artifact;
  }

  const Eigen::MatrixXd features = feature_matrix(train_segments);
  artifact.normalizer = Normalizer::fit(features);
  const Eigen::MatrixXd normalized = artifact.normalizer.apply(features);
  const SelectionResult selection =
      mrmr_select(normalized, y, options.mrmr_k, options.scoring);
  artifact.selected_features = selection.ranked_indices;
  const Eigen::MatrixXd x =
      detail::select_columns(normalized, artifact.selected_features);

  switch (options.kind) {
    case ModelKind::knn:
      artifact.model = knn_train(x, y, options.knn_k);
      break;
    case ModelKind::svm:
      artifact.model = svm_train(x, y, options.svm);
      break;
    case ModelKind::mlp:
      artifact.model = mlp_train(x, y, options.nn);
      break;
    case ModelKind::cnn:
      break;  // handled above
  }
  return artifact;
}

/// Run one segment through the artifact's input path and classifier.
inline Prediction predict_segment(const ModelArtifact& artifact,
                                  const Segment& segment) {
  if (artifact.kind == ModelKind::cnn) {
    return std::get<CnnModel>(artifact.model).predict(
        resample_to_window(segment));
  }
  const FeatureVector f = extract(segment);
  Eigen::RowVectorXd row(kFeatureCount);
  for (int j = 0; j < kFeatureCount; ++j) row[j] = f[static_cast<std::size_t>(j)];
  const Eigen::RowVectorXd normalized = artifact.normalizer.apply(row);
  Eigen::RowVectorXd x(static_cast<Eigen::Index>(artifact.selected_features.size()));
  for (std::size_t j = 0; j < artifact.selected_features.size(); ++j) {
    x[static_cast<Eigen::Index>(j)] = normalized[artifact.selected_features[j]];
  }
  switch (artifact.kind) {
    case ModelKind::knn:
      return knn_predict(std::get<KnnModel>(artifact.model), x);
    case ModelKind::svm:
      return svm_predict(std::get<SvmModel>(artifact.model), x);
    case ModelKind::mlp:
      return std::get<MlpModel>(artifact.model).predict(x);
    case ModelKind::cnn:
      break;
  }
  throw ParamError("invalid model kind");
}

struct EvaluationResult {
  ConfusionMatrix confusion;
  MetricsReport report;
};

/// Evaluate on held-out segments. Refuses to score a test set that shares
/// any subject with the training data.
inline EvaluationResult evaluate_split(const ModelArtifact& artifact,
                                       const std::vector<Segment>& test_segments) {
  if (test_segments.empty()) throw ParamError("no test segments");
  const std::set<std::string> train(artifact.train_subjects.begin(),
                                    artifact.train_subjects.end());
  for (const Segment& s : test_segments) {
    if (train.count(s.subject_id)) {
      throw ParamError("subject appears in both train and test: " +
                       s.subject_id);
    }
  }
  ConfusionMatrix cm;
  for (const Segment& s : test_segments) {
    const bool truth = s.is_dorsiflexion();
    const bool predicted = predict_segment(artifact, s).label == 1;
    if (truth && predicted) ++cm.tp;
    else if (!truth && predicted) ++cm.fp;
    else if (truth && !predicted) ++cm.fn;
    else ++cm.tn;
  }
  return EvaluationResult{cm, metrics(cm)};
}

/// Feature matrix export: 42 canonical columns plus label, subject and
/// movement class, one row per segment.
inline void write_feature_csv(const std::string& path,
                              const std::vector<Segment>& segments) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  const auto& names = feature_names();
  for (int j = 0; j < kFeatureCount; ++j) {
    out << names[static_cast<std::size_t>(j)] << ',';
  }
  out << "label,subject_id,movement_class\n";
  for (const Segment& s : segments) {
    const FeatureVector f = extract(s);
    for (double v : f) out << format_double(v) << ',';
    out << (s.is_dorsiflexion() ? kDorsiflexionLabel : kOtherLabel) << ','
        << s.subject_id << ',' << s.movement_class << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace dorsiflex
