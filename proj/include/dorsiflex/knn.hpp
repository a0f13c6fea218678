#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <vector>

#include "dorsiflex/error.hpp"

namespace dorsiflex {

/// Predicted class plus a model-specific confidence score. For every model
/// the label is 1 for dorsiflexion and 0 otherwise; the score is the
/// model's own confidence measure (vote share, margin, or probability).
struct Prediction {
  int label = 0;
  double score = 0.0;
};

/// k-nearest-neighbors with Euclidean distance. Training stores the data.
struct KnnModel {
  Eigen::MatrixXd train_x;
  std::vector<int> train_y;
  int k = 1;
};

inline KnnModel knn_train(const Eigen::MatrixXd& x, const std::vector<int>& y,
                          int k = 1) {
  if (x.rows() < 1) throw ParamError("empty training set");
  if (static_cast<Eigen::Index>(y.size()) != x.rows()) {
    throw ParamError("label count does not match row count");
  }
  if (k < 1 || k > x.rows()) throw ParamError("k out of range");
  return KnnModel{x, y, k};
}

/// Majority label of the k nearest neighbors. A vote tie goes to the
/// nearest neighbor holding a tied label; equal distances resolve toward
/// the lower training-row index. Score is the winning vote share.
inline Prediction knn_predict(const KnnModel& model,
                              const Eigen::RowVectorXd& x) {
  if (x.size() != model.train_x.cols()) {
    throw ParamError("query dimension does not match training data");
  }
  const Eigen::Index n = model.train_x.rows();
  std::vector<std::pair<double, Eigen::Index>> order(
      static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    order[static_cast<std::size_t>(i)] = {
        (model.train_x.row(i) - x).squaredNorm(), i};
  }
  std::sort(order.begin(), order.end());

  std::map<int, int> votes;
  for (int i = 0; i < model.k; ++i) {
    ++votes[model.train_y[static_cast<std::size_t>(order[static_cast<std::size_t>(i)].second)]];
  }
  int best_count = 0;
  for (const auto& [label, count] : votes) best_count = std::max(best_count, count);
  for (int i = 0; i < model.k; ++i) {
    const int label =
        model.train_y[static_cast<std::size_t>(order[static_cast<std::size_t>(i)].second)];
    if (votes[label] == best_count) {
      return Prediction{label,
                        static_cast<double>(best_count) / model.k};
    }
  }
  throw ParamError("unreachable: no neighbor vote");
}

}  // namespace dorsiflex
