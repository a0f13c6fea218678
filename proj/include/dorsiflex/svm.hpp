#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <numeric>
#include <vector>

#include "dorsiflex/error.hpp"
#include "dorsiflex/knn.hpp"
#include "dorsiflex/rng.hpp"

namespace dorsiflex {

struct SvmConfig {
  double lambda = 1e-3;
  int epochs = 200;
  std::uint64_t seed = 0;
};

/// Linear decision function w.x + b.
struct SvmModel {
  Eigen::VectorXd w;
  double b = 0.0;
};

/// Stochastic subgradient descent on L2-regularized hinge loss with step
/// 1/(lambda*(t + t0)); the bias stays unregularized. The returned weights
/// are the average over the second half of the run, which damps the noise
/// of the final iterates. Deterministic for a seed.
inline SvmModel svm_train(const Eigen::MatrixXd& x, const std::vector<int>& y,
                          const SvmConfig& config = {}) {
  if (static_cast<Eigen::Index>(y.size()) != x.rows()) {
    throw ParamError("label count does not match row count");
  }
  if (x.rows() < 2) throw ParamError("need at least 2 training rows");
  if (!(config.lambda > 0.0)) throw ParamError("lambda must be > 0");
  if (config.epochs < 1) throw ParamError("epochs must be >= 1");
  bool has_pos = false, has_neg = false;
  for (int label : y) (label ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw ParamError("both classes must be present");

  SvmModel model;
  model.w = Eigen::VectorXd::Zero(x.cols());
  Rng rng(config.seed);
  std::vector<std::size_t> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), 0);

  // Warm offset keeps the first steps from dwarfing everything after them.
  const double t0 = static_cast<double>(x.rows());
  const long long total =
      static_cast<long long>(config.epochs) * x.rows();
  Eigen::VectorXd w_sum = Eigen::VectorXd::Zero(x.cols());
  double b_sum = 0.0;
  long long averaged = 0;

  long long t = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t idx : order) {
      ++t;
      const double eta = 1.0 / (config.lambda * (static_cast<double>(t) + t0));
      const double target = y[idx] ? 1.0 : -1.0;
      const double margin =
          target * (x.row(static_cast<Eigen::Index>(idx)).dot(model.w) + model.b);
      model.w *= 1.0 - eta * config.lambda;
      if (margin < 1.0) {
        model.w += eta * target * x.row(static_cast<Eigen::Index>(idx)).transpose();
        model.b += eta * target;
      }
      if (2 * t > total) {
        w_sum += model.w;
        b_sum += model.b;
        ++averaged;
      }
    }
  }
  if (averaged > 0) {
    model.w = w_sum / static_cast<double>(averaged);
    model.b = b_sum / static_cast<double>(averaged);
  }
  return model;
}

/// Label is the margin sign; score is the raw margin itself.
inline Prediction svm_predict(const SvmModel& model,
                              const Eigen::RowVectorXd& x) {
  if (x.size() != model.w.size()) {
    throw ParamError("query dimension does not match model");
  }
  const double margin = x.dot(model.w) + model.b;
  return Prediction{margin >= 0.0 ? 1 : 0, margin};
}

}  // namespace dorsiflex
