#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "dorsiflex/error.hpp"
#include "dorsiflex/rng.hpp"

namespace dorsiflex {

/// Shared training options for the gradient-trained models.
struct TrainConfig {
  int max_epochs = 100;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double dropout = 0.5;
  double early_stop_min_improvement = 1e-5;
  int early_stop_patience = 10;
  std::uint64_t seed = 0;
};

namespace nn {

/// A parameter matrix with its gradient and ADAM moment estimates.
struct ParamTensor {
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;
  Eigen::MatrixXd m;
  Eigen::MatrixXd v;

  void resize(Eigen::Index rows, Eigen::Index cols) {
    value.setZero(rows, cols);
    grad.setZero(rows, cols);
    m.setZero(rows, cols);
    v.setZero(rows, cols);
  }

  void init_uniform_fanin(Eigen::Index rows, Eigen::Index cols,
                          Eigen::Index fan_in, Rng& rng) {
    resize(rows, cols);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        value(i, j) = rng.uniform(-bound, bound);
      }
    }
  }
};

/// ADAM with bias correction; one shared timestep per optimizer step.
class Adam {
 public:
  explicit Adam(const TrainConfig& c)
      : lr_(c.learning_rate),
        b1_(c.adam_beta1),
        b2_(c.adam_beta2),
        eps_(c.adam_epsilon) {}

  void begin_step() { ++t_; }

  void update(ParamTensor& p) const {
    p.m = b1_ * p.m + (1.0 - b1_) * p.grad;
    p.v = b2_ * p.v.array().matrix() +
          (1.0 - b2_) * p.grad.array().square().matrix();
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    p.value.array() -=
        lr_ * (p.m.array() / c1) / ((p.v.array() / c2).sqrt() + eps_);
  }

 private:
  double lr_, b1_, b2_, eps_;
  long long t_ = 0;
};

/// Fully connected layer; batches are stored one column per sample.
struct DenseLayer {
  ParamTensor w;  // out x in
  ParamTensor b;  // out x 1

  void init(Eigen::Index in, Eigen::Index out, Rng& rng) {
    w.init_uniform_fanin(out, in, in, rng);
    b.resize(out, 1);
  }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const {
    return (w.value * x).colwise() + Eigen::VectorXd(b.value.col(0));
  }

  /// Accumulates parameter gradients; returns the gradient wrt the input.
  Eigen::MatrixXd backward(const Eigen::MatrixXd& x,
                           const Eigen::MatrixXd& dz) {
    w.grad.noalias() += dz * x.transpose();
    b.grad.col(0).noalias() += dz.rowwise().sum();
    return w.value.transpose() * dz;
  }
};

inline Eigen::MatrixXd relu(const Eigen::MatrixXd& z) {
  return z.cwiseMax(0.0);
}

inline Eigen::MatrixXd relu_backward(const Eigen::MatrixXd& z,
                                     const Eigen::MatrixXd& da) {
  return (z.array() > 0.0).select(da, Eigen::MatrixXd::Zero(z.rows(), z.cols()));
}

/// Column-wise softmax of a logits matrix.
inline Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const Eigen::VectorXd shifted =
        logits.col(c).array() - logits.col(c).maxCoeff();
    const Eigen::VectorXd e = shifted.array().exp();
    p.col(c) = e / e.sum();
  }
  return p;
}

/// Mean cross-entropy over the batch and its gradient wrt the logits.
inline std::pair<double, Eigen::MatrixXd> softmax_cross_entropy(
    const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
  const Eigen::Index batch = logits.cols();
  if (static_cast<Eigen::Index>(labels.size()) != batch) {
    throw ParamError("label count does not match batch size");
  }
  Eigen::MatrixXd p = softmax(logits);
  double loss = 0.0;
  for (Eigen::Index c = 0; c < batch; ++c) {
    const int y = labels[static_cast<std::size_t>(c)];
    if (y < 0 || y >= logits.rows()) throw ParamError("label out of range");
    loss -= std::log(std::max(p(y, c), 1e-300));
    p(y, c) -= 1.0;
  }
  const double inv_batch = 1.0 / static_cast<double>(batch);
  return {loss * inv_batch, p * inv_batch};
}

/// Inverted dropout mask: entries are 0 or 1/(1-rate).
inline Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols,
                                    double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ParamError("dropout rate in [0, 1)");
  Eigen::MatrixXd mask(rows, cols);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      mask(i, j) = rng.uniform() < rate ? 0.0 : keep_scale;
    }
  }
  return mask;
}

/// Stops when the epoch loss has not improved by at least min_improvement
/// for patience consecutive epochs.
class EarlyStop {
 public:
  EarlyStop(double min_improvement, int patience)
      : min_improvement_(min_improvement), patience_(patience) {}

  bool update(double loss) {
    if (best_ - loss < min_improvement_) {
      ++stale_;
    } else {
      stale_ = 0;
    }
    best_ = std::min(best_, loss);
    return stale_ >= patience_;
  }

 private:
  double min_improvement_;
  int patience_;
  double best_ = std::numeric_limits<double>::infinity();
  int stale_ = 0;
};

inline void append_flat(std::vector<double>& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(m(i, j));
  }
}

inline std::size_t read_flat(Eigen::MatrixXd& m, const std::vector<double>& in,
                             std::size_t offset) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = in.at(offset++);
  }
  return offset;
}

}  // namespace nn
}  // namespace dorsiflex
