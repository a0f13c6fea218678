#pragma once

#include <Eigen/Dense>
#include <array>
#include <numeric>
#include <vector>

#include "dorsiflex/error.hpp"
#include "dorsiflex/knn.hpp"
#include "dorsiflex/nn.hpp"

namespace dorsiflex {

/// Two-hidden-layer perceptron on extracted features:
/// dense(128, ReLU) -> dense(256, ReLU) -> dropout -> dense(2, softmax).
class MlpModel {
 public:
  static constexpr int kHidden1 = 128;
  static constexpr int kHidden2 = 256;
  static constexpr int kClasses = 2;

  MlpModel() = default;

  MlpModel(int input_dim, double dropout_rate, Rng& rng)
      : input_dim_(input_dim), dropout_rate_(dropout_rate) {
    if (input_dim < 1) throw ParamError("input dimension must be >= 1");
    l1_.init(input_dim, kHidden1, rng);
    l2_.init(kHidden1, kHidden2, rng);
    l3_.init(kHidden2, kClasses, rng);
  }

  int input_dim() const { return input_dim_; }
  double dropout_rate() const { return dropout_rate_; }

  /// Class probabilities for one feature vector (no dropout).
  std::array<double, kClasses> probabilities(const Eigen::RowVectorXd& x) const {
    if (x.size() != input_dim_) throw ParamError("feature dimension mismatch");
    const Eigen::MatrixXd logits = forward_logits(x.transpose());
    const Eigen::MatrixXd p = nn::softmax(logits);
    return {p(0, 0), p(1, 0)};
  }

  Prediction predict(const Eigen::RowVectorXd& x) const {
    const auto p = probabilities(x);
    return Prediction{p[1] >= p[0] ? 1 : 0, p[1]};
  }

  /// Mean cross-entropy on a batch, dropout disabled.
  double loss(const Eigen::MatrixXd& x_rows, const std::vector<int>& y) const {
    const Eigen::MatrixXd logits = forward_logits(x_rows.transpose());
    return nn::softmax_cross_entropy(logits, y).first;
  }

  /// Loss plus the flattened analytic gradient, dropout disabled.
  std::pair<double, std::vector<double>> loss_and_gradient(
      const Eigen::MatrixXd& x_rows, const std::vector<int>& y) {
    zero_gradients();
    const double loss_value = backprop(x_rows.transpose(), y, nullptr);
    std::vector<double> grad;
    for (const nn::ParamTensor* t : tensors()) nn::append_flat(grad, t->grad);
    return {loss_value, grad};
  }

  std::vector<double> parameters() const {
    std::vector<double> out;
    for (const nn::ParamTensor* t : tensors()) nn::append_flat(out, t->value);
    return out;
  }

  void set_parameters(const std::vector<double>& flat) {
    std::size_t offset = 0;
    for (nn::ParamTensor* t : tensors()) {
      offset = nn::read_flat(t->value, flat, offset);
    }
    if (offset != flat.size()) throw ParamError("parameter size mismatch");
  }

  const Eigen::MatrixXd& layer1_weights() const { return l1_.w.value; }

  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    for (nn::ParamTensor* t : tensors()) fn(*t);
  }

  // Training internals, used by mlp_train.
  void zero_gradients() {
    for (nn::ParamTensor* t : tensors()) t->grad.setZero();
  }

  double backprop(const Eigen::MatrixXd& x_cols, const std::vector<int>& y,
                  const Eigen::MatrixXd* dropout) {
    const Eigen::MatrixXd z1 = l1_.forward(x_cols);
    const Eigen::MatrixXd a1 = nn::relu(z1);
    const Eigen::MatrixXd z2 = l2_.forward(a1);
    Eigen::MatrixXd a2 = nn::relu(z2);
    if (dropout) a2 = a2.cwiseProduct(*dropout);
    const Eigen::MatrixXd logits = l3_.forward(a2);

    auto [loss_value, dlogits] = nn::softmax_cross_entropy(logits, y);
    Eigen::MatrixXd da2 = l3_.backward(a2, dlogits);
    if (dropout) da2 = da2.cwiseProduct(*dropout);
    const Eigen::MatrixXd dz2 = nn::relu_backward(z2, da2);
    const Eigen::MatrixXd da1 = l2_.backward(a1, dz2);
    const Eigen::MatrixXd dz1 = nn::relu_backward(z1, da1);
    l1_.backward(x_cols, dz1);
    return loss_value;
  }

 private:
  Eigen::MatrixXd forward_logits(const Eigen::MatrixXd& x_cols) const {
    const Eigen::MatrixXd a1 = nn::relu(l1_.forward(x_cols));
    const Eigen::MatrixXd a2 = nn::relu(l2_.forward(a1));
    return l3_.forward(a2);
  }

  std::vector<const nn::ParamTensor*> tensors() const {
    return {&l1_.w, &l1_.b, &l2_.w, &l2_.b, &l3_.w, &l3_.b};
  }
  std::vector<nn::ParamTensor*> tensors() {
    return {&l1_.w, &l1_.b, &l2_.w, &l2_.b, &l3_.w, &l3_.b};
  }

  friend MlpModel mlp_train(const Eigen::MatrixXd&, const std::vector<int>&,
                            const TrainConfig&);

  int input_dim_ = 0;
  double dropout_rate_ = 0.5;
  nn::DenseLayer l1_, l2_, l3_;
};

/// Train with ADAM on shuffled mini-batches; dropout active only here.
inline MlpModel mlp_train(const Eigen::MatrixXd& x_rows,
                          const std::vector<int>& y,
                          const TrainConfig& config = {}) {
  if (x_rows.rows() < 1) throw ParamError("empty training set");
  if (static_cast<Eigen::Index>(y.size()) != x_rows.rows()) {
    throw ParamError("label count does not match row count");
  }
  if (config.batch_size < 1) throw ParamError("batch size must be >= 1");

  Rng init_rng(config.seed);
  MlpModel model(static_cast<int>(x_rows.cols()), config.dropout, init_rng);
  nn::Adam adam(config);
  nn::EarlyStop stopper(config.early_stop_min_improvement,
                        config.early_stop_patience);
  Rng train_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  const Eigen::MatrixXd x_cols = x_rows.transpose();
  const Eigen::Index n = x_rows.rows();
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    train_rng.shuffle(order);
    double epoch_loss = 0.0;
    Eigen::Index done = 0;
    while (done < n) {
      const Eigen::Index batch =
          std::min<Eigen::Index>(config.batch_size, n - done);
      Eigen::MatrixXd xb(x_cols.rows(), batch);
      std::vector<int> yb(static_cast<std::size_t>(batch));
      for (Eigen::Index c = 0; c < batch; ++c) {
        const std::size_t src = order[static_cast<std::size_t>(done + c)];
        xb.col(c) = x_cols.col(static_cast<Eigen::Index>(src));
        yb[static_cast<std::size_t>(c)] = y[src];
      }
      model.zero_gradients();
      double batch_loss;
      if (config.dropout > 0.0) {
        const Eigen::MatrixXd mask = nn::dropout_mask(
            MlpModel::kHidden2, batch, config.dropout, train_rng);
        batch_loss = model.backprop(xb, yb, &mask);
      } else {
        batch_loss = model.backprop(xb, yb, nullptr);
      }
      adam.begin_step();
      model.for_each_tensor([&](nn::ParamTensor& t) { adam.update(t); });
      epoch_loss += batch_loss * static_cast<double>(batch);
      done += batch;
    }
    epoch_loss /= static_cast<double>(n);
    if (stopper.update(epoch_loss)) break;
  }
  return model;
}

}  // namespace dorsiflex
