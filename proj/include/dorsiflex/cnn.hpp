#pragma once

#include <Eigen/Dense>
#include <array>
#include <numeric>
#include <vector>

#include "dorsiflex/error.hpp"
#include "dorsiflex/knn.hpp"
#include "dorsiflex/nn.hpp"
#include "dorsiflex/signal.hpp"

namespace dorsiflex {

/// Fixed-shape input for the convolutional model: 128 time steps by the 6
/// sensor channels, in [ax, ay, az, gx, gy, gz] order.
struct RawWindow {
  Eigen::MatrixXd values;  // kWindowLength x kChannelCount
};

inline constexpr int kWindowLength = 128;

inline void validate_window(const RawWindow& w) {
  if (w.values.rows() != kWindowLength || w.values.cols() != kChannelCount) {
    throw ParamError("raw window must be 128 x 6");
  }
  if (!w.values.allFinite()) throw ParamError("raw window must be finite");
}

/// Linearly interpolate every channel of a segment onto 128 uniformly
/// spaced time points spanning the segment.
inline RawWindow resample_to_window(const Segment& seg) {
  if (seg.samples.size() < 2) throw ParamError("segment too short");
  RawWindow w;
  w.values.resize(kWindowLength, kChannelCount);
  const double t0 = seg.samples.front().t;
  const double t1 = seg.samples.back().t;
  const double step = (t1 - t0) / (kWindowLength - 1);
  std::size_t hi = 1;
  for (int j = 0; j < kWindowLength; ++j) {
    const double t = j == kWindowLength - 1 ? t1 : t0 + step * j;
    while (hi + 1 < seg.samples.size() && seg.samples[hi].t < t) ++hi;
    const SensorSample& a = seg.samples[hi - 1];
    const SensorSample& b = seg.samples[hi];
    const double alpha = (t - a.t) / (b.t - a.t);
    for (int c = 0; c < kChannelCount; ++c) {
      const double va = channel_value(a, static_cast<Channel>(c));
      const double vb = channel_value(b, static_cast<Channel>(c));
      w.values(j, c) = va + alpha * (vb - va);
    }
  }
  return w;
}

/// 1-D convolutional classifier on raw windows:
/// conv(196 filters, kernel 16 across all 6 channels, valid, ReLU)
/// -> maxpool(4) -> flatten -> dense(1024, ReLU) -> dense(2, softmax).
/// Shape chain: 128x6 -> 113x196 -> 28x196 -> 5488 -> 1024 -> 2.
class CnnModel {
 public:
  static constexpr int kFilters = 196;
  static constexpr int kKernel = 16;
  static constexpr int kPool = 4;
  static constexpr int kConvOut = kWindowLength - kKernel + 1;  // 113
  static constexpr int kPooledOut = kConvOut / kPool;           // 28
  static constexpr int kFlattened = kFilters * kPooledOut;      // 5488
  static constexpr int kDense = 1024;
  static constexpr int kClasses = 2;
  static constexpr int kPatch = kKernel * kChannelCount;  // 96

  CnnModel() = default;

  explicit CnnModel(Rng& rng) {
    conv_.init(kPatch, kFilters, rng);
    dense1_.init(kFlattened, kDense, rng);
    dense2_.init(kDense, kClasses, rng);
  }

  std::array<double, kClasses> probabilities(const RawWindow& window) const {
    validate_window(window);
    Eigen::MatrixXd cols;
    const Eigen::MatrixXd logits = forward_logits(batch_columns({window}, &cols));
    const Eigen::MatrixXd p = nn::softmax(logits);
    return {p(0, 0), p(1, 0)};
  }

  Prediction predict(const RawWindow& window) const {
    const auto p = probabilities(window);
    return Prediction{p[1] >= p[0] ? 1 : 0, p[1]};
  }

  double loss(const std::vector<RawWindow>& windows,
              const std::vector<int>& y) const {
    Eigen::MatrixXd cols;
    const Eigen::MatrixXd logits = forward_logits(batch_columns(windows, &cols));
    return nn::softmax_cross_entropy(logits, y).first;
  }

  std::pair<double, std::vector<double>> loss_and_gradient(
      const std::vector<RawWindow>& windows, const std::vector<int>& y) {
    zero_gradients();
    const double loss_value = backprop(windows, y);
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

  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    for (nn::ParamTensor* t : tensors()) fn(*t);
  }

  void zero_gradients() {
    for (nn::ParamTensor* t : tensors()) t->grad.setZero();
  }

  double backprop(const std::vector<RawWindow>& windows,
                  const std::vector<int>& y) {
    const auto batch = static_cast<Eigen::Index>(windows.size());
    Eigen::MatrixXd cols;  // kPatch x (kConvOut * batch)
    batch_columns(windows, &cols);

    const Eigen::MatrixXd conv_z =
        (conv_.w.value * cols).colwise() + Eigen::VectorXd(conv_.b.value.col(0));
    const Eigen::MatrixXd conv_a = nn::relu(conv_z);

    Eigen::MatrixXd flat(kFlattened, batch);
    Eigen::MatrixXd argmax(kFlattened, batch);  // pooled-from column index
    pool_forward(conv_a, batch, flat, argmax);

    const Eigen::MatrixXd z1 = dense1_.forward(flat);
    const Eigen::MatrixXd a1 = nn::relu(z1);
    const Eigen::MatrixXd logits = dense2_.forward(a1);

    auto [loss_value, dlogits] = nn::softmax_cross_entropy(logits, y);
    const Eigen::MatrixXd da1 = dense2_.backward(a1, dlogits);
    const Eigen::MatrixXd dz1 = nn::relu_backward(z1, da1);
    const Eigen::MatrixXd dflat = dense1_.backward(flat, dz1);

    Eigen::MatrixXd dconv_a = Eigen::MatrixXd::Zero(kFilters, conv_a.cols());
    pool_backward(dflat, argmax, batch, dconv_a);
    const Eigen::MatrixXd dconv_z = nn::relu_backward(conv_z, dconv_a);
    conv_.w.grad.noalias() += dconv_z * cols.transpose();
    conv_.b.grad.col(0).noalias() += dconv_z.rowwise().sum();
    return loss_value;
  }

 private:
  /// im2col over the whole batch: column (s * kConvOut + j) holds window s's
  /// patch starting at time j, channel-major ([ch0 t0..t15, ch1 t0..t15...]).
  static const Eigen::MatrixXd& batch_columns(
      const std::vector<RawWindow>& windows, Eigen::MatrixXd* storage) {
    const auto batch = static_cast<Eigen::Index>(windows.size());
    if (batch == 0) throw ParamError("empty window batch");
    storage->resize(kPatch, kConvOut * batch);
    for (Eigen::Index s = 0; s < batch; ++s) {
      const RawWindow& w = windows[static_cast<std::size_t>(s)];
      if (w.values.rows() != kWindowLength ||
          w.values.cols() != kChannelCount) {
        throw ParamError("raw window must be 128 x 6");
      }
      for (int j = 0; j < kConvOut; ++j) {
        const Eigen::Index col = s * kConvOut + j;
        for (int c = 0; c < kChannelCount; ++c) {
          for (int k = 0; k < kKernel; ++k) {
            (*storage)(c * kKernel + k, col) = w.values(j + k, c);
          }
        }
      }
    }
    return *storage;
  }

  Eigen::MatrixXd forward_logits(const Eigen::MatrixXd& cols) const {
    const Eigen::Index batch = cols.cols() / kConvOut;
    const Eigen::MatrixXd conv_a = nn::relu(
        (conv_.w.value * cols).colwise() + Eigen::VectorXd(conv_.b.value.col(0)));
    Eigen::MatrixXd flat(kFlattened, batch);
    Eigen::MatrixXd argmax(kFlattened, batch);
    pool_forward(conv_a, batch, flat, argmax);
    const Eigen::MatrixXd a1 = nn::relu(dense1_.forward(flat));
    return dense2_.forward(a1);
  }

  /// Max pool over non-overlapping groups of kPool conv positions. The
  /// flattened index is filter-major: f * kPooledOut + g.
  static void pool_forward(const Eigen::MatrixXd& conv_a, Eigen::Index batch,
                           Eigen::MatrixXd& flat, Eigen::MatrixXd& argmax) {
    for (Eigen::Index s = 0; s < batch; ++s) {
      for (int g = 0; g < kPooledOut; ++g) {
        const Eigen::Index base = s * kConvOut + g * kPool;
        for (int f = 0; f < kFilters; ++f) {
          double best = conv_a(f, base);
          Eigen::Index best_col = base;
          for (int o = 1; o < kPool; ++o) {
            if (conv_a(f, base + o) > best) {
              best = conv_a(f, base + o);
              best_col = base + o;
            }
          }
          flat(f * kPooledOut + g, s) = best;
          argmax(f * kPooledOut + g, s) = static_cast<double>(best_col);
        }
      }
    }
  }

  static void pool_backward(const Eigen::MatrixXd& dflat,
                            const Eigen::MatrixXd& argmax, Eigen::Index batch,
                            Eigen::MatrixXd& dconv_a) {
    for (Eigen::Index s = 0; s < batch; ++s) {
      for (int f = 0; f < kFilters; ++f) {
        for (int g = 0; g < kPooledOut; ++g) {
          const auto col =
              static_cast<Eigen::Index>(argmax(f * kPooledOut + g, s));
          dconv_a(f, col) += dflat(f * kPooledOut + g, s);
        }
      }
    }
  }

  std::vector<const nn::ParamTensor*> tensors() const {
    return {&conv_.w, &conv_.b, &dense1_.w, &dense1_.b, &dense2_.w,
            &dense2_.b};
  }
  std::vector<nn::ParamTensor*> tensors() {
    return {&conv_.w, &conv_.b, &dense1_.w, &dense1_.b, &dense2_.w,
            &dense2_.b};
  }

  friend CnnModel cnn_train(const std::vector<RawWindow>&,
                            const std::vector<int>&, const TrainConfig&);

  nn::DenseLayer conv_;    // weights kFilters x kPatch
  nn::DenseLayer dense1_;  // kDense x kFlattened
  nn::DenseLayer dense2_;  // kClasses x kDense
};

/// Train the convolutional model with ADAM on shuffled mini-batches.
inline CnnModel cnn_train(const std::vector<RawWindow>& windows,
                          const std::vector<int>& y,
                          const TrainConfig& config = {}) {
  if (windows.empty()) throw ParamError("empty training set");
  if (y.size() != windows.size()) {
    throw ParamError("label count does not match window count");
  }
  if (config.batch_size < 1) throw ParamError("batch size must be >= 1");
  for (const RawWindow& w : windows) validate_window(w);

  Rng init_rng(config.seed);
  CnnModel model(init_rng);
  nn::Adam adam(config);
  nn::EarlyStop stopper(config.early_stop_min_improvement,
                        config.early_stop_patience);
  Rng train_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  const std::size_t n = windows.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    train_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t done = 0;
    while (done < n) {
      const std::size_t batch =
          std::min<std::size_t>(static_cast<std::size_t>(config.batch_size),
                                n - done);
      std::vector<RawWindow> wb(batch);
      std::vector<int> yb(batch);
      for (std::size_t c = 0; c < batch; ++c) {
        wb[c] = windows[order[done + c]];
        yb[c] = y[order[done + c]];
      }
      model.zero_gradients();
      const double batch_loss = model.backprop(wb, yb);
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
