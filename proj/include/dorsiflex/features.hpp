#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dorsiflex/error.hpp"
#include "dorsiflex/signal.hpp"

namespace dorsiflex {

inline constexpr int kStatCount = 7;
inline constexpr const char* kStatNames[kStatCount] = {
    "mean", "min", "max", "std", "var", "skew", "kurtosis"};

/// 6 channels x 7 low-level descriptors.
inline constexpr int kFeatureCount = kChannelCount * kStatCount;

using FeatureVector = std::array<double, kFeatureCount>;

/// Canonical feature names, "<channel>.<stat>", ordered channel-major:
/// ax.mean, ax.min, ..., gz.kurtosis.
inline const std::array<std::string, kFeatureCount>& feature_names() {
  static const std::array<std::string, kFeatureCount> names = [] {
    std::array<std::string, kFeatureCount> out;
    for (int c = 0; c < kChannelCount; ++c) {
      for (int s = 0; s < kStatCount; ++s) {
        out[static_cast<std::size_t>(c * kStatCount + s)] =
            std::string(kChannelNames[c]) + "." + kStatNames[s];
      }
    }
    return out;
  }();
  return names;
}

/// Per-channel descriptors over one signal. Population moments throughout:
/// var = m2, skew = m3 / sigma^3, kurtosis = m4 / sigma^4 - 3 (excess).
/// A zero-variance channel gets skew = kurtosis = 0.
struct ChannelStats {
  double mean, min, max, std_dev, var, skew, kurtosis;
};

inline ChannelStats channel_stats(std::span<const double> x) {
  if (x.size() < 2) throw ParamError("need at least 2 samples for statistics");
  const double n = static_cast<double>(x.size());
  double sum = 0.0;
  double lo = x[0], hi = x[0];
  for (double v : x) {
    sum += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  // An exactly constant signal must hit the zero-variance rules even when
  // the accumulated mean is an ulp off the constant.
  if (lo == hi) {
    return ChannelStats{lo, lo, hi, 0.0, 0.0, 0.0, 0.0};
  }
  const double mean = sum / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  ChannelStats s{};
  s.mean = mean;
  s.min = lo;
  s.max = hi;
  s.var = m2;
  s.std_dev = std::sqrt(m2);
  if (m2 > 0.0) {
    s.skew = m3 / (s.std_dev * s.std_dev * s.std_dev);
    s.kurtosis = m4 / (m2 * m2) - 3.0;
  } else {
    s.skew = 0.0;
    s.kurtosis = 0.0;
  }
  return s;
}

namespace detail {

inline std::vector<double> channel_series(const Segment& seg, Channel c) {
  std::vector<double> x;
  x.reserve(seg.samples.size());
  for (const SensorSample& s : seg.samples) x.push_back(channel_value(s, c));
  return x;
}

}  // namespace detail

/// Compute the 42-descriptor feature vector for one segment.
inline FeatureVector extract(const Segment& seg) {
  if (seg.samples.size() < 2) {
    throw ParamError("segment too short for feature extraction");
  }
  FeatureVector out{};
  for (int c = 0; c < kChannelCount; ++c) {
    const std::vector<double> x =
        detail::channel_series(seg, static_cast<Channel>(c));
    const ChannelStats s = channel_stats(x);
    const double vals[kStatCount] = {s.mean, s.min,  s.max,     s.std_dev,
                                     s.var,  s.skew, s.kurtosis};
    for (int k = 0; k < kStatCount; ++k) {
      out[static_cast<std::size_t>(c * kStatCount + k)] = vals[k];
    }
  }
  return out;
}

inline Eigen::MatrixXd feature_matrix(const std::vector<Segment>& segments) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(segments.size()), kFeatureCount);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const FeatureVector f = extract(segments[static_cast<std::size_t>(i)]);
    for (int j = 0; j < kFeatureCount; ++j) m(i, j) = f[static_cast<std::size_t>(j)];
  }
  return m;
}

/// Min-max normalization constants learned from a training set. apply()
/// clamps to [0, 1] so unseen test-time values stay bounded; a feature that
/// was constant during fit always maps to 0.
class Normalizer {
 public:
  Normalizer() = default;

  static Normalizer fit(const Eigen::MatrixXd& training) {
    if (training.rows() < 1) {
      throw ParamError("cannot fit normalizer on an empty set");
    }
    Normalizer nz;
    nz.lo_ = training.colwise().minCoeff();
    nz.hi_ = training.colwise().maxCoeff();
    return nz;
  }

  Eigen::RowVectorXd apply(const Eigen::RowVectorXd& v) const {
    if (v.size() != lo_.size()) {
      throw ParamError("normalizer dimension mismatch");
    }
    Eigen::RowVectorXd out(v.size());
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      const double range = hi_[j] - lo_[j];
      out[j] = range > 0.0 ? std::clamp((v[j] - lo_[j]) / range, 0.0, 1.0)
                           : 0.0;
    }
    return out;
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& m) const {
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      out.row(i) = apply(Eigen::RowVectorXd(m.row(i)));
    }
    return out;
  }

  Eigen::Index size() const { return lo_.size(); }
  const Eigen::RowVectorXd& lower() const { return lo_; }
  const Eigen::RowVectorXd& upper() const { return hi_; }

  static Normalizer from_bounds(Eigen::RowVectorXd lo, Eigen::RowVectorXd hi) {
    if (lo.size() != hi.size()) throw ParamError("bounds size mismatch");
    for (Eigen::Index j = 0; j < lo.size(); ++j) {
      if (lo[j] > hi[j]) throw ParamError("normalizer lower bound above upper");
    }
    Normalizer nz;
    nz.lo_ = std::move(lo);
    nz.hi_ = std::move(hi);
    return nz;
  }

 private:
  Eigen::RowVectorXd lo_, hi_;
};

/// Range-of-motion indicator: population standard deviation of the
/// gyroscope x axis over the segment.
inline double rom_indicator(const Segment& seg) {
  if (seg.samples.size() < 2) throw ParamError("segment too short");
  return channel_stats(detail::channel_series(seg, Channel::gx)).std_dev;
}

/// Count sign changes between consecutive samples. Exact zeros adopt the
/// sign of the previous nonzero sample, so they never create a crossing on
/// their own.
inline int zero_crossings(std::span<const double> signal) {
  int count = 0;
  int prev_sign = 0;
  for (double v : signal) {
    const int sign = v > 0.0 ? 1 : (v < 0.0 ? -1 : 0);
    if (sign != 0) {
      if (prev_sign != 0 && sign != prev_sign) ++count;
      prev_sign = sign;
    }
  }
  return count;
}

/// Zero crossings of one channel per second of nominal segment duration.
inline double crossing_rate(const Segment& seg, Channel channel) {
  if (seg.samples.size() < 2) throw ParamError("segment too short");
  const std::vector<double> x = detail::channel_series(seg, channel);
  return zero_crossings(x) / seg.duration_s();
}

/// Frequency of the largest-magnitude nonzero bin of the DFT of the
/// mean-removed signal. Returns 0 when no nonzero bin stands out (pure DC).
inline double dominant_frequency(std::span<const double> signal,
                                 double sample_rate_hz) {
  if (signal.size() < 4) throw ParamError("need at least 4 samples for a DFT");
  if (!(sample_rate_hz > 0.0)) throw ParamError("sample rate must be > 0");
  const std::size_t n = signal.size();
  double mean = 0.0;
  for (double v : signal) mean += v;
  mean /= static_cast<double>(n);

  const double two_pi = 2.0 * 3.14159265358979323846;
  double best_mag2 = 0.0;
  std::size_t best_bin = 0;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double angle = two_pi * static_cast<double>(k) *
                           static_cast<double>(i) / static_cast<double>(n);
      const double v = signal[i] - mean;
      re += v * std::cos(angle);
      im -= v * std::sin(angle);
    }
    const double mag2 = re * re + im * im;
    if (mag2 > best_mag2) {
      best_mag2 = mag2;
      best_bin = k;
    }
  }
  if (best_bin == 0 || best_mag2 < 1e-18) return 0.0;
  return static_cast<double>(best_bin) * sample_rate_hz /
         static_cast<double>(n);
}

}  // namespace dorsiflex
