#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dorsiflex/error.hpp"
#include "dorsiflex/rng.hpp"

namespace dorsiflex {

/// One timestamped 6-axis IMU reading: accelerometer in m/s^2 and gyroscope
/// in rad/s along the same three perpendicular axes.
struct SensorSample {
  double t = 0.0;
  double ax = 0.0, ay = 0.0, az = 0.0;
  double gx = 0.0, gy = 0.0, gz = 0.0;
};

enum class Channel { ax, ay, az, gx, gy, gz };

inline constexpr int kChannelCount = 6;
inline constexpr const char* kChannelNames[kChannelCount] = {"ax", "ay", "az",
                                                             "gx", "gy", "gz"};

inline double channel_value(const SensorSample& s, Channel c) {
  switch (c) {
    case Channel::ax: return s.ax;
    case Channel::ay: return s.ay;
    case Channel::az: return s.az;
    case Channel::gx: return s.gx;
    case Channel::gy: return s.gy;
    case Channel::gz: return s.gz;
  }
  throw ParamError("invalid channel");
}

inline double& channel_ref(SensorSample& s, Channel c) {
  switch (c) {
    case Channel::ax: return s.ax;
    case Channel::ay: return s.ay;
    case Channel::az: return s.az;
    case Channel::gx: return s.gx;
    case Channel::gy: return s.gy;
    case Channel::gz: return s.gz;
  }
  throw ParamError("invalid channel");
}

/// Movement classes 1..10 are dorsiflexion; 11..28 are the negative classes
/// (rotations, shakes, resting still).
inline constexpr int kMovementClassCount = 28;
inline constexpr int kLastDorsiflexionClass = 10;

inline bool class_is_dorsiflexion(int movement_class) {
  return movement_class >= 1 && movement_class <= kLastDorsiflexionClass;
}

/// A labeled, contiguous run of samples: one movement instance.
/// The binary label is derived from movement_class, so the two can never
/// disagree.
struct Segment {
  std::vector<SensorSample> samples;
  std::string subject_id;
  int movement_class = 1;
  double sample_rate_hz = 0.0;

  bool is_dorsiflexion() const { return class_is_dorsiflexion(movement_class); }
  std::size_t size() const { return samples.size(); }

  /// Nominal time span: each sample occupies one sampling interval.
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

inline void validate_segment(const Segment& seg) {
  if (seg.samples.size() < 2) {
    throw ParamError("segment needs at least 2 samples, got " +
                     std::to_string(seg.samples.size()));
  }
  if (!(seg.sample_rate_hz > 0.0)) {
    throw ParamError("segment sample rate must be positive");
  }
  if (seg.movement_class < 1 || seg.movement_class > kMovementClassCount) {
    throw ParamError("movement class out of range: " +
                     std::to_string(seg.movement_class));
  }
  double prev = -1.0;
  for (const SensorSample& s : seg.samples) {
    if (!(s.t >= 0.0) || !std::isfinite(s.t)) {
      throw ParamError("sample timestamp must be finite and non-negative");
    }
    if (s.t <= prev) {
      throw ParamError("timestamps must be strictly increasing");
    }
    if (!std::isfinite(s.ax) || !std::isfinite(s.ay) || !std::isfinite(s.az) ||
        !std::isfinite(s.gx) || !std::isfinite(s.gy) || !std::isfinite(s.gz)) {
      throw ParamError("channel values must be finite");
    }
    prev = s.t;
  }
}

enum class MovementKind { dorsiflexion, rotation, shake, still };
enum class Axis { x, y, z };

/// Parameters for the synthetic movement generator.
///
/// amplitude is the peak of the dominant oscillation: rad/s on a gyroscope
/// axis for dorsiflexion and rotation, m/s^2 on an accelerometer axis for
/// shake. movement_class 0 picks a representative class for the kind.
struct SynthesisParams {
  MovementKind kind = MovementKind::dorsiflexion;
  double amplitude = 1.0;
  double frequency_hz = 2.0;
  double duration_s = 2.0;
  double noise_std = 0.0;
  Axis dominant_axis = Axis::x;
  std::uint64_t seed = 0;
  double sample_rate_hz = 50.0;
  int movement_class = 0;
  std::string subject_id = "synthetic";
};

namespace detail {

inline int default_class(MovementKind kind) {
  switch (kind) {
    case MovementKind::dorsiflexion: return 1;
    case MovementKind::rotation: return 11;
    case MovementKind::shake: return 19;
    case MovementKind::still: return 25;
  }
  throw ParamError("invalid movement kind");
}

inline Channel oscillation_channel(MovementKind kind, Axis axis) {
  switch (kind) {
    case MovementKind::dorsiflexion:
      // Wrist flexion shows up on the gyroscope x axis.
      return Channel::gx;
    case MovementKind::rotation:
      if (axis == Axis::x) {
        throw ParamError(
            "rotation oscillates on a gyro axis other than x; pick y or z");
      }
      return axis == Axis::y ? Channel::gy : Channel::gz;
    case MovementKind::shake:
      switch (axis) {
        case Axis::x: return Channel::ax;
        case Axis::y: return Channel::ay;
        case Axis::z: return Channel::az;
      }
      break;
    case MovementKind::still:
      break;
  }
  throw ParamError("kind has no oscillation channel");
}

}  // namespace detail

inline constexpr double kGravity = 9.81;

/// Generate one synthetic movement segment. Pure function of params: the
/// same params (including seed) always produce bitwise-identical output.
inline Segment synthesize(const SynthesisParams& p) {
  if (!(p.amplitude >= 0.0)) throw ParamError("amplitude must be >= 0");
  if (!(p.frequency_hz > 0.0)) throw ParamError("frequency must be > 0");
  if (!(p.duration_s > 0.0)) throw ParamError("duration must be > 0");
  if (!(p.noise_std >= 0.0)) throw ParamError("noise_std must be >= 0");
  if (!(p.sample_rate_hz > 0.0)) throw ParamError("sample rate must be > 0");

  const auto n =
      static_cast<std::size_t>(std::llround(p.duration_s * p.sample_rate_hz));
  if (n < 2) throw ParamError("duration too short for the sample rate");

  Segment seg;
  seg.subject_id = p.subject_id;
  seg.movement_class =
      p.movement_class == 0 ? detail::default_class(p.kind) : p.movement_class;
  seg.sample_rate_hz = p.sample_rate_hz;
  seg.samples.resize(n);

  Rng rng(p.seed);
  const bool oscillates = p.kind != MovementKind::still;
  const Channel osc_channel =
      oscillates ? detail::oscillation_channel(p.kind, p.dominant_axis)
                 : Channel::ax;

  for (std::size_t i = 0; i < n; ++i) {
    SensorSample& s = seg.samples[i];
    s.t = static_cast<double>(i) / p.sample_rate_hz;
    if (oscillates) {
      channel_ref(s, osc_channel) +=
          p.amplitude * std::sin(2.0 * 3.14159265358979323846 *
                                 p.frequency_hz * s.t);
    }
    if (p.kind == MovementKind::dorsiflexion) {
      s.az += kGravity;  // holding posture: gravity along one accel axis
    }
    if (p.noise_std > 0.0) {
      s.ax += rng.normal(0.0, p.noise_std);
      s.ay += rng.normal(0.0, p.noise_std);
      s.az += rng.normal(0.0, p.noise_std);
      s.gx += rng.normal(0.0, p.noise_std);
      s.gy += rng.normal(0.0, p.noise_std);
      s.gz += rng.normal(0.0, p.noise_std);
    }
  }
  validate_segment(seg);
  return seg;
}

/// Slice a segment into fixed-length windows at a fixed stride. Window k
/// covers [k*stride, k*stride + length) relative to the first sample; any
/// trailing span that cannot fit a full window is dropped.
inline std::vector<Segment> window(const Segment& seg, double length_s,
                                   double stride_s) {
  if (!(length_s > 0.0)) throw ParamError("window length must be > 0");
  if (!(stride_s > 0.0)) throw ParamError("window stride must be > 0");
  std::vector<Segment> out;
  if (seg.samples.empty()) return out;

  constexpr double kEps = 1e-9;
  const double t0 = seg.samples.front().t;
  const double span = seg.duration_s();
  std::size_t lo = 0;
  for (int k = 0;; ++k) {
    const double start = k * stride_s;
    if (start + length_s > span + kEps) break;
    while (lo < seg.samples.size() && seg.samples[lo].t - t0 < start - kEps) {
      ++lo;
    }
    std::size_t hi = lo;
    while (hi < seg.samples.size() &&
           seg.samples[hi].t - t0 < start + length_s - kEps) {
      ++hi;
    }
    if (hi - lo < 2) continue;  // gap in the data, no usable window here
    Segment w;
    w.samples.assign(seg.samples.begin() + static_cast<std::ptrdiff_t>(lo),
                     seg.samples.begin() + static_cast<std::ptrdiff_t>(hi));
    w.subject_id = seg.subject_id;
    w.movement_class = seg.movement_class;
    w.sample_rate_hz = seg.sample_rate_hz;
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace dorsiflex
