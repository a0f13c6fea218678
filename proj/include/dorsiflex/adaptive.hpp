#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dorsiflex/error.hpp"
#include "dorsiflex/rng.hpp"
#include "dorsiflex/text.hpp"

namespace dorsiflex {

/// One detected shake: the two live indicator values plus the classifier
/// verdict at detection time.
struct ShakeEvent {
  double t = 0.0;
  double rom_value = 0.0;    // std of the gyro x axis over the window
  double speed_value = 0.0;  // zero crossings per second
  bool dorsiflexion = false;
};

struct ThresholdBounds {
  double floor = 0.0;
  double ceiling = 0.0;
};

inline constexpr int kEpochLength = 10;
inline constexpr double kRaiseSuccessRate = 0.9;
inline constexpr double kLowerSuccessRate = 0.6;
inline constexpr int kCalibrationShakes = 5;
inline constexpr double kCalibrationFactor = 0.9;

inline constexpr double kDefaultStepFraction = 0.1;
inline constexpr ThresholdBounds kDefaultRomBounds{0.1, 10.0};
inline constexpr ThresholdBounds kDefaultSpeedBounds{0.5, 10.0};

struct EpochEntry {
  double rom_value = 0.0;
  double speed_value = 0.0;
  bool rom_ok = false;
  bool speed_ok = false;
};

/// Difficulty thresholds plus the rolling window of outcomes for the
/// current 10-shake epoch. Epochs are disjoint: the window clears after
/// every evaluation, so one burst adjusts each threshold at most once.
struct DifficultyState {
  double rom_threshold = 0.0;
  double speed_threshold = 0.0;
  double step_fraction = kDefaultStepFraction;
  ThresholdBounds rom_bounds = kDefaultRomBounds;
  ThresholdBounds speed_bounds = kDefaultSpeedBounds;
  bool calibrated = false;
  std::vector<EpochEntry> history;  // at most kEpochLength entries
};

enum class AdjustmentDirection { raised, lowered, held };

inline const char* adjustment_name(AdjustmentDirection d) {
  switch (d) {
    case AdjustmentDirection::raised: return "raised";
    case AdjustmentDirection::lowered: return "lowered";
    case AdjustmentDirection::held: return "held";
  }
  throw ParamError("invalid adjustment direction");
}

/// End-of-epoch decision for both indicators.
struct Adjustment {
  AdjustmentDirection rom = AdjustmentDirection::held;
  AdjustmentDirection speed = AdjustmentDirection::held;
  double rom_before = 0.0, rom_after = 0.0;
  double speed_before = 0.0, speed_after = 0.0;
};

struct CalibrationOptions {
  double step_fraction = kDefaultStepFraction;
  ThresholdBounds rom_bounds = kDefaultRomBounds;
  ThresholdBounds speed_bounds = kDefaultSpeedBounds;
};

namespace detail {

inline double clamp_threshold(double v, const ThresholdBounds& b) {
  return std::clamp(v, b.floor, b.ceiling);
}

inline double median5(std::array<double, kCalibrationShakes> v) {
  std::sort(v.begin(), v.end());
  return v[kCalibrationShakes / 2];
}

}  // namespace detail

/// Build a calibrated state from the player's first five dorsiflexion
/// shakes: each threshold starts at 0.9 times the median indicator value,
/// so the game opens winnable at the demonstrated level.
inline DifficultyState calibrate(std::span<const ShakeEvent> first_five,
                                 const CalibrationOptions& options = {}) {
  if (first_five.size() != kCalibrationShakes) {
    throw ParamError("calibration needs exactly " +
                     std::to_string(kCalibrationShakes) +
                     " dorsiflexion shakes, got " +
                     std::to_string(first_five.size()));
  }
  std::array<double, kCalibrationShakes> rom{}, speed{};
  for (std::size_t i = 0; i < first_five.size(); ++i) {
    const ShakeEvent& e = first_five[i];
    if (!e.dorsiflexion) {
      throw ParamError("calibration shakes must all be dorsiflexion");
    }
    if (!(e.rom_value >= 0.0) || !(e.speed_value >= 0.0) ||
        !std::isfinite(e.rom_value) || !std::isfinite(e.speed_value)) {
      throw ParamError("indicator values must be finite and >= 0");
    }
    rom[i] = e.rom_value;
    speed[i] = e.speed_value;
  }
  if (!(options.step_fraction > 0.0) || !(options.step_fraction < 1.0)) {
    throw ParamError("step fraction must lie in (0, 1)");
  }
  DifficultyState state;
  state.step_fraction = options.step_fraction;
  state.rom_bounds = options.rom_bounds;
  state.speed_bounds = options.speed_bounds;
  state.rom_threshold = detail::clamp_threshold(
      kCalibrationFactor * detail::median5(rom), options.rom_bounds);
  state.speed_threshold = detail::clamp_threshold(
      kCalibrationFactor * detail::median5(speed), options.speed_bounds);
  state.calibrated = true;
  return state;
}

namespace detail {

struct IndicatorEpoch {
  int successes = 0;
  double min_success = 0.0;
};

inline IndicatorEpoch summarize(const std::vector<EpochEntry>& history,
                                bool use_rom) {
  IndicatorEpoch e;
  bool first = true;
  for (const EpochEntry& entry : history) {
    const bool ok = use_rom ? entry.rom_ok : entry.speed_ok;
    const double value = use_rom ? entry.rom_value : entry.speed_value;
    if (ok) {
      ++e.successes;
      e.min_success = first ? value : std::min(e.min_success, value);
      first = false;
    }
  }
  return e;
}

/// Epoch rule: raise on >= 90% success, lower on < 60%, hold otherwise.
/// A raise never moves the bar past the lowest indicator value that
/// actually succeeded this epoch, so a constant-ability player is never
/// pushed into an unwinnable epoch.
inline AdjustmentDirection adjust_threshold(double& threshold,
                                            const IndicatorEpoch& epoch,
                                            double step_fraction,
                                            const ThresholdBounds& bounds) {
  const double rate =
      static_cast<double>(epoch.successes) / static_cast<double>(kEpochLength);
  const double before = threshold;
  if (rate >= kRaiseSuccessRate) {
    threshold = clamp_threshold(
        std::min(threshold * (1.0 + step_fraction), epoch.min_success),
        bounds);
    return threshold > before ? AdjustmentDirection::raised
                              : AdjustmentDirection::held;
  }
  if (rate < kLowerSuccessRate) {
    threshold = clamp_threshold(threshold * (1.0 - step_fraction), bounds);
    return threshold < before ? AdjustmentDirection::lowered
                              : AdjustmentDirection::held;
  }
  return AdjustmentDirection::held;
}

}  // namespace detail

/// Record one dorsiflexion-positive shake. Success per indicator means the
/// value reached its threshold. When the tenth outcome lands, both
/// thresholds are adjusted independently and the window clears.
inline std::pair<DifficultyState, std::optional<Adjustment>> record_shake(
    const DifficultyState& state, const ShakeEvent& event) {
  if (!state.calibrated) {
    throw ParamError("difficulty state is not calibrated");
  }
  if (!event.dorsiflexion) {
    throw ParamError("only dorsiflexion shakes are recorded");
  }
  if (!(event.rom_value >= 0.0) || !(event.speed_value >= 0.0)) {
    throw ParamError("indicator values must be >= 0");
  }
  DifficultyState next = state;
  EpochEntry entry;
  entry.rom_value = event.rom_value;
  entry.speed_value = event.speed_value;
  entry.rom_ok = event.rom_value >= state.rom_threshold;
  entry.speed_ok = event.speed_value >= state.speed_threshold;
  next.history.push_back(entry);

  if (next.history.size() < kEpochLength) {
    return {std::move(next), std::nullopt};
  }

  Adjustment adj;
  adj.rom_before = next.rom_threshold;
  adj.speed_before = next.speed_threshold;
  adj.rom = detail::adjust_threshold(
      next.rom_threshold, detail::summarize(next.history, true),
      next.step_fraction, next.rom_bounds);
  adj.speed = detail::adjust_threshold(
      next.speed_threshold, detail::summarize(next.history, false),
      next.step_fraction, next.speed_bounds);
  adj.rom_after = next.rom_threshold;
  adj.speed_after = next.speed_threshold;
  next.history.clear();
  return {std::move(next), adj};
}

enum class SpeedLevel { slow, medium, fast };

inline const char* speed_level_name(SpeedLevel level) {
  switch (level) {
    case SpeedLevel::slow: return "slow";
    case SpeedLevel::medium: return "medium";
    case SpeedLevel::fast: return "fast";
  }
  throw ParamError("invalid speed level");
}

struct SpeedCuts {
  double slow_medium = 2.0;  // crossings/s
  double medium_fast = 5.0;
};

/// Half-open bands: [0, L1) slow, [L1, L2) medium, [L2, inf) fast.
inline SpeedLevel speed_level(double crossings_per_second,
                              const SpeedCuts& cuts = {}) {
  if (!(crossings_per_second >= 0.0)) {
    throw ParamError("crossing rate must be >= 0");
  }
  if (!(cuts.slow_medium < cuts.medium_fast)) {
    throw ParamError("speed cut points must be increasing");
  }
  if (crossings_per_second < cuts.slow_medium) return SpeedLevel::slow;
  if (crossings_per_second < cuts.medium_fast) return SpeedLevel::medium;
  return SpeedLevel::fast;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;

  double predict(double x) const { return slope * x + intercept; }
};

/// Ordinary least squares of ordinal restriction level against the ROM
/// indicator.
inline LinearFit rom_regression_fit(std::span<const double> indicator_values,
                                    std::span<const double> targets) {
  if (indicator_values.size() != targets.size()) {
    throw ParamError("length mismatch");
  }
  const std::size_t n = indicator_values.size();
  if (n < 2) throw ParamError("need at least 2 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += indicator_values[i];
    my += targets[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = indicator_values[i] - mx;
    sxx += dx * dx;
    sxy += dx * (targets[i] - my);
  }
  if (sxx == 0.0) {
    throw ParamError("indicator values are all equal; fit is degenerate");
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

/// Leave-one-out RMSE of the linear ROM model: fit on all points but one,
/// predict the held-out point, aggregate.
inline double rom_regression_rmse(std::span<const double> indicator_values,
                                  std::span<const double> targets) {
  const std::size_t n = indicator_values.size();
  if (n != targets.size()) throw ParamError("length mismatch");
  if (n < 3) throw ParamError("leave-one-out needs at least 3 points");
  std::vector<double> fold_x(n - 1), fold_y(n - 1);
  double sq_sum = 0.0;
  for (std::size_t held = 0; held < n; ++held) {
    std::size_t w = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == held) continue;
      fold_x[w] = indicator_values[i];
      fold_y[w] = targets[i];
      ++w;
    }
    const LinearFit fit = rom_regression_fit(fold_x, fold_y);
    const double err = fit.predict(indicator_values[held]) - targets[held];
    sq_sum += err * err;
  }
  return std::sqrt(sq_sum / static_cast<double>(n));
}

/// Simulated player: emits indicator values around fixed capabilities and
/// attempts each 1 Hz prompt with the given probability.
struct PlayerModel {
  double rom_capability = 2.0;
  double speed_capability = 4.0;
  double noise_std = 0.0;
  double compliance = 1.0;
  std::uint64_t seed = 0;
};

struct SessionRecord {
  double t = 0.0;
  double rom_value = 0.0;
  double speed_value = 0.0;
  bool dorsiflexion = true;
  double rom_threshold = 0.0;    // after processing this shake
  double speed_threshold = 0.0;
};

struct Session {
  std::vector<SessionRecord> records;
  std::vector<Adjustment> adjustments;
  DifficultyState final_state;
};

/// Run a simulated session of n_shakes 1 Hz prompts against a calibrated
/// state. Deterministic for a given player seed.
inline Session simulate_session(const PlayerModel& player,
                                const DifficultyState& initial_state,
                                int n_shakes) {
  if (!initial_state.calibrated) {
    throw ParamError("difficulty state is not calibrated");
  }
  if (n_shakes < kEpochLength) {
    throw ParamError("session must cover at least one epoch of " +
                     std::to_string(kEpochLength) + " shakes");
  }
  if (!(player.rom_capability > 0.0) || !(player.speed_capability > 0.0)) {
    throw ParamError("player capabilities must be > 0");
  }
  if (player.compliance < 0.0 || player.compliance > 1.0) {
    throw ParamError("compliance must lie in [0, 1]");
  }
  Rng rng(player.seed);
  Session session;
  session.final_state = initial_state;
  for (int i = 0; i < n_shakes; ++i) {
    const bool attempts = rng.uniform() < player.compliance;
    if (!attempts) continue;
    ShakeEvent event;
    event.t = static_cast<double>(i);
    event.dorsiflexion = true;
    event.rom_value =
        std::max(0.0, player.rom_capability + player.noise_std * rng.normal());
    event.speed_value = std::max(
        0.0, player.speed_capability + player.noise_std * rng.normal());
    auto [next, adjustment] = record_shake(session.final_state, event);
    session.final_state = std::move(next);
    if (adjustment) session.adjustments.push_back(*adjustment);
    SessionRecord rec;
    rec.t = event.t;
    rec.rom_value = event.rom_value;
    rec.speed_value = event.speed_value;
    rec.dorsiflexion = true;
    rec.rom_threshold = session.final_state.rom_threshold;
    rec.speed_threshold = session.final_state.speed_threshold;
    session.records.push_back(rec);
  }
  return session;
}

inline constexpr const char* kSessionLogHeader =
    "t,rom_value,speed_value,dorsiflexion,rom_threshold,speed_threshold";

inline void write_session_log(const std::string& path,
                              const std::vector<SessionRecord>& records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << kSessionLogHeader << '\n';
  for (const SessionRecord& r : records) {
    out << format_double(r.t) << ',' << format_double(r.rom_value) << ','
        << format_double(r.speed_value) << ',' << (r.dorsiflexion ? 1 : 0)
        << ',' << format_double(r.rom_threshold) << ','
        << format_double(r.speed_threshold) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

inline constexpr const char* kShakeEventHeader =
    "t,rom_value,speed_value,dorsiflexion";

/// Shake-event CSV: dorsiflexion column is 0 or 1.
inline std::vector<ShakeEvent> read_shake_events(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != kShakeEventHeader) {
    throw ParseError(path + ":1: expected header '" +
                     std::string(kShakeEventHeader) + "'");
  }
  std::vector<ShakeEvent> events;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    const std::string ctx = path + ":" + std::to_string(line_no);
    if (cells.size() != 4) {
      throw ParseError(ctx + ": expected 4 columns, got " +
                       std::to_string(cells.size()));
    }
    ShakeEvent e;
    e.t = parse_double(cells[0], ctx);
    e.rom_value = parse_double(cells[1], ctx);
    e.speed_value = parse_double(cells[2], ctx);
    e.dorsiflexion = parse_int(cells[3], ctx) != 0;
    events.push_back(e);
  }
  return events;
}

inline void write_shake_events(const std::string& path,
                               const std::vector<ShakeEvent>& events) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << kShakeEventHeader << '\n';
  for (const ShakeEvent& e : events) {
    out << format_double(e.t) << ',' << format_double(e.rom_value) << ','
        << format_double(e.speed_value) << ',' << (e.dorsiflexion ? 1 : 0)
        << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

inline constexpr const char* kStateFormatTag = "dorsiflex-state v1";

/// Versioned text snapshot of a difficulty state, editable by hand or via
/// the CLI to override thresholds.
inline void save_state(const DifficultyState& state, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << kStateFormatTag << '\n';
  out << "rom_threshold = " << format_double(state.rom_threshold) << '\n';
  out << "speed_threshold = " << format_double(state.speed_threshold) << '\n';
  out << "step_fraction = " << format_double(state.step_fraction) << '\n';
  out << "rom_floor = " << format_double(state.rom_bounds.floor) << '\n';
  out << "rom_ceiling = " << format_double(state.rom_bounds.ceiling) << '\n';
  out << "speed_floor = " << format_double(state.speed_bounds.floor) << '\n';
  out << "speed_ceiling = " << format_double(state.speed_bounds.ceiling)
      << '\n';
  out << "calibrated = " << (state.calibrated ? "true" : "false") << '\n';
  for (const EpochEntry& e : state.history) {
    out << "shake = " << format_double(e.rom_value) << ' ' << (e.rom_ok ? 1 : 0)
        << ' ' << format_double(e.speed_value) << ' ' << (e.speed_ok ? 1 : 0)
        << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

inline DifficultyState load_state(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != kStateFormatTag) {
    throw ParseError(path + ":1: expected '" + std::string(kStateFormatTag) +
                     "'");
  }
  DifficultyState state;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const std::size_t eq = text.find('=');
    const std::string ctx = path + ":" + std::to_string(line_no);
    if (eq == std::string_view::npos) {
      throw ParseError(ctx + ": expected 'key = value'");
    }
    const std::string key{trim(text.substr(0, eq))};
    const std::string_view value = trim(text.substr(eq + 1));
    if (key == "rom_threshold") {
      state.rom_threshold = parse_double(value, ctx);
    } else if (key == "speed_threshold") {
      state.speed_threshold = parse_double(value, ctx);
    } else if (key == "step_fraction") {
      state.step_fraction = parse_double(value, ctx);
    } else if (key == "rom_floor") {
      state.rom_bounds.floor = parse_double(value, ctx);
    } else if (key == "rom_ceiling") {
      state.rom_bounds.ceiling = parse_double(value, ctx);
    } else if (key == "speed_floor") {
      state.speed_bounds.floor = parse_double(value, ctx);
    } else if (key == "speed_ceiling") {
      state.speed_bounds.ceiling = parse_double(value, ctx);
    } else if (key == "calibrated") {
      if (value == "true") state.calibrated = true;
      else if (value == "false") state.calibrated = false;
      else throw ParseError(ctx + ": calibrated must be true or false");
    } else if (key == "shake") {
      const auto parts = split(value, ' ');
      if (parts.size() != 4) {
        throw ParseError(ctx + ": shake entry needs 4 fields");
      }
      EpochEntry e;
      e.rom_value = parse_double(parts[0], ctx);
      e.rom_ok = parse_int(parts[1], ctx) != 0;
      e.speed_value = parse_double(parts[2], ctx);
      e.speed_ok = parse_int(parts[3], ctx) != 0;
      state.history.push_back(e);
    } else {
      throw ParseError(ctx + ": unknown key '" + key + "'");
    }
  }
  if (state.history.size() >= kEpochLength) {
    throw ParseError(path + ": epoch history holds " +
                     std::to_string(state.history.size()) +
                     " entries; capacity is " + std::to_string(kEpochLength));
  }
  return state;
}

}  // namespace dorsiflex
