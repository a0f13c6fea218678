#include <catch2/catch_amalgamated.hpp>

#include "dorsiflex/adaptive.hpp"
#include "dorsiflex/features.hpp"
#include "dorsiflex/signal.hpp"
#include "test_util.hpp"

using namespace dorsiflex;
using Catch::Approx;
using testutil::TempDir;

namespace {

ShakeEvent shake(double rom, double speed = 3.0, bool dorsi = true) {
  ShakeEvent e;
  e.rom_value = rom;
  e.speed_value = speed;
  e.dorsiflexion = dorsi;
  return e;
}

std::vector<ShakeEvent> five(std::initializer_list<double> rom_values) {
  std::vector<ShakeEvent> events;
  double t = 0.0;
  for (double v : rom_values) {
    ShakeEvent e = shake(v);
    e.t = t++;
    events.push_back(e);
  }
  return events;
}

DifficultyState state_with_thresholds(double rom, double speed) {
  DifficultyState s;
  s.rom_threshold = rom;
  s.speed_threshold = speed;
  s.calibrated = true;
  return s;
}

/// Feed one epoch: n successes well above any possible raise, the rest
/// clear failures. Returns the epoch's adjustment.
Adjustment run_epoch(DifficultyState& state, int successes,
                     double success_value = 100.0) {
  std::optional<Adjustment> adj;
  for (int i = 0; i < kEpochLength; ++i) {
    const double rom = i < successes ? success_value : 0.0;
    const double speed = rom;
    auto [next, a] = record_shake(state, shake(rom, speed));
    state = next;
    if (a) adj = a;
  }
  REQUIRE(adj.has_value());
  return *adj;
}

}  // namespace

TEST_CASE("calibration") {
  SECTION("threshold is 0.9 times the median of five") {
    const DifficultyState s = calibrate(five({2.0, 2.2, 1.8, 2.1, 1.9}));
    REQUIRE(s.rom_threshold == Approx(0.9 * 2.0));
    REQUIRE(s.calibrated);
    REQUIRE(s.history.empty());
  }
  SECTION("a player at the calibrated level immediately succeeds") {
    const double v = 2.0;
    DifficultyState s = calibrate(five({v, v, v, v, v}));
    REQUIRE(s.rom_threshold == Approx(0.9 * v));
    auto [next, adj] = record_shake(s, shake(v));
    REQUIRE(next.history.size() == 1);
    REQUIRE(next.history[0].rom_ok);
  }
  SECTION("four events are too few") {
    REQUIRE_THROWS_AS(calibrate(five({2, 2, 2, 2})), ParamError);
  }
  SECTION("six events are rejected too") {
    REQUIRE_THROWS_AS(calibrate(five({2, 2, 2, 2, 2, 2})), ParamError);
  }
  SECTION("non-dorsiflexion calibration shake is rejected") {
    std::vector<ShakeEvent> events = five({2, 2, 2, 2, 2});
    events[3].dorsiflexion = false;
    REQUIRE_THROWS_AS(calibrate(events), ParamError);
  }
  SECTION("calibrated thresholds respect the bounds") {
    const DifficultyState s = calibrate(five({100, 100, 100, 100, 100}));
    REQUIRE(s.rom_threshold == kDefaultRomBounds.ceiling);
  }
}

TEST_CASE("epoch adjustment rules") {
  SECTION("nine of ten successes raise the threshold") {
    DifficultyState s = state_with_thresholds(1.0, 1.0);
    const Adjustment adj = run_epoch(s, 9);
    REQUIRE(adj.rom == AdjustmentDirection::raised);
    REQUIRE(s.rom_threshold == Approx(1.1));
  }
  SECTION("ten of ten successes raise the threshold") {
    DifficultyState s = state_with_thresholds(1.0, 1.0);
    const Adjustment adj = run_epoch(s, 10);
    REQUIRE(adj.rom == AdjustmentDirection::raised);
    REQUIRE(s.rom_threshold == Approx(1.1));
  }
  SECTION("five of ten successes lower the threshold") {
    DifficultyState s = state_with_thresholds(1.0, 1.0);
    const Adjustment adj = run_epoch(s, 5);
    REQUIRE(adj.rom == AdjustmentDirection::lowered);
    REQUIRE(s.rom_threshold == Approx(0.9));
  }
  SECTION("seven of ten successes hold the threshold") {
    DifficultyState s = state_with_thresholds(1.0, 1.0);
    const Adjustment adj = run_epoch(s, 7);
    REQUIRE(adj.rom == AdjustmentDirection::held);
    REQUIRE(s.rom_threshold == 1.0);
  }
  SECTION("eight of ten successes also hold") {
    DifficultyState s = state_with_thresholds(1.0, 1.0);
    REQUIRE(run_epoch(s, 8).rom == AdjustmentDirection::held);
  }
  SECTION("six of ten successes hold (the 60% boundary)") {
    DifficultyState s = state_with_thresholds(1.0, 1.0);
    REQUIRE(run_epoch(s, 6).rom == AdjustmentDirection::held);
  }
}

TEST_CASE("a raise never passes the weakest successful shake") {
  // All ten successes sit barely above the threshold: the raise is capped
  // at that demonstrated value instead of the full 10% step.
  DifficultyState s = state_with_thresholds(1.0, 1.0);
  const Adjustment adj = run_epoch(s, 10, 1.02);
  REQUIRE(adj.rom == AdjustmentDirection::raised);
  REQUIRE(s.rom_threshold == Approx(1.02));

  // Succeeding exactly at the threshold leaves it in place.
  DifficultyState t = state_with_thresholds(1.0, 1.0);
  const Adjustment adj2 = run_epoch(t, 10, 1.0);
  REQUIRE(adj2.rom == AdjustmentDirection::held);
  REQUIRE(t.rom_threshold == 1.0);
}

TEST_CASE("the two indicators adjust independently") {
  DifficultyState s = state_with_thresholds(1.0, 1.0);
  std::optional<Adjustment> adj;
  for (int i = 0; i < kEpochLength; ++i) {
    // rom always succeeds hugely; speed always fails.
    auto [next, a] = record_shake(s, shake(50.0, 0.0));
    s = next;
    if (a) adj = a;
  }
  REQUIRE(adj.has_value());
  REQUIRE(adj->rom == AdjustmentDirection::raised);
  REQUIRE(adj->speed == AdjustmentDirection::lowered);
  REQUIRE(s.rom_threshold == Approx(1.1));
  REQUIRE(s.speed_threshold == Approx(0.9));
}

TEST_CASE("record_shake contract") {
  SECTION("uncalibrated state is an error") {
    DifficultyState s;
    REQUIRE_THROWS_AS(record_shake(s, shake(1.0)), ParamError);
  }
  SECTION("non-dorsiflexion events are rejected") {
    DifficultyState s = state_with_thresholds(1.0, 1.0);
    REQUIRE_THROWS_AS(record_shake(s, shake(1.0, 1.0, false)), ParamError);
  }
  SECTION("threshold only moves when the tenth outcome lands") {
    DifficultyState s = state_with_thresholds(1.0, 1.0);
    for (int i = 0; i < kEpochLength - 1; ++i) {
      auto [next, adj] = record_shake(s, shake(5.0));
      s = next;
      REQUIRE_FALSE(adj.has_value());
      REQUIRE(s.rom_threshold == 1.0);
      REQUIRE(s.history.size() == static_cast<std::size_t>(i + 1));
    }
    auto [final_state, adj] = record_shake(s, shake(5.0));
    REQUIRE(adj.has_value());
    REQUIRE(final_state.history.empty());  // disjoint epochs
  }
  SECTION("thresholds never leave their bounds") {
    DifficultyState s = state_with_thresholds(9.8, 0.6);
    for (int epoch = 0; epoch < 12; ++epoch) {
      for (int i = 0; i < kEpochLength; ++i) {
        auto [next, adj] = record_shake(s, shake(10.0, 0.0));
        s = next;
      }
      REQUIRE(s.rom_threshold <= s.rom_bounds.ceiling);
      REQUIRE(s.rom_threshold >= s.rom_bounds.floor);
      REQUIRE(s.speed_threshold >= s.speed_bounds.floor);
    }
    REQUIRE(s.rom_threshold == s.rom_bounds.ceiling);
    REQUIRE(s.speed_threshold == s.speed_bounds.floor);
  }
}

TEST_CASE("speed levels") {
  REQUIRE(speed_level(0.0) == SpeedLevel::slow);
  REQUIRE(speed_level(1.99) == SpeedLevel::slow);
  REQUIRE(speed_level(2.0) == SpeedLevel::medium);  // boundary is half-open
  REQUIRE(speed_level(4.99) == SpeedLevel::medium);
  REQUIRE(speed_level(5.0) == SpeedLevel::fast);
  REQUIRE(speed_level(50.0) == SpeedLevel::fast);
  REQUIRE_THROWS_AS(speed_level(-0.1), ParamError);

  SECTION("custom cut points") {
    const SpeedCuts cuts{1.0, 3.0};
    REQUIRE(speed_level(2.0, cuts) == SpeedLevel::medium);
    REQUIRE(speed_level(3.0, cuts) == SpeedLevel::fast);
  }
  SECTION("synthetic frequency sweep maps to increasing rates and levels") {
    double prev_rate = -1.0;
    int prev_level = -1;
    bool saw_slow = false, saw_fast = false;
    for (double f : {1.0, 2.0, 3.0, 4.0, 5.0, 6.0}) {
      SynthesisParams p;
      p.kind = MovementKind::dorsiflexion;
      p.frequency_hz = f;
      p.duration_s = 2.0;
      const Segment seg = synthesize(p);
      const double rate = crossing_rate(seg, Channel::gx);
      REQUIRE(rate > prev_rate);
      const int level = static_cast<int>(speed_level(rate));
      REQUIRE(level >= prev_level);
      prev_rate = rate;
      prev_level = level;
      saw_slow = saw_slow || speed_level(rate) == SpeedLevel::slow;
      saw_fast = saw_fast || speed_level(rate) == SpeedLevel::fast;
    }
    REQUIRE(saw_slow);
    REQUIRE(saw_fast);
  }
}

TEST_CASE("rom regression") {
  SECTION("perfectly linear data has zero error") {
    const std::vector<double> x{0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
    std::vector<double> y;
    for (double v : x) y.push_back(2.0 * v - 1.0);
    const LinearFit fit = rom_regression_fit(x, y);
    REQUIRE(fit.slope == Approx(2.0).margin(1e-12));
    REQUIRE(fit.intercept == Approx(-1.0).margin(1e-12));
    REQUIRE(rom_regression_rmse(x, y) == Approx(0.0).margin(1e-9));
  }
  SECTION("constant targets give a flat line") {
    const std::vector<double> x{1.0, 2.0, 3.0};
    const std::vector<double> y{1.5, 1.5, 1.5};
    const LinearFit fit = rom_regression_fit(x, y);
    REQUIRE(fit.slope == Approx(0.0).margin(1e-12));
    REQUIRE(fit.intercept == Approx(1.5).margin(1e-12));
  }
  SECTION("all-equal indicator values are degenerate") {
    REQUIRE_THROWS_AS(rom_regression_fit(std::vector<double>{2, 2, 2},
                                         std::vector<double>{0, 1, 2}),
                      ParamError);
  }
  SECTION("three restriction levels from the generator stay under 0.35") {
    std::vector<double> indicator, target;
    const double amplitudes[] = {0.5, 1.5, 3.0};
    std::uint64_t seed = 7000;
    for (int level = 0; level < 3; ++level) {
      for (int i = 0; i < 20; ++i) {
        SynthesisParams p;
        p.kind = MovementKind::dorsiflexion;
        p.amplitude = amplitudes[level];
        p.frequency_hz = 2.0;
        p.duration_s = 2.0;
        p.noise_std = 0.1;
        p.seed = ++seed;
        indicator.push_back(rom_indicator(synthesize(p)));
        target.push_back(level);
      }
    }
    REQUIRE(rom_regression_rmse(indicator, target) < 0.35);
  }
}

TEST_CASE("simulated sessions") {
  SECTION("constant capability converges into the band and stays") {
    const double c = 2.0;
    DifficultyState state = calibrate(five({c, c, c, c, c}));
    PlayerModel player;
    player.rom_capability = c;
    player.speed_capability = 4.0;
    player.noise_std = 0.0;
    player.seed = 1;
    const Session session = simulate_session(player, state, 200);
    bool entered = false;
    for (const SessionRecord& r : session.records) {
      if (!entered && r.rom_threshold >= 0.9 * c && r.rom_threshold <= c) {
        entered = true;
      }
      if (entered) {
        REQUIRE(r.rom_threshold >= 0.9 * c);
        REQUIRE(r.rom_threshold <= c);
      }
    }
    REQUIRE(entered);
    REQUIRE(session.final_state.rom_threshold == Approx(c));
  }
  SECTION("a low start climbs into the band within twenty epochs") {
    const double c = 3.0;
    DifficultyState state = state_with_thresholds(c / 4.0, 1.0);
    PlayerModel player;
    player.rom_capability = c;
    player.speed_capability = 4.0;
    player.seed = 2;
    const Session session =
        simulate_session(player, state, 20 * kEpochLength);
    int epochs_to_enter = 0;
    bool entered = false;
    for (const Adjustment& adj : session.adjustments) {
      if (!entered) ++epochs_to_enter;
      if (adj.rom_after >= 0.9 * c && adj.rom_after <= c) entered = true;
    }
    REQUIRE(entered);
    REQUIRE(epochs_to_enter <= 20);
  }
  SECTION("capability below the floor settles at the floor") {
    DifficultyState state = state_with_thresholds(1.0, 1.0);
    PlayerModel player;
    player.rom_capability = 0.01;
    player.speed_capability = 0.01;
    player.seed = 3;
    const Session session = simulate_session(player, state, 300);
    REQUIRE(session.final_state.rom_threshold ==
            Approx(state.rom_bounds.floor));
    REQUIRE(session.final_state.speed_threshold ==
            Approx(state.speed_bounds.floor));
  }
  SECTION("zero compliance means no events and no movement") {
    DifficultyState state = state_with_thresholds(1.0, 1.0);
    PlayerModel player;
    player.compliance = 0.0;
    player.seed = 4;
    const Session session = simulate_session(player, state, 50);
    REQUIRE(session.records.empty());
    REQUIRE(session.final_state.rom_threshold == 1.0);
    REQUIRE(session.final_state.speed_threshold == 1.0);
  }
  SECTION("per-epoch change is at most one step") {
    DifficultyState state = state_with_thresholds(1.0, 1.0);
    PlayerModel player;
    player.rom_capability = 5.0;
    player.speed_capability = 5.0;
    player.noise_std = 1.0;
    player.seed = 5;
    const Session session = simulate_session(player, state, 400);
    for (const Adjustment& adj : session.adjustments) {
      const double ratio = adj.rom_after / adj.rom_before;
      REQUIRE(ratio <= 1.0 + state.step_fraction + 1e-12);
      REQUIRE(ratio >= 1.0 - state.step_fraction - 1e-12);
    }
  }
  SECTION("the stronger player never trails the weaker one") {
    DifficultyState state = state_with_thresholds(1.0, 1.0);
    PlayerModel strong, weak;
    strong.rom_capability = 2.0;
    weak.rom_capability = 1.5;
    strong.speed_capability = weak.speed_capability = 3.0;
    strong.seed = weak.seed = 6;
    const Session a = simulate_session(strong, state, 300);
    const Session b = simulate_session(weak, state, 300);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      REQUIRE(a.records[i].rom_threshold >= b.records[i].rom_threshold - 1e-12);
    }
  }
  SECTION("sessions shorter than one epoch are rejected") {
    DifficultyState state = state_with_thresholds(1.0, 1.0);
    REQUIRE_THROWS_AS(simulate_session(PlayerModel{}, state, 5), ParamError);
  }
  SECTION("uncalibrated state is rejected") {
    REQUIRE_THROWS_AS(simulate_session(PlayerModel{}, DifficultyState{}, 50),
                      ParamError);
  }
}

TEST_CASE("state snapshots round trip") {
  TempDir dir("adaptive");
  DifficultyState s = state_with_thresholds(1.23, 4.56);
  s.step_fraction = 0.2;
  s.rom_bounds = {0.3, 8.0};
  s.speed_bounds = {0.7, 9.0};
  auto [with_history, adj] = record_shake(s, shake(2.0, 5.0));
  save_state(with_history, dir.file("state.txt"));
  const DifficultyState back = load_state(dir.file("state.txt"));
  REQUIRE(back.rom_threshold == with_history.rom_threshold);
  REQUIRE(back.speed_threshold == with_history.speed_threshold);
  REQUIRE(back.step_fraction == with_history.step_fraction);
  REQUIRE(back.rom_bounds.floor == with_history.rom_bounds.floor);
  REQUIRE(back.rom_bounds.ceiling == with_history.rom_bounds.ceiling);
  REQUIRE(back.calibrated == with_history.calibrated);
  REQUIRE(back.history.size() == 1);
  REQUIRE(back.history[0].rom_value == 2.0);
  REQUIRE(back.history[0].rom_ok);

  SECTION("bad format tag") {
    std::ofstream out(dir.file("bad.txt"));
    out << "dorsiflex-state v9\n";
    out.close();
    REQUIRE_THROWS_AS(load_state(dir.file("bad.txt")), ParseError);
  }
  SECTION("unknown key") {
    std::ofstream out(dir.file("odd.txt"));
    out << kStateFormatTag << "\nwhatever = 3\n";
    out.close();
    REQUIRE_THROWS_AS(load_state(dir.file("odd.txt")), ParseError);
  }
}

TEST_CASE("session log and shake event files") {
  TempDir dir("adaptive_io");
  DifficultyState state = calibrate(five({2, 2, 2, 2, 2}));
  PlayerModel player;
  player.rom_capability = 2.0;
  player.speed_capability = 4.0;
  player.seed = 12;
  const Session session = simulate_session(player, state, 30);
  write_session_log(dir.file("log.csv"), session.records);

  std::ifstream in(dir.file("log.csv"));
  std::string header;
  std::getline(in, header);
  REQUIRE(header == kSessionLogHeader);
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) rows += !line.empty();
  REQUIRE(rows == session.records.size());

  const std::vector<ShakeEvent> events = five({2.0, 2.2, 1.8, 2.1, 1.9});
  write_shake_events(dir.file("events.csv"), events);
  const std::vector<ShakeEvent> back = read_shake_events(dir.file("events.csv"));
  REQUIRE(back.size() == events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    REQUIRE(back[i].rom_value == events[i].rom_value);
    REQUIRE(back[i].dorsiflexion == events[i].dorsiflexion);
  }
}
