// Minimal library walkthrough: synthesize movements, read the live
// indicators off them, calibrate, and run a short adaptive session.

#include <iostream>

#include "dorsiflex/adaptive.hpp"
#include "dorsiflex/features.hpp"
#include "dorsiflex/signal.hpp"
#include "dorsiflex/text.hpp"

using namespace dorsiflex;

int main() {
  // Five calibration shakes measured from synthetic dorsiflexion.
  std::vector<ShakeEvent> first_five;
  for (int i = 0; i < kCalibrationShakes; ++i) {
    SynthesisParams p;
    p.kind = MovementKind::dorsiflexion;
    p.amplitude = 2.0;
    p.frequency_hz = 2.0;
    p.noise_std = 0.05;
    p.seed = 100 + static_cast<std::uint64_t>(i);
    const Segment seg = synthesize(p);
    ShakeEvent e;
    e.t = i;
    e.dorsiflexion = true;
    e.rom_value = rom_indicator(seg);
    e.speed_value = crossing_rate(seg, Channel::gx);
    first_five.push_back(e);
    std::cout << "calibration shake " << i << ": rom "
              << format_double(e.rom_value) << ", speed "
              << format_double(e.speed_value) << " ("
              << speed_level_name(speed_level(e.speed_value)) << ")\n";
  }

  DifficultyState state = calibrate(first_five);
  std::cout << "calibrated rom threshold " << format_double(state.rom_threshold)
            << ", speed threshold " << format_double(state.speed_threshold)
            << "\n\n";

  PlayerModel player;
  player.rom_capability = 2.2;
  player.speed_capability = 4.5;
  player.noise_std = 0.1;
  player.seed = 42;
  const Session session = simulate_session(player, state, 60);

  for (const Adjustment& adj : session.adjustments) {
    std::cout << "epoch: rom " << adjustment_name(adj.rom) << " ("
              << format_double(adj.rom_before) << " -> "
              << format_double(adj.rom_after) << "), speed "
              << adjustment_name(adj.speed) << " ("
              << format_double(adj.speed_before) << " -> "
              << format_double(adj.speed_after) << ")\n";
  }
  std::cout << "final rom threshold "
            << format_double(session.final_state.rom_threshold)
            << ", player capability " << format_double(player.rom_capability)
            << '\n';
  return 0;
}
