// Command-line front end: reproducible generate / select / train / eval /
// simulate / calibrate workflows driven by a key = value config file with
// flag overrides. Every command echoes its resolved configuration next to
// its outputs.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dorsiflex/dorsiflex.hpp"

namespace fs = std::filesystem;
using namespace dorsiflex;

namespace {

struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<long long> seed;
  std::vector<std::string> overrides;  // key=value
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "key = value config file");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "override every seed key");
  cmd->add_option("--set", args.overrides,
                  "override one config key, e.g. --set model.kind=cnn");
}

Config resolve_config(const CommonArgs& args,
                      const std::vector<const char*>& seed_keys) {
  Config cfg;
  if (!args.config_path.empty()) cfg = Config::from_file(args.config_path);
  for (const std::string& kv : args.overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw UsageError("--set expects key=value, got '" + kv + "'");
    }
    cfg.set(std::string(trim(std::string_view(kv).substr(0, eq))),
            std::string(trim(std::string_view(kv).substr(eq + 1))));
  }
  if (args.seed) {
    for (const char* key : seed_keys) {
      cfg.set(key, std::to_string(*args.seed));
    }
  }
  return cfg;
}

fs::path require_out(const CommonArgs& args) {
  if (args.out_dir.empty()) throw UsageError("--out is required");
  std::error_code ec;
  fs::create_directories(args.out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + args.out_dir);
  return fs::path(args.out_dir);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void echo_config(const Config& cfg, const fs::path& out_dir) {
  write_text(out_dir / "resolved_config.txt", cfg.render());
}

CorpusSpec corpus_spec_from(const Config& cfg) {
  CorpusSpec spec;
  spec.subjects = static_cast<int>(cfg.integer("corpus.subjects", 20));
  spec.dorsiflexion_per_subject =
      static_cast<int>(cfg.integer("corpus.dorsiflexion_per_subject", 15));
  spec.other_per_subject =
      static_cast<int>(cfg.integer("corpus.other_per_subject", 15));
  spec.noise_std = cfg.number("corpus.noise_std", 0.3);
  spec.sample_rate_hz = cfg.number("corpus.sample_rate_hz", 50.0);
  spec.gap_s = cfg.number("corpus.gap_s", 0.6);
  spec.seed = cfg.seed("corpus.seed", 7);
  return spec;
}

int cmd_generate(const CommonArgs& args) {
  const Config cfg = resolve_config(args, {"corpus.seed"});
  const fs::path out = require_out(args);
  const CorpusSpec spec = corpus_spec_from(cfg);
  if (spec.dorsiflexion_per_subject + spec.other_per_subject == 0) {
    std::cerr << "warning: per-subject segment counts are 0; corpus is empty\n";
  }
  const std::vector<Recording> recordings = build_corpus(spec);
  const std::string manifest = write_corpus(recordings, out.string());
  echo_config(cfg, out);
  std::size_t segments = 0;
  for (const Recording& r : recordings) segments += r.segments.size();
  std::cout << "wrote " << recordings.size() << " recordings, " << segments
            << " annotated segments\nmanifest: " << manifest << '\n';
  return 0;
}

Dataset load_manifest_data(const Config& cfg, const std::string& flag_value) {
  const std::string manifest =
      !flag_value.empty() ? flag_value : cfg.str("data.manifest", "");
  if (manifest.empty()) {
    throw UsageError("no dataset manifest (--manifest or data.manifest)");
  }
  return load_dataset(manifest);
}

MrmrScoring scoring_from(const Config& cfg) {
  const std::string name = cfg.str("select.scoring", "quotient");
  if (name == "quotient") return MrmrScoring::quotient;
  if (name == "difference") return MrmrScoring::difference;
  throw UsageError("select.scoring must be quotient or difference");
}

int cmd_select(const CommonArgs& args, const std::string& manifest_flag,
               int k_flag) {
  const Config cfg = resolve_config(args, {});
  const fs::path out = require_out(args);
  Dataset data = load_manifest_data(cfg, manifest_flag);

  const auto test_subjects = cfg.list("split.test_subjects");
  std::vector<Segment> segments;
  if (test_subjects.empty()) {
    segments = data.segments;
  } else {
    segments = split_by_subject(data, test_subjects).train.segments;
  }
  if (segments.empty()) throw RangeError("no segments to select on");

  const int k = k_flag > 0
                    ? k_flag
                    : static_cast<int>(cfg.integer("select.k", kFeatureCount));
  const Eigen::MatrixXd features = feature_matrix(segments);
  const Normalizer nz = Normalizer::fit(features);
  const SelectionResult result = mrmr_select(
      nz.apply(features), segment_labels(segments), k, scoring_from(cfg));

  write_text(out / "selected_features.txt",
             render_selection(result, feature_names()));
  std::ostringstream scores;
  scores << "rank,feature,score\n";
  for (int i = 0; i < result.k(); ++i) {
    scores << i + 1 << ','
           << feature_names()[static_cast<std::size_t>(
                  result.ranked_indices[static_cast<std::size_t>(i)])]
           << ',' << format_double(result.scores[static_cast<std::size_t>(i)])
           << '\n';
  }
  write_text(out / "selection_scores.csv", scores.str());
  write_feature_csv((out / "features.csv").string(), segments);
  echo_config(cfg, out);
  std::cout << "selected " << result.k() << " features\n";
  return 0;
}

TrainOptions train_options_from(const Config& cfg) {
  TrainOptions opt;
  opt.kind = model_kind_from_name(cfg.str("model.kind", "knn"));
  opt.mrmr_k = static_cast<int>(cfg.integer("select.k", 21));
  opt.scoring = scoring_from(cfg);
  opt.knn_k = static_cast<int>(cfg.integer("knn.k", 1));
  opt.svm.lambda = cfg.number("svm.lambda", 1e-3);
  opt.svm.epochs = static_cast<int>(cfg.integer("svm.epochs", 200));
  opt.svm.seed = cfg.seed("svm.seed", 0);
  opt.nn.max_epochs = static_cast<int>(cfg.integer("nn.max_epochs", 100));
  opt.nn.batch_size = static_cast<int>(cfg.integer("nn.batch_size", 32));
  opt.nn.learning_rate = cfg.number("nn.learning_rate", 1e-3);
  opt.nn.dropout = cfg.number("nn.dropout", 0.5);
  opt.nn.seed = cfg.seed("nn.seed", 0);
  return opt;
}

int cmd_train(const CommonArgs& args, const std::string& manifest_flag,
              const std::string& model_flag) {
  Config cfg = resolve_config(args, {"svm.seed", "nn.seed"});
  if (!model_flag.empty()) cfg.set("model.kind", model_flag);
  const fs::path out = require_out(args);
  Dataset data = load_manifest_data(cfg, manifest_flag);

  const auto test_subjects = cfg.list("split.test_subjects");
  std::vector<Segment> train_segments;
  if (test_subjects.empty()) {
    train_segments = data.segments;
  } else {
    train_segments = split_by_subject(data, test_subjects).train.segments;
  }

  const TrainOptions options = train_options_from(cfg);
  const ModelArtifact artifact = train_artifact(train_segments, options);
  save_model(artifact, (out / "model.dfx").string());
  if (!artifact.selected_features.empty()) {
    SelectionResult sel;
    sel.ranked_indices = artifact.selected_features;
    sel.scores.assign(artifact.selected_features.size(), 0.0);
    write_text(out / "selected_features.txt",
               render_selection(sel, feature_names()));
  }
  echo_config(cfg, out);
  std::cout << "trained " << model_kind_name(options.kind) << " on "
            << train_segments.size() << " segments from "
            << artifact.train_subjects.size() << " subjects\n"
            << "model: " << (out / "model.dfx").string() << '\n';
  return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& manifest_flag,
             const std::string& model_file_flag) {
  const Config cfg = resolve_config(args, {});
  const fs::path out = require_out(args);
  const std::string model_path = !model_file_flag.empty()
                                     ? model_file_flag
                                     : cfg.str("eval.model", "");
  if (model_path.empty()) {
    throw UsageError("no model file (--model-file or eval.model)");
  }
  const ModelArtifact artifact = load_model(model_path);
  Dataset data = load_manifest_data(cfg, manifest_flag);

  const auto test_subjects = cfg.list("split.test_subjects");
  std::vector<Segment> test_segments;
  if (test_subjects.empty()) {
    test_segments = data.segments;
  } else {
    test_segments = split_by_subject(data, test_subjects).test.segments;
  }

  const EvaluationResult result = evaluate_split(artifact, test_segments);
  std::optional<ClaimedMetrics> claimed;
  if (cfg.has("eval.claimed_accuracy") || cfg.has("eval.claimed_precision") ||
      cfg.has("eval.claimed_recall")) {
    claimed = ClaimedMetrics{cfg.number("eval.claimed_accuracy", 0.0),
                             cfg.number("eval.claimed_precision", 0.0),
                             cfg.number("eval.claimed_recall", 0.0)};
  }
  const std::string report =
      render_report(model_kind_name(artifact.kind), result.confusion, claimed);
  write_text(out / "report.txt", report);
  write_text(out / "report.csv", render_report_csv(result.confusion));
  echo_config(cfg, out);
  std::cout << report;
  return 0;
}

int cmd_simulate(const CommonArgs& args, const std::string& state_flag,
                 int shakes_flag) {
  const Config cfg = resolve_config(args, {"player.seed"});
  const fs::path out = require_out(args);

  PlayerModel player;
  player.rom_capability = cfg.number("player.rom_capability", 2.0);
  player.speed_capability = cfg.number("player.speed_capability", 4.0);
  player.noise_std = cfg.number("player.noise_std", 0.0);
  player.compliance = cfg.number("player.compliance", 1.0);
  player.seed = cfg.seed("player.seed", 0);

  DifficultyState state;
  const std::string state_path =
      !state_flag.empty() ? state_flag : cfg.str("session.state", "");
  if (!state_path.empty()) {
    state = load_state(state_path);
  } else {
    // No snapshot: run the calibration phase against the player itself.
    CalibrationOptions copts;
    copts.step_fraction = cfg.number("adaptive.step_fraction", 0.1);
    copts.rom_bounds = {cfg.number("adaptive.rom_floor", 0.1),
                        cfg.number("adaptive.rom_ceiling", 10.0)};
    copts.speed_bounds = {cfg.number("adaptive.speed_floor", 0.5),
                          cfg.number("adaptive.speed_ceiling", 10.0)};
    Rng rng(player.seed ^ 0xc2b2ae3d27d4eb4fULL);
    std::vector<ShakeEvent> first_five;
    for (int i = 0; i < kCalibrationShakes; ++i) {
      ShakeEvent e;
      e.t = i;
      e.dorsiflexion = true;
      e.rom_value =
          std::max(0.0, player.rom_capability + player.noise_std * rng.normal());
      e.speed_value = std::max(
          0.0, player.speed_capability + player.noise_std * rng.normal());
      first_five.push_back(e);
    }
    state = calibrate(first_five, copts);
  }

  const int shakes =
      shakes_flag > 0 ? shakes_flag
                      : static_cast<int>(cfg.integer("session.shakes", 100));
  const Session session = simulate_session(player, state, shakes);
  write_session_log((out / "session_log.csv").string(), session.records);
  save_state(session.final_state, (out / "final_state.txt").string());
  echo_config(cfg, out);
  std::cout << "simulated " << shakes << " prompts, " << session.records.size()
            << " shakes, " << session.adjustments.size()
            << " epoch evaluations\nfinal rom_threshold: "
            << format_double(session.final_state.rom_threshold)
            << "\nfinal speed_threshold: "
            << format_double(session.final_state.speed_threshold) << '\n';
  return 0;
}

int cmd_calibrate(const CommonArgs& args, const std::string& events_flag,
                  const std::string& state_flag) {
  const Config cfg = resolve_config(args, {});
  const fs::path out = require_out(args);
  DifficultyState state;

  const std::string events_path =
      !events_flag.empty() ? events_flag : cfg.str("calibrate.events", "");
  const std::string state_path =
      !state_flag.empty() ? state_flag : cfg.str("calibrate.state", "");
  if (!events_path.empty()) {
    const std::vector<ShakeEvent> all = read_shake_events(events_path);
    std::vector<ShakeEvent> first_five;
    for (const ShakeEvent& e : all) {
      if (!e.dorsiflexion) continue;
      first_five.push_back(e);
      if (first_five.size() == kCalibrationShakes) break;
    }
    CalibrationOptions copts;
    copts.step_fraction = cfg.number("adaptive.step_fraction", 0.1);
    copts.rom_bounds = {cfg.number("adaptive.rom_floor", 0.1),
                        cfg.number("adaptive.rom_ceiling", 10.0)};
    copts.speed_bounds = {cfg.number("adaptive.speed_floor", 0.5),
                          cfg.number("adaptive.speed_ceiling", 10.0)};
    state = calibrate(first_five, copts);
  } else if (!state_path.empty()) {
    state = load_state(state_path);
  } else {
    throw UsageError("calibrate needs --events or --state");
  }

  // Manual threshold edits, clamped to the state's own bounds.
  if (cfg.has("adaptive.rom_threshold")) {
    state.rom_threshold =
        std::clamp(cfg.number("adaptive.rom_threshold", 0.0),
                   state.rom_bounds.floor, state.rom_bounds.ceiling);
  }
  if (cfg.has("adaptive.speed_threshold")) {
    state.speed_threshold =
        std::clamp(cfg.number("adaptive.speed_threshold", 0.0),
                   state.speed_bounds.floor, state.speed_bounds.ceiling);
  }

  save_state(state, (out / "state.txt").string());
  echo_config(cfg, out);
  std::cout << "rom_threshold: " << format_double(state.rom_threshold)
            << "\nspeed_threshold: " << format_double(state.speed_threshold)
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dorsiflexion recognition and adaptive difficulty toolkit"};
  app.require_subcommand(1);

  CommonArgs generate_args, select_args, train_args, eval_args, simulate_args,
      calibrate_args;
  std::string select_manifest, train_manifest, eval_manifest;
  std::string train_model, eval_model_file, simulate_state, calibrate_events,
      calibrate_state;
  int select_k = 0;
  int simulate_shakes = 0;

  CLI::App* generate =
      app.add_subcommand("generate", "emit a synthetic labeled corpus");
  add_common(generate, generate_args);

  CLI::App* select =
      app.add_subcommand("select", "rank features with greedy mRMR");
  add_common(select, select_args);
  select->add_option("--manifest", select_manifest, "dataset manifest");
  select->add_option("--k", select_k, "number of features to select");

  CLI::App* train = app.add_subcommand("train", "train a classifier");
  add_common(train, train_args);
  train->add_option("--manifest", train_manifest, "dataset manifest");
  train->add_option("--model", train_model, "knn | svm | mlp | cnn");

  CLI::App* eval_cmd =
      app.add_subcommand("eval", "evaluate a saved model on held-out data");
  add_common(eval_cmd, eval_args);
  eval_cmd->add_option("--manifest", eval_manifest, "dataset manifest");
  eval_cmd->add_option("--model-file", eval_model_file, "saved model artifact");

  CLI::App* simulate =
      app.add_subcommand("simulate", "run a simulated adaptive session");
  add_common(simulate, simulate_args);
  simulate->add_option("--state", simulate_state, "difficulty state snapshot");
  simulate->add_option("--shakes", simulate_shakes, "number of 1 Hz prompts");

  CLI::App* calibrate_cmd = app.add_subcommand(
      "calibrate", "build or edit a difficulty state snapshot");
  add_common(calibrate_cmd, calibrate_args);
  calibrate_cmd->add_option("--events", calibrate_events,
                            "shake event CSV for calibration");
  calibrate_cmd->add_option("--state", calibrate_state,
                            "existing snapshot to edit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }

  try {
    if (generate->parsed()) return cmd_generate(generate_args);
    if (select->parsed()) return cmd_select(select_args, select_manifest, select_k);
    if (train->parsed()) return cmd_train(train_args, train_manifest, train_model);
    if (eval_cmd->parsed()) return cmd_eval(eval_args, eval_manifest, eval_model_file);
    if (simulate->parsed())
      return cmd_simulate(simulate_args, simulate_state, simulate_shakes);
    if (calibrate_cmd->parsed())
      return cmd_calibrate(calibrate_args, calibrate_events, calibrate_state);
    std::cerr << "error: no command\n";
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const RangeError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const ParamError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
}
