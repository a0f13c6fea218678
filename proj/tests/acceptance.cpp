// Acceptance suite: one pass/fail line per criterion, nonzero exit when
// anything fails. Oracles (reference statistics, brute-force selection)
// live in test_util.hpp and are independent of the library paths.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "dorsiflex/dorsiflex.hpp"
#include "test_util.hpp"

using namespace dorsiflex;

namespace {

int g_failures = 0;

void criterion(int index, const std::string& name,
               const std::function<std::string()>& body) {
  const auto start = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = true;
  try {
    detail = body();
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("exception: ") + e.what();
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  if (!ok) ++g_failures;
  std::printf("%s  %2d  %-28s  [%6.1fs]  %s\n", ok ? "PASS" : "FAIL", index,
              name.c_str(), seconds, detail.c_str());
  std::fflush(stdout);
}

void check(bool condition, const std::string& message) {
  if (!condition) throw std::runtime_error(message);
}

double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

// Published per-model results: overall P/R/F then per-class P/R/F.
struct PublishedColumn {
  const char* name;
  double precision, recall, f_score;
  double pos_p, pos_r, pos_f;
  double neg_p, neg_r, neg_f;
};

constexpr PublishedColumn kPublished[] = {
    {"knn", 0.932, 0.956, 0.940, 0.864, 1.000, 0.927, 1.000, 0.912, 0.954},
    {"svm", 0.913, 0.941, 0.921, 0.826, 1.000, 0.905, 1.000, 0.882, 0.938},
    {"mlp", 0.952, 0.971, 0.960, 0.905, 1.000, 0.950, 1.000, 0.941, 0.970},
    {"cnn", 0.963, 0.971, 0.967, 0.938, 0.974, 0.956, 0.987, 0.968, 0.977},
    {"lstm", 0.949, 0.968, 0.957, 0.903, 0.991, 0.945, 0.995, 0.945, 0.970},
    {"blstm", 0.953, 0.971, 0.961, 0.911, 0.991, 0.949, 0.995, 0.950, 0.972},
};

std::string run_macro_averaging() {
  const Rational half(1, 2);
  const Rational precision = (Rational(938, 1000) + Rational(987, 1000)) * half;
  const Rational recall = (Rational(974, 1000) + Rational(968, 1000)) * half;
  check(format3(precision) == "0.963",
        "macro precision printed " + format3(precision));
  check(format3(recall) == "0.971", "macro recall printed " + format3(recall));
  double worst = 0.0;
  for (const PublishedColumn& col : kPublished) {
    worst = std::max(worst, std::abs(harmonic(col.pos_p, col.pos_r) - col.pos_f));
    worst = std::max(worst, std::abs(harmonic(col.neg_p, col.neg_r) - col.neg_f));
    worst = std::max(worst,
                     std::abs((col.pos_f + col.neg_f) / 2.0 - col.f_score));
    check(worst <= 0.001, std::string("f identity broken for ") + col.name);
  }
  std::ostringstream out;
  out << "overall 0.963/0.971 reproduced; max F deviation "
      << format_double(worst);
  return out.str();
}

std::string run_field_counts() {
  const ConfusionMatrix cm{252, 10, 35, 931};
  const MetricsReport r = metrics(cm);
  check(format3(r.accuracy) == "0.963", "accuracy " + format3(r.accuracy));
  check(format3(r.dorsiflexion.precision) == "0.962",
        "precision " + format3(r.dorsiflexion.precision));
  check(format3(r.dorsiflexion.recall) == "0.878",
        "recall " + format3(r.dorsiflexion.recall));
  const ClaimedMetrics claimed{0.948, 0.929, 0.846};
  const auto notes = metric_discrepancies(cm, claimed);
  check(notes.size() == 3, "expected 3 discrepancy notes, got " +
                               std::to_string(notes.size()));
  const std::string report = render_report("field-test", cm, claimed);
  check(report.find("differs from reported") != std::string::npos,
        "report does not flag the discrepancy");
  return "counts give 0.963/0.962/0.878; 3 reported values flagged";
}

struct BenchmarkData {
  std::vector<Segment> train;
  std::vector<Segment> test;
};

BenchmarkData benchmark_data() {
  CorpusSpec spec;  // 20 subjects x (15 + 15) = 600 segments, noise 0.3
  spec.seed = 20240917;
  const Dataset ds = corpus_dataset(build_corpus(spec));
  check(ds.segments.size() == 600, "expected 600 segments");
  long long dorsi = 0;
  for (const Segment& s : ds.segments) dorsi += s.is_dorsiflexion();
  check(dorsi == 300, "expected a balanced corpus");
  const SplitDataset split = split_by_subject(ds, last_subjects(spec, 5));
  check(split.train.subjects().size() == 15, "expected 15 training subjects");
  return BenchmarkData{split.train.segments, split.test.segments};
}

double benchmark_accuracy(const BenchmarkData& data, const TrainOptions& opt) {
  const ModelArtifact artifact = train_artifact(data.train, opt);
  return evaluate_split(artifact, data.test).report.accuracy.value();
}

std::string run_benchmark() {
  const BenchmarkData data = benchmark_data();

  TrainOptions knn;
  knn.kind = ModelKind::knn;
  knn.mrmr_k = 21;
  knn.knn_k = 1;
  const double knn_acc = benchmark_accuracy(data, knn);
  check(knn_acc >= 0.95, "1-NN accuracy " + format_double(knn_acc));

  TrainOptions svm;
  svm.kind = ModelKind::svm;
  svm.mrmr_k = 21;
  svm.svm.seed = 1;
  const double svm_acc = benchmark_accuracy(data, svm);
  check(svm_acc >= 0.90, "SVM accuracy " + format_double(svm_acc));

  TrainOptions mlp;
  mlp.kind = ModelKind::mlp;
  mlp.mrmr_k = 21;
  mlp.nn.seed = 2;
  const double mlp_acc = benchmark_accuracy(data, mlp);
  check(mlp_acc >= 0.95, "MLP accuracy " + format_double(mlp_acc));

  TrainOptions cnn;
  cnn.kind = ModelKind::cnn;
  cnn.nn.seed = 3;
  cnn.nn.max_epochs = 25;
  const double cnn_acc = benchmark_accuracy(data, cnn);
  check(cnn_acc >= 0.95, "CNN accuracy " + format_double(cnn_acc));

  std::ostringstream out;
  out << "test accuracy knn " << format3(knn_acc) << ", svm "
      << format3(svm_acc) << ", mlp " << format3(mlp_acc) << ", cnn "
      << format3(cnn_acc);
  return out.str();
}

template <typename LossFn>
double max_gradient_error(std::vector<double> params,
                          const std::vector<double>& analytic,
                          const LossFn& loss_at, int probes,
                          std::uint64_t seed) {
  constexpr double kStep = 1e-5;
  Rng rng(seed);
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    const std::size_t i = rng.below(params.size());
    const double saved = params[i];
    params[i] = saved + kStep;
    const double up = loss_at(params);
    params[i] = saved - kStep;
    const double down = loss_at(params);
    params[i] = saved;
    const double fd = (up - down) / (2.0 * kStep);
    const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-6});
    worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
  }
  return worst;
}

std::string run_gradient_checks() {
  Rng mlp_rng(41);
  MlpModel mlp(9, 0.5, mlp_rng);
  Eigen::MatrixXd x(5, 9);
  Rng data_rng(42);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 9; ++j) x(i, j) = data_rng.normal(0.0, 1.0);
  }
  const std::vector<int> y{1, 0, 1, 1, 0};
  const auto [mlp_loss, mlp_grad] = mlp.loss_and_gradient(x, y);
  MlpModel mlp_probe = mlp;
  const double mlp_err = max_gradient_error(
      mlp.parameters(), mlp_grad,
      [&](const std::vector<double>& params) {
        mlp_probe.set_parameters(params);
        return mlp_probe.loss(x, y);
      },
      500, 43);
  check(mlp_err < 1e-4, "mlp gradient error " + format_double(mlp_err));

  Rng cnn_rng(44);
  CnnModel cnn(cnn_rng);
  std::vector<RawWindow> windows(5);
  for (RawWindow& w : windows) {
    w.values.resize(kWindowLength, kChannelCount);
    for (int i = 0; i < kWindowLength; ++i) {
      for (int c = 0; c < kChannelCount; ++c) {
        w.values(i, c) = data_rng.normal(0.0, 1.0);
      }
    }
  }
  const auto [cnn_loss, cnn_grad] = cnn.loss_and_gradient(windows, y);
  CnnModel cnn_probe = cnn;
  const double cnn_err = max_gradient_error(
      cnn.parameters(), cnn_grad,
      [&](const std::vector<double>& params) {
        cnn_probe.set_parameters(params);
        return cnn_probe.loss(windows, y);
      },
      150, 45);
  check(cnn_err < 1e-4, "cnn gradient error " + format_double(cnn_err));

  return "max relative error mlp " + format_double(mlp_err) + ", cnn " +
         format_double(cnn_err);
}

std::string run_mrmr_oracle() {
  Rng rng(2025);
  for (int trial = 0; trial < 100; ++trial) {
    const int rows = 6 + static_cast<int>(rng.below(35));  // <= 40
    const int cols = 2 + static_cast<int>(rng.below(5));   // <= 6
    Eigen::MatrixXd x(rows, cols);
    std::vector<int> labels(static_cast<std::size_t>(rows));
    const bool with_duplicates = trial % 5 == 0;
    for (int i = 0; i < rows; ++i) {
      labels[static_cast<std::size_t>(i)] = i % 2;
      for (int j = 0; j < cols; ++j) {
        x(i, j) = rng.normal(0.0, 1.0) +
                  (labels[static_cast<std::size_t>(i)] ? rng.uniform() : 0.0);
      }
    }
    if (with_duplicates && cols >= 2) x.col(1) = x.col(0);  // force exact ties
    const int k =
        1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(cols)));
    const std::vector<int> got = mrmr_select(x, labels, k).ranked_indices;
    const std::vector<int> want = testutil::brute_force_mrmr(x, labels, k);
    if (got != want) {
      std::ostringstream msg;
      msg << "trial " << trial << " diverged";
      throw std::runtime_error(msg.str());
    }
  }
  return "100/100 seeded trials match exactly, ties included";
}

std::string run_descriptor_reference() {
  Rng rng(321);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(60);
    std::vector<double> x(n);
    const int mode = trial % 10;
    if (mode == 0) {
      const double c = rng.uniform(-10.0, 10.0);
      for (double& v : x) v = c;  // zero-variance path
    } else if (mode == 1) {
      for (double& v : x) v = rng.uniform(-1e6, 1e6);
    } else {
      for (double& v : x) v = rng.normal(0.0, rng.uniform(0.1, 50.0));
    }
    const ChannelStats got = channel_stats(x);
    const testutil::RefStats want = testutil::ref_stats(x);
    const double scale = std::max(1.0, std::abs(want.var));
    worst = std::max(worst, std::abs(got.mean - want.mean));
    worst = std::max(worst, std::abs(got.var - want.var) / scale);
    worst = std::max(worst, std::abs(got.std_dev - want.std_dev));
    worst = std::max(worst, std::abs(got.skew - want.skew));
    worst = std::max(worst, std::abs(got.kurtosis - want.kurtosis));
    check(got.min == want.min && got.max == want.max, "min/max mismatch");
  }
  check(worst <= 1e-9, "descriptor deviation " + format_double(worst));
  return "1000 vectors within " + format_double(worst);
}

std::string run_adaptive_convergence() {
  const double c = 2.0;

  // From a deliberately low start the threshold must reach [0.9c, c]
  // within 20 epochs and stay there for the rest of a long session.
  DifficultyState low;
  low.rom_threshold = c / 3.0;
  low.speed_threshold = 1.0;
  low.calibrated = true;
  PlayerModel player;
  player.rom_capability = c;
  player.speed_capability = 4.0;
  player.noise_std = 0.0;
  player.seed = 9;
  const Session session = simulate_session(player, low, 100 * kEpochLength);
  int entry_epoch = -1;
  for (std::size_t e = 0; e < session.adjustments.size(); ++e) {
    const double thr = session.adjustments[e].rom_after;
    if (entry_epoch < 0) {
      if (thr >= 0.9 * c && thr <= c) entry_epoch = static_cast<int>(e) + 1;
    } else {
      check(thr >= 0.9 * c && thr <= c,
            "threshold left [0.9c, c] at epoch " + std::to_string(e + 1));
    }
  }
  check(entry_epoch > 0 && entry_epoch <= 20,
        "entered band at epoch " + std::to_string(entry_epoch));

  // Epoch rules at the stated rates.
  DifficultyState s;
  s.rom_threshold = 1.0;
  s.speed_threshold = 1.0;
  s.calibrated = true;
  auto run_epoch = [&](DifficultyState state, int successes) {
    std::optional<Adjustment> adj;
    for (int i = 0; i < kEpochLength; ++i) {
      ShakeEvent e;
      e.dorsiflexion = true;
      e.rom_value = i < successes ? 100.0 : 0.0;
      e.speed_value = e.rom_value;
      auto [next, a] = record_shake(state, e);
      state = next;
      if (a) adj = a;
    }
    return std::pair<DifficultyState, Adjustment>(state, *adj);
  };
  const auto nine = run_epoch(s, 9);
  check(nine.second.rom == AdjustmentDirection::raised &&
            std::abs(nine.first.rom_threshold - 1.1) < 1e-12,
        "9/10 epoch did not raise by the step");
  const auto five = run_epoch(s, 5);
  check(five.second.rom == AdjustmentDirection::lowered &&
            std::abs(five.first.rom_threshold - 0.9) < 1e-12,
        "5/10 epoch did not lower by the step");

  return "entered [0.9c, c] at epoch " + std::to_string(entry_epoch) +
         ", stayed for " +
         std::to_string(session.adjustments.size() - entry_epoch) +
         " epochs; 9/10 raises, 5/10 lowers";
}

std::string run_rom_regression() {
  std::vector<double> indicator, target;
  const double amplitudes[] = {0.5, 1.5, 3.0};
  std::uint64_t seed = 55000;
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
  const double rmse = rom_regression_rmse(indicator, target);
  check(rmse < 0.35, "leave-one-out RMSE " + format_double(rmse));
  return "leave-one-out RMSE " + format_double(rmse) + " on the {0,1,2} scale";
}

std::string run_speed_sweep() {
  const double duration = 2.0;
  double prev_rate = -1.0;
  int prev_level = -1;
  bool saw_slow = false, saw_medium = false, saw_fast = false;
  for (int f = 1; f <= 6; ++f) {
    SynthesisParams p;
    p.kind = MovementKind::dorsiflexion;
    p.frequency_hz = f;
    p.duration_s = duration;
    p.noise_std = 0.0;
    const Segment seg = synthesize(p);
    const double rate = crossing_rate(seg, Channel::gx);
    const double count = rate * duration;
    check(std::abs(count - 2.0 * f * duration) <= 1.0,
          "crossing count off at " + std::to_string(f) + " Hz");
    check(rate > prev_rate, "rates not strictly increasing");
    const SpeedLevel level = speed_level(rate);
    check(static_cast<int>(level) >= prev_level, "levels went backwards");
    prev_rate = rate;
    prev_level = static_cast<int>(level);
    saw_slow = saw_slow || level == SpeedLevel::slow;
    saw_medium = saw_medium || level == SpeedLevel::medium;
    saw_fast = saw_fast || level == SpeedLevel::fast;
  }
  check(saw_slow && saw_medium && saw_fast,
        "sweep did not pass through slow, medium and fast");
  return "1..6 Hz rates within one crossing of 2fT, levels slow->medium->fast";
}

std::string run_round_trips() {
  testutil::TempDir dir("acceptance_rt");

  CorpusSpec spec;
  spec.subjects = 4;
  spec.dorsiflexion_per_subject = 5;
  spec.other_per_subject = 5;
  spec.noise_std = 0.25;
  spec.seed = 808;
  const std::vector<Recording> recordings = build_corpus(spec);

  // Dataset files: text round trip preserves every sample exactly.
  const std::string manifest = write_corpus(recordings, dir.file("corpus"));
  const Dataset loaded = load_dataset(manifest);
  const Dataset direct = corpus_dataset(recordings);
  check(loaded.segments.size() == direct.segments.size(), "segment count");
  for (std::size_t i = 0; i < loaded.segments.size(); ++i) {
    const auto& a = loaded.segments[i].samples;
    const auto& b = direct.segments[i].samples;
    check(a.size() == b.size(), "sample count");
    for (std::size_t j = 0; j < a.size(); ++j) {
      check(a[j].t == b[j].t && a[j].ax == b[j].ax && a[j].ay == b[j].ay &&
                a[j].az == b[j].az && a[j].gx == b[j].gx &&
                a[j].gy == b[j].gy && a[j].gz == b[j].gz,
            "sample mismatch after text round trip");
    }
  }

  // Model files: save/load keeps predictions bit-exact for every kind.
  CorpusSpec probe_spec = spec;
  probe_spec.seed = 809;
  probe_spec.subjects = 2;
  std::vector<Segment> probes =
      corpus_dataset(build_corpus(probe_spec)).segments;
  for (Segment& s : probes) s.subject_id = "T" + s.subject_id;

  for (const ModelKind kind :
       {ModelKind::knn, ModelKind::svm, ModelKind::mlp, ModelKind::cnn}) {
    TrainOptions opt;
    opt.kind = kind;
    opt.mrmr_k = 8;
    opt.nn.max_epochs = 2;
    opt.svm.epochs = 25;
    const ModelArtifact artifact = train_artifact(direct.segments, opt);
    const std::string path =
        dir.file(std::string("model_") + model_kind_name(kind) + ".dfx");
    save_model(artifact, path);
    const ModelArtifact back = load_model(path);
    for (const Segment& probe : probes) {
      const Prediction x = predict_segment(artifact, probe);
      const Prediction y = predict_segment(back, probe);
      check(x.label == y.label && x.score == y.score,
            std::string("prediction drifted after reload for ") +
                model_kind_name(kind));
    }
  }
  return "dataset text round trip exact; 4 model kinds reload bit-exact";
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion(1, "macro-averaging arithmetic", run_macro_averaging);
  criterion(2, "field-test count metrics", run_field_counts);
  criterion(3, "synthetic benchmark", run_benchmark);
  criterion(4, "gradient correctness", run_gradient_checks);
  criterion(5, "mrmr oracle equivalence", run_mrmr_oracle);
  criterion(6, "descriptor reference match", run_descriptor_reference);
  criterion(7, "adaptive convergence", run_adaptive_convergence);
  criterion(8, "rom regression", run_rom_regression);
  criterion(9, "zero-crossing speed sweep", run_speed_sweep);
  criterion(10, "round trips", run_round_trips);
  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
