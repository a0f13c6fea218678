#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dorsiflex/error.hpp"

namespace dorsiflex {

/// Exact non-negative rational. Metric arithmetic stays in integers end to
/// end; rounding happens only when a value is displayed.
class Rational {
 public:
  Rational() : num_(0), den_(1) {}
  Rational(long long num, long long den) : num_(num), den_(den) {
    if (den_ == 0) throw ParamError("rational with zero denominator");
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    reduce();
  }
  static Rational from_int(long long v) { return Rational(v, 1); }

  long long num() const { return num_; }
  long long den() const { return den_; }
  double value() const {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

  Rational operator+(const Rational& o) const {
    return Rational(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
  }
  Rational operator*(const Rational& o) const {
    return Rational(num_ * o.num_, den_ * o.den_);
  }
  Rational operator/(const Rational& o) const {
    if (o.num_ == 0) throw ParamError("rational division by zero");
    return Rational(num_ * o.den_, den_ * o.num_);
  }
  bool operator==(const Rational& o) const {
    return num_ == o.num_ && den_ == o.den_;
  }

 private:
  void reduce() {
    const long long g = std::gcd(num_ < 0 ? -num_ : num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }
  long long num_, den_;
};

/// p/q rounded to milli-units, halves away from zero. Exact: 0.9625 -> 963.
inline long long round_milli(const Rational& r) {
  if (r.num() < 0) throw ParamError("negative metric");
  return (2000 * r.num() + r.den()) / (2 * r.den());
}

/// Three-decimal display form used by every report.
inline std::string format3(const Rational& r) {
  const long long milli = round_milli(r);
  std::ostringstream out;
  out << milli / 1000 << '.';
  const long long frac = milli % 1000;
  out << static_cast<char>('0' + frac / 100)
      << static_cast<char>('0' + (frac / 10) % 10)
      << static_cast<char>('0' + frac % 10);
  return out.str();
}

inline std::string format3(double v) {
  if (v < 0.0) throw ParamError("negative metric");
  // Tolerate the last-bit error of decimal-derived doubles around a half.
  const auto milli =
      static_cast<long long>(std::floor(v * 1000.0 + 0.5 + 1e-9));
  std::ostringstream out;
  out << milli / 1000 << '.';
  const long long frac = milli % 1000;
  out << static_cast<char>('0' + frac / 100)
      << static_cast<char>('0' + (frac / 10) % 10)
      << static_cast<char>('0' + frac % 10);
  return out.str();
}

/// Binary confusion counts with dorsiflexion as the positive class.
struct ConfusionMatrix {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
  long long tn = 0;

  long long total() const { return tp + fp + fn + tn; }
};

struct ClassMetrics {
  Rational precision;
  Rational recall;
  Rational f_score;
};

/// Per-class and macro-averaged metrics. Any 0/0 metric is defined as 0.
struct MetricsReport {
  Rational accuracy;
  ClassMetrics dorsiflexion;
  ClassMetrics non_dorsiflexion;
  ClassMetrics overall;  // arithmetic mean of the two class blocks
};

namespace detail {

inline Rational safe_ratio(long long num, long long den) {
  return den == 0 ? Rational() : Rational(num, den);
}

inline Rational harmonic_mean(const Rational& a, const Rational& b) {
  const Rational sum = a + b;
  if (sum.num() == 0) return Rational();
  return Rational(2, 1) * a * b / sum;
}

inline ClassMetrics class_metrics(long long tp, long long fp, long long fn) {
  ClassMetrics m;
  m.precision = safe_ratio(tp, tp + fp);
  m.recall = safe_ratio(tp, tp + fn);
  m.f_score = harmonic_mean(m.precision, m.recall);
  return m;
}

}  // namespace detail

inline MetricsReport metrics(const ConfusionMatrix& cm) {
  if (cm.total() < 1) throw ParamError("empty confusion matrix");
  if (cm.tp < 0 || cm.fp < 0 || cm.fn < 0 || cm.tn < 0) {
    throw ParamError("negative confusion count");
  }
  MetricsReport r;
  r.accuracy = Rational(cm.tp + cm.tn, cm.total());
  r.dorsiflexion = detail::class_metrics(cm.tp, cm.fp, cm.fn);
  // Same matrix viewed with the other class as positive.
  r.non_dorsiflexion = detail::class_metrics(cm.tn, cm.fn, cm.fp);
  const Rational half(1, 2);
  r.overall.precision =
      (r.dorsiflexion.precision + r.non_dorsiflexion.precision) * half;
  r.overall.recall = (r.dorsiflexion.recall + r.non_dorsiflexion.recall) * half;
  r.overall.f_score =
      (r.dorsiflexion.f_score + r.non_dorsiflexion.f_score) * half;
  return r;
}

/// Externally reported values to cross-check a matrix against.
struct ClaimedMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// Lines flagging claimed values whose 3-decimal form disagrees with the
/// values computed from the counts. Empty when everything matches.
inline std::vector<std::string> metric_discrepancies(
    const ConfusionMatrix& cm, const ClaimedMetrics& claimed) {
  const MetricsReport r = metrics(cm);
  std::vector<std::string> notes;
  auto check = [&](const char* name, const Rational& computed,
                   double claimed_value) {
    if (format3(computed) != format3(claimed_value)) {
      notes.push_back(std::string("note: ") + name + " computed from counts " +
                      format3(computed) + " differs from reported " +
                      format3(claimed_value));
    }
  };
  check("accuracy", r.accuracy, claimed.accuracy);
  check("precision", r.dorsiflexion.precision, claimed.precision);
  check("recall", r.dorsiflexion.recall, claimed.recall);
  return notes;
}

namespace detail {

inline void report_rows(
    const MetricsReport& r,
    const std::function<void(const char*, const char*, const Rational&)>& row) {
  row("Overall", "Accuracy", r.accuracy);
  row("Overall", "Precision", r.overall.precision);
  row("Overall", "Recall", r.overall.recall);
  row("Overall", "F-score", r.overall.f_score);
  row("Dorsiflexion", "Precision", r.dorsiflexion.precision);
  row("Dorsiflexion", "Recall", r.dorsiflexion.recall);
  row("Dorsiflexion", "F-score", r.dorsiflexion.f_score);
  row("Non-dorsiflexion", "Precision", r.non_dorsiflexion.precision);
  row("Non-dorsiflexion", "Recall", r.non_dorsiflexion.recall);
  row("Non-dorsiflexion", "F-score", r.non_dorsiflexion.f_score);
}

}  // namespace detail

/// Aligned plain-text report: overall block, then one block per class.
inline std::string render_report(
    const std::string& model_name, const ConfusionMatrix& cm,
    const std::optional<ClaimedMetrics>& claimed = std::nullopt) {
  const MetricsReport r = metrics(cm);
  std::ostringstream out;
  out << "model: " << model_name << '\n';
  out << "counts: tp=" << cm.tp << " fp=" << cm.fp << " fn=" << cm.fn
      << " tn=" << cm.tn << '\n';
  std::string last_group;
  detail::report_rows(r, [&](const char* group, const char* name,
                             const Rational& v) {
    std::string g = group == last_group ? "" : group;
    last_group = group;
    g.resize(18, ' ');
    std::string n = name;
    n.resize(11, ' ');
    out << g << n << format3(v) << '\n';
  });
  if (claimed) {
    for (const std::string& note : metric_discrepancies(cm, *claimed)) {
      out << note << '\n';
    }
  }
  return out.str();
}

/// Machine-readable form of the same report: group,metric,value rows.
inline std::string render_report_csv(const ConfusionMatrix& cm) {
  const MetricsReport r = metrics(cm);
  std::ostringstream out;
  out << "group,metric,value\n";
  out << "counts,tp," << cm.tp << "\ncounts,fp," << cm.fp << "\ncounts,fn,"
      << cm.fn << "\ncounts,tn," << cm.tn << '\n';
  detail::report_rows(r, [&](const char* group, const char* name,
                             const Rational& v) {
    out << group << ',' << name << ',' << format3(v) << '\n';
  });
  return out.str();
}

using PredictorFn = std::function<int(const Eigen::RowVectorXd&)>;
using TrainerFn =
    std::function<PredictorFn(const Eigen::MatrixXd&, const std::vector<int>&)>;

/// Leave-one-out cross-validation accuracy: train on all rows but one,
/// predict the held-out row, average over all folds.
inline double loocv(const Eigen::MatrixXd& x, const std::vector<int>& y,
                    const TrainerFn& trainer) {
  const Eigen::Index n = x.rows();
  if (n < 2) throw ParamError("leave-one-out needs at least 2 rows");
  if (static_cast<Eigen::Index>(y.size()) != n) {
    throw ParamError("label count does not match row count");
  }
  Eigen::MatrixXd fold_x(n - 1, x.cols());
  std::vector<int> fold_y(static_cast<std::size_t>(n) - 1);
  long long correct = 0;
  for (Eigen::Index held = 0; held < n; ++held) {
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == held) continue;
      fold_x.row(r) = x.row(i);
      fold_y[static_cast<std::size_t>(r)] = y[static_cast<std::size_t>(i)];
      ++r;
    }
    const PredictorFn predict = trainer(fold_x, fold_y);
    if (predict(x.row(held)) == y[static_cast<std::size_t>(held)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

}  // namespace dorsiflex
