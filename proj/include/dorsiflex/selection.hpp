#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "dorsiflex/error.hpp"
#include "dorsiflex/eval.hpp"

namespace dorsiflex {

/// Cap returned when a feature separates the classes with zero
/// within-group variance; keeps the relevance score total.
inline constexpr double kFStatisticCap = 1e12;

/// One-way ANOVA F statistic of a feature column against binary labels:
/// F = (between-group SS / (g-1)) / (within-group SS / (n-g)) with g = 2.
/// A constant column scores 0; zero within-group variance scores the cap.
inline double f_statistic(std::span<const double> column,
                          std::span<const int> labels) {
  if (column.size() != labels.size()) {
    throw ParamError("feature column and labels differ in length");
  }
  const std::size_t n = column.size();
  if (n < 4) throw ParamError("F statistic needs at least 4 rows");

  double sum[2] = {0.0, 0.0};
  std::size_t count[2] = {0, 0};
  double lo = column[0], hi = column[0];
  for (std::size_t i = 0; i < n; ++i) {
    const int g = labels[i] ? 1 : 0;
    sum[g] += column[i];
    ++count[g];
    lo = std::min(lo, column[i]);
    hi = std::max(hi, column[i]);
  }
  if (count[0] == 0 || count[1] == 0) {
    throw ParamError("both classes must be present");
  }
  if (lo == hi) return 0.0;  // constant column: no between-group variance
  const double mean0 = sum[0] / static_cast<double>(count[0]);
  const double mean1 = sum[1] / static_cast<double>(count[1]);
  const double grand = (sum[0] + sum[1]) / static_cast<double>(n);

  const double ssb = static_cast<double>(count[0]) * (mean0 - grand) *
                         (mean0 - grand) +
                     static_cast<double>(count[1]) * (mean1 - grand) *
                         (mean1 - grand);
  double ssw = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = column[i] - (labels[i] ? mean1 : mean0);
    ssw += d * d;
  }
  if (ssb == 0.0) return 0.0;
  if (ssw == 0.0) return kFStatisticCap;
  return ssb / (ssw / static_cast<double>(n - 2));
}

/// Pearson correlation coefficient; 0 when either input has zero variance.
inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ParamError("length mismatch");
  if (a.size() < 2) throw ParamError("need at least 2 values");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  // A constant input has zero variance by definition, not by arithmetic.
  const auto constant = [](std::span<const double> v) {
    for (double e : v) {
      if (e != v[0]) return false;
    }
    return true;
  };
  if (constant(a) || constant(b)) return 0.0;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

/// How relevance and redundancy combine into one greedy score.
enum class MrmrScoring {
  quotient,    // F / mean |r|  (default)
  difference,  // F - mean |r|
};

struct SelectionResult {
  std::vector<int> ranked_indices;
  std::vector<double> scores;  // greedy score at the step each pick was made

  int k() const { return static_cast<int>(ranked_indices.size()); }
};

namespace detail {

inline std::vector<double> matrix_column(const Eigen::MatrixXd& x, int j) {
  std::vector<double> col(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    col[static_cast<std::size_t>(i)] = x(i, j);
  }
  return col;
}

}  // namespace detail

/// Greedy minimum-redundancy maximum-relevance selection. The first pick
/// maximizes the F statistic; each later pick maximizes
///   score(f) = F(f) / max(eps, mean_{s in selected} |pearson(f, s)|)
/// (or the difference form), ties broken toward the lowest feature index.
inline SelectionResult mrmr_select(const Eigen::MatrixXd& x,
                                   const std::vector<int>& y, int k,
                                   MrmrScoring scoring = MrmrScoring::quotient) {
  const int d = static_cast<int>(x.cols());
  if (k < 1 || k > d) throw ParamError("k must be in [1, feature count]");
  if (static_cast<Eigen::Index>(y.size()) != x.rows()) {
    throw ParamError("label count does not match row count");
  }
  constexpr double kEps = 1e-12;

  std::vector<std::vector<double>> cols;
  cols.reserve(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) cols.push_back(detail::matrix_column(x, j));

  std::vector<double> relevance(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    relevance[static_cast<std::size_t>(j)] = f_statistic(cols[static_cast<std::size_t>(j)], y);
  }

  SelectionResult result;
  std::vector<bool> selected(static_cast<std::size_t>(d), false);
  // Running sum of |r| against already-selected features, per candidate.
  std::vector<double> redundancy_sum(static_cast<std::size_t>(d), 0.0);

  for (int step = 0; step < k; ++step) {
    int best = -1;
    double best_score = 0.0;
    for (int j = 0; j < d; ++j) {
      if (selected[static_cast<std::size_t>(j)]) continue;
      double score;
      if (step == 0) {
        score = relevance[static_cast<std::size_t>(j)];
      } else {
        const double mean_red =
            redundancy_sum[static_cast<std::size_t>(j)] / step;
        score = scoring == MrmrScoring::quotient
                    ? relevance[static_cast<std::size_t>(j)] /
                          std::max(kEps, mean_red)
                    : relevance[static_cast<std::size_t>(j)] - mean_red;
      }
      if (best < 0 || score > best_score) {
        best = j;
        best_score = score;
      }
    }
    selected[static_cast<std::size_t>(best)] = true;
    result.ranked_indices.push_back(best);
    result.scores.push_back(best_score);
    for (int j = 0; j < d; ++j) {
      if (selected[static_cast<std::size_t>(j)]) continue;
      redundancy_sum[static_cast<std::size_t>(j)] += std::abs(
          pearson(cols[static_cast<std::size_t>(j)], cols[static_cast<std::size_t>(best)]));
    }
  }
  return result;
}

/// Pick how many of the ranked features to keep: evaluate leave-one-out
/// accuracy for every k and return the smallest k reaching the maximum.
inline int choose_k(const Eigen::MatrixXd& x, const std::vector<int>& y,
                    const TrainerFn& trainer,
                    MrmrScoring scoring = MrmrScoring::quotient) {
  const int d = static_cast<int>(x.cols());
  if (d < 1 || x.rows() < 2) throw ParamError("dataset too small");
  const SelectionResult ranking = mrmr_select(x, y, d, scoring);

  int best_k = 1;
  double best_acc = -1.0;
  Eigen::MatrixXd sub(x.rows(), d);
  for (int k = 1; k <= d; ++k) {
    sub.col(k - 1) = x.col(ranking.ranked_indices[static_cast<std::size_t>(k - 1)]);
    // Accuracies are exact multiples of 1/n, so plain comparison is safe
    // and equal scores keep the smaller k.
    const double acc = loocv(sub.leftCols(k), y, trainer);
    if (acc > best_acc) {
      best_acc = acc;
      best_k = k;
    }
  }
  return best_k;
}

/// Selected features as canonical names, rank order, one per line.
inline std::string render_selection(const SelectionResult& result,
                                    std::span<const std::string> names) {
  std::string out;
  for (int idx : result.ranked_indices) {
    out += names[static_cast<std::size_t>(idx)];
    out += '\n';
  }
  return out;
}

}  // namespace dorsiflex
