#include <catch2/catch_amalgamated.hpp>
#include <numeric>

#include "dorsiflex/knn.hpp"
#include "dorsiflex/rng.hpp"
#include "dorsiflex/svm.hpp"

using namespace dorsiflex;
using Catch::Approx;

namespace {

Eigen::RowVectorXd row1(double v) {
  Eigen::RowVectorXd r(1);
  r << v;
  return r;
}

/// Two well-separated Gaussian blobs in d dimensions.
void make_blobs(int n, int d, double gap, std::uint64_t seed,
                Eigen::MatrixXd& x, std::vector<int>& y) {
  Rng rng(seed);
  x.resize(n, d);
  y.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    y[static_cast<std::size_t>(i)] = label;
    for (int j = 0; j < d; ++j) {
      x(i, j) = rng.normal(label ? gap : -gap, 1.0);
    }
  }
}

}  // namespace

TEST_CASE("knn basics") {
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 10.0;
  const KnnModel model = knn_train(x, {0, 1}, 1);

  SECTION("a training point is its own nearest neighbor") {
    REQUIRE(knn_predict(model, row1(0.0)).label == 0);
    REQUIRE(knn_predict(model, row1(10.0)).label == 1);
  }
  SECTION("queries go to the closer point") {
    REQUIRE(knn_predict(model, row1(1.0)).label == 0);
    REQUIRE(knn_predict(model, row1(9.0)).label == 1);
  }
  SECTION("score is the winning vote share") {
    REQUIRE(knn_predict(model, row1(1.0)).score == 1.0);
  }
  SECTION("dimension mismatch is an error") {
    Eigen::RowVectorXd q(2);
    q << 0.0, 0.0;
    REQUIRE_THROWS_AS(knn_predict(model, q), ParamError);
  }
  SECTION("k out of range is an error") {
    REQUIRE_THROWS_AS(knn_train(x, {0, 1}, 3), ParamError);
    REQUIRE_THROWS_AS(knn_train(x, {0, 1}, 0), ParamError);
  }
  SECTION("label count must match") {
    REQUIRE_THROWS_AS(knn_train(x, {0, 1, 1}, 1), ParamError);
  }
}

TEST_CASE("knn self-accuracy is perfect without conflicting duplicates") {
  Eigen::MatrixXd x;
  std::vector<int> y;
  make_blobs(30, 4, 4.0, 91, x, y);
  const KnnModel model = knn_train(x, y, 1);
  for (int i = 0; i < x.rows(); ++i) {
    REQUIRE(knn_predict(model, x.row(i)).label ==
            y[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("knn prediction is invariant under training-row permutation") {
  Eigen::MatrixXd x;
  std::vector<int> y;
  make_blobs(21, 3, 2.0, 17, x, y);
  const KnnModel a = knn_train(x, y, 3);

  std::vector<int> perm(21);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(5);
  rng.shuffle(perm);
  Eigen::MatrixXd xp(x.rows(), x.cols());
  std::vector<int> yp(y.size());
  for (int i = 0; i < 21; ++i) {
    xp.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
    yp[static_cast<std::size_t>(i)] =
        y[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
  }
  const KnnModel b = knn_train(xp, yp, 3);

  Rng qrng(6);
  for (int q = 0; q < 40; ++q) {
    Eigen::RowVectorXd query(3);
    for (int j = 0; j < 3; ++j) query[j] = qrng.normal(0.0, 3.0);
    REQUIRE(knn_predict(a, query).label == knn_predict(b, query).label);
  }
}

TEST_CASE("knn vote ties go to the nearest neighbor") {
  // k = 2 with one neighbor of each label: the closer one wins.
  Eigen::MatrixXd x(2, 1);
  x << 1.0, 2.0;
  const KnnModel model = knn_train(x, {1, 0}, 2);
  REQUIRE(knn_predict(model, row1(0.0)).label == 1);
  REQUIRE(knn_predict(model, row1(5.0)).label == 0);
}

TEST_CASE("svm separates a two-point set") {
  Eigen::MatrixXd x(2, 1);
  x << -1.0, 1.0;
  const SvmModel model = svm_train(x, {0, 1});
  const Prediction neg = svm_predict(model, row1(-1.0));
  const Prediction pos = svm_predict(model, row1(1.0));
  REQUIRE(neg.label == 0);
  REQUIRE(pos.label == 1);
  REQUIRE(neg.score < 0.0);
  REQUIRE(pos.score > 0.0);
}

TEST_CASE("svm training is deterministic for a seed") {
  Eigen::MatrixXd x;
  std::vector<int> y;
  make_blobs(40, 5, 2.0, 23, x, y);
  SvmConfig config;
  config.seed = 7;
  const SvmModel a = svm_train(x, y, config);
  const SvmModel b = svm_train(x, y, config);
  REQUIRE(a.b == b.b);
  for (int j = 0; j < 5; ++j) REQUIRE(a.w[j] == b.w[j]);
}

TEST_CASE("svm rejects degenerate input") {
  Eigen::MatrixXd x(3, 1);
  x << 1.0, 2.0, 3.0;
  REQUIRE_THROWS_AS(svm_train(x, {1, 1, 1}), ParamError);
  REQUIRE_THROWS_AS(svm_train(x, {0, 1}), ParamError);
  SvmConfig bad;
  bad.lambda = 0.0;
  REQUIRE_THROWS_AS(svm_train(x, {0, 1, 1}, bad), ParamError);
}

TEST_CASE("svm labels survive input scaling with lambda / c^2 retraining") {
  Eigen::MatrixXd x;
  std::vector<int> y;
  make_blobs(60, 4, 2.5, 2024, x, y);
  SvmConfig base;
  base.lambda = 1e-3;
  base.seed = 3;
  const SvmModel reference = svm_train(x, y, base);

  for (const double c : {0.5, 2.0, 10.0}) {
    INFO("c = " << c);
    SvmConfig scaled = base;
    scaled.lambda = base.lambda / (c * c);
    const SvmModel rescaled = svm_train(c * x, y, scaled);
    for (int i = 0; i < x.rows(); ++i) {
      const Eigen::RowVectorXd q = x.row(i);
      REQUIRE(svm_predict(reference, q).label ==
              svm_predict(rescaled, Eigen::RowVectorXd(c * q)).label);
    }
  }
}

TEST_CASE("svm classifies separable blobs well") {
  Eigen::MatrixXd x;
  std::vector<int> y;
  make_blobs(60, 4, 3.0, 47, x, y);
  const SvmModel model = svm_train(x, y);
  int correct = 0;
  for (int i = 0; i < x.rows(); ++i) {
    correct += svm_predict(model, x.row(i)).label ==
               y[static_cast<std::size_t>(i)];
  }
  REQUIRE(correct >= 57);  // 95% on its own training data
}
