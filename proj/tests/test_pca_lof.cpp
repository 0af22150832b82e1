#include <doctest.h>

#include <random>

#include "flowhawk/lof.hpp"
#include "flowhawk/pca.hpp"
#include "support/lof_oracle.hpp"

using flowhawk::lof_scores;
using flowhawk::pca_fit;
using flowhawk::pca_transform;

TEST_CASE("pca: collinear points explain all variance along (1,1)/sqrt(2)") {
  Eigen::MatrixXd x(5, 2);
  x << 0, 0, 1, 1, 2, 2, 3, 3, -1, -1;
  auto model = pca_fit(x, 1);
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(model.components(0, 0) == doctest::Approx(s).epsilon(1e-12));
  CHECK(model.components(0, 1) == doctest::Approx(s).epsilon(1e-12));
  const double total = (x.rowwise() - x.colwise().mean()).squaredNorm() / (x.rows() - 1);
  CHECK(model.explained_variance(0) == doctest::Approx(total).epsilon(1e-12));
}

TEST_CASE("pca: isotropic data gives equal explained variances") {
  Eigen::MatrixXd x(4, 2);
  x << 1, 0, -1, 0, 0, 1, 0, -1;
  auto model = pca_fit(x, 2);
  CHECK(model.explained_variance(0) ==
        doctest::Approx(model.explained_variance(1)).epsilon(1e-9));
}

TEST_CASE("pca: components match a covariance eigendecomposition up to sign") {
  std::mt19937_64 rng(201);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd x(50, 10);
    for (int r = 0; r < 50; ++r)
      for (int c = 0; c < 10; ++c) x(r, c) = dist(rng) * (c + 1);
    auto model = pca_fit(x, 4);

    Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    Eigen::MatrixXd cov = centered.transpose() * centered / (x.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    for (int i = 0; i < 4; ++i) {
      Eigen::VectorXd want = eig.eigenvectors().col(9 - i);  // ascending order
      const double align = std::abs(want.dot(model.components.row(i).transpose()));
      CHECK(align == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(model.explained_variance(i) ==
            doctest::Approx(eig.eigenvalues()(9 - i)).epsilon(1e-9));
    }
  }
}

TEST_CASE("pca: rank-deficient fit keeps the available components and warns") {
  Eigen::MatrixXd x(6, 3);
  for (int r = 0; r < 6; ++r) {
    x(r, 0) = r;
    x(r, 1) = 2.0 * r;
    x(r, 2) = -r;
  }
  auto model = pca_fit(x, 3);
  CHECK(model.rank_deficient);
  CHECK(model.components.rows() == 1);
}

TEST_CASE("pca transform: the fitted mean maps to the origin") {
  std::mt19937_64 rng(202);
  std::normal_distribution<double> dist(0.0, 2.0);
  Eigen::MatrixXd x(20, 4);
  for (int r = 0; r < 20; ++r)
    for (int c = 0; c < 4; ++c) x(r, c) = dist(rng);
  auto model = pca_fit(x, 2);
  Eigen::MatrixXd mean = x.colwise().mean();
  CHECK(pca_transform(model, mean).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pca transform: a component row shifted by the mean maps to a unit basis vector") {
  std::mt19937_64 rng(203);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(30, 5);
  auto model = pca_fit(x, 3);
  Eigen::MatrixXd probe = model.components.row(1) + model.means.row(0);
  Eigen::MatrixXd y = pca_transform(model, probe);
  for (int c = 0; c < 3; ++c)
    CHECK(y(0, c) == doctest::Approx(c == 1 ? 1.0 : 0.0).epsilon(1e-9));
}

TEST_CASE("pca transform matches the direct matrix product") {
  std::mt19937_64 rng(204);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(25, 6);
  auto model = pca_fit(x, 2);
  Eigen::MatrixXd probe = Eigen::MatrixXd::Random(7, 6);
  Eigen::MatrixXd got = pca_transform(model, probe);
  for (int r = 0; r < 7; ++r)
    for (int c = 0; c < 2; ++c) {
      double acc = 0.0;
      for (int f = 0; f < 6; ++f)
        acc += (probe(r, f) - model.means(0, f)) * model.components(c, f);
      CHECK(got(r, c) == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("pca: pairwise dot products are preserved inside the component subspace") {
  std::mt19937_64 rng(205);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(40, 6);
  auto model = pca_fit(x, 6);  // full basis
  Eigen::MatrixXd proj = pca_transform(model, x);
  Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b)
      CHECK(proj.row(a).dot(proj.row(b)) ==
            doctest::Approx(centered.row(a).dot(centered.row(b))).epsilon(1e-9));
}

// ---------------------------------------------------------------------------

TEST_CASE("lof: interior points of an evenly spaced line score exactly 1") {
  const int n = 12;
  Eigen::MatrixXd pts(n, 1);
  for (int i = 0; i < n; ++i) pts(i, 0) = 0.5 * i;
  auto res = lof_scores(pts, 2);
  for (int i = 3; i <= n - 4; ++i)
    CHECK(res.scores(i) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("lof: a far point outside a tight cluster gets the top score, far above 1") {
  std::mt19937_64 rng(211);
  std::normal_distribution<double> dist(0.0, 0.01);
  Eigen::MatrixXd pts(101, 2);
  for (int i = 0; i < 100; ++i) {
    pts(i, 0) = dist(rng);
    pts(i, 1) = dist(rng);
  }
  pts(100, 0) = 5.0;
  pts(100, 1) = 5.0;
  auto res = lof_scores(pts, 10);
  Eigen::Index at;
  res.scores.maxCoeff(&at);
  CHECK(at == 100);
  CHECK(res.scores(100) > 10.0);
}

TEST_CASE("lof matches the brute-force oracle on random sets") {
  std::mt19937_64 rng(212);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int k : {2, 5, 25}) {
    for (int trial = 0; trial < 4; ++trial) {
      const int n = 40 + static_cast<int>(rng() % 80);
      Eigen::MatrixXd pts(n, 3);
      for (int i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) pts(i, c) = dist(rng);
      auto got = lof_scores(pts, k);
      auto want = testsupport::lof_bruteforce(pts, k);
      for (int i = 0; i < n; ++i) {
        CHECK(std::abs(got.scores(i) - want.scores(i)) / want.scores(i) < 1e-9);
        CHECK(got.k_distance(i) == doctest::Approx(want.kdist(i)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("lof: scaling all coordinates leaves the scores unchanged") {
  std::mt19937_64 rng(213);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::MatrixXd pts(60, 2);
  for (int i = 0; i < 60; ++i)
    for (int c = 0; c < 2; ++c) pts(i, c) = dist(rng);
  auto base = lof_scores(pts, 5);
  auto scaled = lof_scores(Eigen::MatrixXd(pts * 37.5), 5);
  for (int i = 0; i < 60; ++i)
    CHECK(std::abs(base.scores(i) - scaled.scores(i)) < 1e-9 * base.scores(i));
}

TEST_CASE("lof: duplicate points hit the density cap without dividing by zero") {
  Eigen::MatrixXd pts(7, 2);
  pts << 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 2, 2, 3, 3;
  auto res = lof_scores(pts, 2);
  for (int i = 0; i < 7; ++i) CHECK(std::isfinite(res.scores(i)));
  CHECK(res.lrd(0) == doctest::Approx(flowhawk::kLofDensityCap));
}

TEST_CASE("lof: n <= k is a parameter error") {
  Eigen::MatrixXd pts = Eigen::MatrixXd::Random(5, 2);
  CHECK_THROWS_AS(lof_scores(pts, 5), flowhawk::ConfigError);
  CHECK_THROWS_AS(lof_scores(pts, 0), flowhawk::ConfigError);
}
