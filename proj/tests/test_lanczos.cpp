#include <pam/lanczos.hpp>
#include <pam/rng.hpp>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace {

Eigen::MatrixXd random_symmetric(int n, std::uint64_t seed) {
  pam::Stream rng(seed, 0);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = 2.0 * rng.uniform() - 1.0;
  }
  return a;
}

std::vector<double> ones(int n) { return std::vector<double>(static_cast<std::size_t>(n), 1.0); }

auto dense_apply(const Eigen::MatrixXd& a) {
  return [&a](std::span<const double> in, std::span<double> out) {
    Eigen::Map<const Eigen::VectorXd> x(in.data(), static_cast<Eigen::Index>(in.size()));
    Eigen::Map<Eigen::VectorXd> y(out.data(), static_cast<Eigen::Index>(out.size()));
    y += a * x;
  };
}

double dense_top(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

TEST(Lanczos, RandomMatricesAgainstDenseSolver) {
  for (int n : {5, 50, 300}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto a = random_symmetric(n, seed + 10u * static_cast<std::uint64_t>(n));
      pam::EigenOptions o;
      o.tol = 1e-10;
      const auto r = pam::symmetric_top_eigenpair(dense_apply(a), ones(n), o);
      EXPECT_TRUE(r.converged);
      EXPECT_LE(r.residual, 1e-10);
      EXPECT_NEAR(r.value, dense_top(a), 1e-8) << "n=" << n;
      // residual recomputed from the returned vector
      Eigen::Map<const Eigen::VectorXd> y(r.vector.data(), n);
      EXPECT_NEAR(y.norm(), 1.0, 1e-12);
      EXPECT_LE((a * y - r.value * y).norm(), 2e-10);
    }
  }
}

TEST(Lanczos, RayleighQuotientIsALowerBound) {
  const auto a = random_symmetric(120, 77);
  pam::EigenOptions o;
  o.tol = 1e-3;
  const auto r = pam::symmetric_top_eigenpair(dense_apply(a), ones(120), o);
  EXPECT_LE(r.value, dense_top(a) + 1e-12);
}

TEST(Lanczos, NegativeTopAndDegenerateTop) {
  Eigen::MatrixXd neg = -Eigen::MatrixXd::Identity(10, 10);
  neg(3, 3) = -0.25;
  auto r = pam::symmetric_top_eigenpair(dense_apply(neg), ones(10));
  EXPECT_NEAR(r.value, -0.25, 1e-12);

  Eigen::MatrixXd deg = Eigen::MatrixXd::Zero(8, 8);
  deg(0, 0) = deg(1, 1) = 2.0;
  r = pam::symmetric_top_eigenpair(dense_apply(deg), ones(8));
  EXPECT_NEAR(r.value, 2.0, 1e-12);

  // start vector already an eigenvector: immediate breakdown
  const Eigen::MatrixXd id = 3.0 * Eigen::MatrixXd::Identity(6, 6);
  r = pam::symmetric_top_eigenpair(dense_apply(id), ones(6));
  EXPECT_NEAR(r.value, 3.0, 1e-14);
  EXPECT_TRUE(r.converged);
}

TEST(Lanczos, PowerFallback) {
  auto a = random_symmetric(30, 5);
  a += 4.0 * Eigen::MatrixXd::Identity(30, 30);  // well separated top
  pam::EigenOptions o;
  o.power_fallback = true;
  o.shift = 30.0;
  o.tol = 1e-8;
  o.max_iters = 2'000'000;
  const auto r = pam::symmetric_top_eigenpair(dense_apply(a), ones(30), o);
  EXPECT_NEAR(r.value, dense_top(a), 1e-7);
}

TEST(Lanczos, ConvergenceFailureCarriesBestEstimate) {
  const auto a = random_symmetric(200, 9);
  pam::EigenOptions o;
  o.tol = 1e-14;
  o.max_iters = 10;
  try {
    pam::symmetric_top_eigenpair(dense_apply(a), ones(200), o);
    FAIL() << "expected a convergence error";
  } catch (const pam::convergence_error& e) {
    EXPECT_LE(e.best_value(), dense_top(a) + 1e-12);
    EXPECT_GT(e.best_residual(), 0.0);
  }
}

TEST(Lanczos, RejectsBadInput) {
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_THROW(pam::symmetric_top_eigenpair(dense_apply(a), std::vector<double>(3, 0.0)), pam::error);
  EXPECT_THROW(pam::symmetric_top_eigenpair(dense_apply(a), std::vector<double>{}), pam::error);
}

}  // namespace
