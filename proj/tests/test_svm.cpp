// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "fdv/errors.hpp"
#include "fdv/svm.hpp"
#include "oracles.hpp"

using namespace fdv;

namespace {

struct Problem {
  Matrix x;
  std::vector<int> y;
};

Problem random_problem(int n, int dim, double shift, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Problem p;
  p.x.resize(n, dim);
  for (int i = 0; i < n; ++i) {
    const int label = i % 3 == 0 ? 1 : -1;
    p.y.push_back(label);
    for (int j = 0; j < dim; ++j) p.x(i, j) = g(rng) + (label > 0 ? shift : 0.0);
  }
  return p;
}

std::span<const double> row(const Matrix& m, Eigen::Index r) {
  return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

// Largest KKT violation of the dual solution, measured on y_i f(x_i).
double kkt_violation(const Problem& p, const DualSolution& s) {
  const auto n = p.y.size();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double f = s.bias;
    for (std::size_t j = 0; j < n; ++j) {
      f += p.y[j] * s.alpha[j] * rbf_kernel(row(p.x, i), row(p.x, j), s.gamma);
    }
    const double m = p.y[i] * f;
    const double a = s.alpha[i], c = s.upper[i];
    if (a <= 0.0) {
      worst = std::max(worst, 1.0 - m);
    } else if (a >= c) {
      worst = std::max(worst, m - 1.0);
    } else {
      worst = std::max(worst, std::abs(m - 1.0));
    }
  }
  return worst;
}

}  // namespace

TEST(RbfKernel, Examples) {
  const std::vector<double> x{1.0, 2.0}, y{1.0, 3.0};
  EXPECT_EQ(rbf_kernel(x, x, 0.7), 1.0);
  EXPECT_DOUBLE_EQ(rbf_kernel(x, y, 1.0), std::exp(-1.0));
  EXPECT_EQ(rbf_kernel(x, y, 0.3), rbf_kernel(y, x, 0.3));
  EXPECT_THROW(rbf_kernel(x, std::vector<double>{1.0}, 1.0), UsageError);
}

TEST(RbfKernel, GramMatrixIsPsd) {
  const Problem p = random_problem(25, 3, 0.0, 1);
  Matrix k(25, 25);
  for (int i = 0; i < 25; ++i)
    for (int j = 0; j < 25; ++j) k(i, j) = rbf_kernel(row(p.x, i), row(p.x, j), 0.4);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
}

TEST(Smo, TwoPointsSplitAtMidpoint) {
  Matrix x(2, 1);
  x << 0.0, 1.0;
  const std::vector<int> y{1, -1};
  SvmConfig cfg;
  cfg.gamma = 1.0;
  cfg.C = 10.0;
  cfg.tol = 1e-10;
  const SvmModel m = smo_train(x, y, cfg);
  auto f = [&](double v) { return decision_value(m, std::vector<double>{v}); };
  ASSERT_GT(f(0.0), 0.0);
  ASSERT_LT(f(1.0), 0.0);
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  EXPECT_NEAR(lo, 0.5, 1e-6);
}

TEST(Smo, KktAndEqualityConstraintOnRandomSets) {
  for (int k = 0; k < 10; ++k) {
    const Problem p = random_problem(30 + 3 * k, 2 + k % 3, 1.0, 100 + k);
    SvmConfig cfg;
    cfg.C = 0.5 + k;
    const DualSolution s = smo_solve(p.x, p.y, cfg);
    ASSERT_TRUE(s.converged);
    double eq = 0.0;
    for (std::size_t i = 0; i < p.y.size(); ++i) {
      EXPECT_GE(s.alpha[i], 0.0);
      EXPECT_LE(s.alpha[i], s.upper[i]);
      eq += p.y[i] * s.alpha[i];
    }
    EXPECT_LE(std::abs(eq), 1e-9) << "set " << k;
    EXPECT_LE(kkt_violation(p, s), 1e-3) << "set " << k;
  }
}

TEST(Smo, NegativeClassWeightDefaultsToRatio) {
  const Problem p = random_problem(30, 2, 1.0, 7);
  SvmConfig cfg;
  cfg.C = 2.0;
  const DualSolution s = smo_solve(p.x, p.y, cfg);
  EXPECT_DOUBLE_EQ(s.upper[0], 2.0);
  EXPECT_DOUBLE_EQ(s.upper[1], 2.0 * 10.0 / 20.0);
}

TEST(Smo, DecisionValueMatchesDirectSum) {
  const Problem p = random_problem(40, 3, 1.5, 8);
  const SvmModel m = smo_train(p.x, p.y, SvmConfig{});
  std::vector<std::vector<double>> sv;
  for (Eigen::Index i = 0; i < m.support_vectors.rows(); ++i) {
    const auto r = row(m.support_vectors, i);
    sv.emplace_back(r.begin(), r.end());
  }
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int t = 0; t < 50; ++t) {
    const std::vector<double> x{g(rng), g(rng), g(rng)};
    EXPECT_LE(std::abs(decision_value(m, x) - oracle::decision(sv, m.dual_coeffs, m.bias, m.gamma, x)), 1e-12);
  }
}

TEST(Smo, SeparableFourPointsClassifiedAndFreeVectorsOnMargin) {
  Matrix x(4, 2);
  x << 0, 0, 0, 1, 3, 0, 3, 1;
  const std::vector<int> y{1, 1, -1, -1};
  SvmConfig cfg;
  cfg.gamma = 0.5;
  cfg.C = 100.0;
  const DualSolution s = smo_solve(x, y, cfg);
  const SvmModel m = smo_train(x, y, cfg);
  for (int i = 0; i < 4; ++i) {
    const double f = decision_value(m, row(x, i));
    EXPECT_GT(y[static_cast<std::size_t>(i)] * f, 0.0);
    if (s.alpha[static_cast<std::size_t>(i)] > 0 && s.alpha[static_cast<std::size_t>(i)] < s.upper[static_cast<std::size_t>(i)]) {
      EXPECT_NEAR(y[static_cast<std::size_t>(i)] * f, 1.0, cfg.tol);
    }
  }
  for (double c : m.dual_coeffs) EXPECT_NE(c, 0.0);
}

TEST(Smo, ZeroSupportVectorsGiveBias) {
  SvmModel m;
  m.support_vectors.resize(0, 2);
  m.bias = -0.25;
  EXPECT_EQ(decision_value(m, std::vector<double>{1.0, 2.0}), -0.25);
}

// With no multiplier at its bound, duplicating every point halves each
// multiplier and leaves the decision function unchanged.
TEST(Smo, DuplicatedPointsKeepSigns) {
  const Problem p = random_problem(20, 2, 4.0, 10);
  Problem d;
  d.x.resize(40, 2);
  d.x << p.x, p.x;
  d.y = p.y;
  d.y.insert(d.y.end(), p.y.begin(), p.y.end());
  SvmConfig cfg;
  cfg.gamma = 0.5;
  cfg.C = 1000.0;
  cfg.tol = 1e-6;
  const SvmModel a = smo_train(p.x, p.y, cfg), b = smo_train(d.x, d.y, cfg);
  int agree = 0, total = 0;
  for (double u = -3; u <= 5; u += 0.5) {
    for (double v = -3; v <= 5; v += 0.5) {
      const std::vector<double> x{u, v};
      const double fa = decision_value(a, x), fb = decision_value(b, x);
      if (std::abs(fa) < 0.05) continue;  // too close to the boundary to compare
      agree += (fa > 0) == (fb > 0);
      ++total;
    }
  }
  EXPECT_EQ(agree, total);
}

TEST(Smo, PermutationInvariant) {
  const Problem p = random_problem(24, 2, 1.0, 11);
  std::vector<int> perm(24);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
  Problem q;
  q.x.resize(24, 2);
  for (int i = 0; i < 24; ++i) {
    q.x.row(i) = p.x.row(perm[static_cast<std::size_t>(i)]);
    q.y.push_back(p.y[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]);
  }
  SvmConfig cfg;
  cfg.tol = 1e-8;
  const SvmModel a = smo_train(p.x, p.y, cfg), b = smo_train(q.x, q.y, cfg);
  for (int i = 0; i < 24; ++i) {
    EXPECT_NEAR(decision_value(a, row(p.x, i)), decision_value(b, row(p.x, i)), 1e-5);
  }
}

TEST(Smo, RejectsBadInput) {
  Matrix x(3, 1);
  x << 0, 1, 2;
  EXPECT_THROW(smo_train(x, std::vector<int>{1, 1, 1}, SvmConfig{}), UsageError);
  EXPECT_THROW(smo_train(x, std::vector<int>{1, 0, -1}, SvmConfig{}), UsageError);
  EXPECT_THROW(smo_train(x, std::vector<int>{1, -1}, SvmConfig{}), UsageError);
  SvmConfig bad;
  bad.C = 0;
  EXPECT_THROW(smo_train(x, std::vector<int>{1, -1, -1}, bad), UsageError);
}

TEST(Smo, DefaultGammaUsesFeatureVariance) {
  Matrix x(2, 2);
  x << 0, 0, 2, 2;  // variance 1 over all entries
  EXPECT_DOUBLE_EQ(default_gamma(x), 0.5);
}
