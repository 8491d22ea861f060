#include "metricproj/core.hpp"

#include "oracle/dense_reference.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

namespace metricproj {
namespace {

using oracle::build_dense;
using oracle::random_instance;

TEST(PairIndexTest, SymmetricAndInvertible) {
  const Index n = 23;
  std::set<Index> seen;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      EXPECT_EQ(pair_index(i, j), pair_index(j, i));
      const auto [a, b] = pair_from_index(pair_index(i, j));
      EXPECT_EQ(a, std::min(i, j));
      EXPECT_EQ(b, std::max(i, j));
      seen.insert(pair_index(i, j));
    }
  EXPECT_EQ(static_cast<Index>(seen.size()), pair_count(n));
  EXPECT_EQ(*seen.rbegin(), pair_count(n) - 1);
}

TEST(PrimalStateTest, BothOrientationsShareStorage) {
  PrimalState<double> s(6);
  s.x_at(4, 1) = 2.5;
  s.f_at(0, 5) = -1.0;
  EXPECT_EQ(s.x_at(1, 4), 2.5);
  EXPECT_EQ(&s.x_at(1, 4), &s.x_at(4, 1));
  EXPECT_EQ(s.f_at(5, 0), -1.0);
}

TEST(ConstraintCountTest, SmallestInstance) {
  EXPECT_EQ(constraint_count(3, true), 3u);
  EXPECT_EQ(constraint_count(3), 3u + 6u);
  EXPECT_THROW(constraint_count(2), DomainError);
}

TEST(ConstraintCountTest, MatchesExhaustiveEnumeration) {
  for (Index n = 3; n <= 30; ++n) {
    std::uint64_t metric = 0, pairs = 0;
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) {
        pairs += 2;
        for (Index k = j + 1; k < n; ++k) metric += 3;
      }
    EXPECT_EQ(constraint_count(n, true), metric) << n;
    EXPECT_EQ(constraint_count(n), metric + pairs) << n;
  }
}

TEST(ConstraintCountTest, LargeGraphsRoundToReportedCounts) {
  const double grqc = static_cast<double>(constraint_count(4158, true));
  const double astro = static_cast<double>(constraint_count(17903, true));
  EXPECT_NEAR(grqc, 3.59e10, 0.01e10);
  EXPECT_NEAR(astro, 2.87e12, 0.01e12);
  EXPECT_DOUBLE_EQ(std::round(grqc / 1e9) / 10, 3.6);
  EXPECT_DOUBLE_EQ(std::round(astro / 1e11) / 10, 2.9);
}

TEST(ConstraintKeyTest, MetricCodeRoundTrips) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<Index> pick(0, 199);
  std::set<std::uint64_t> codes;
  for (int t = 0; t < 2000; ++t) {
    Index a = pick(rng), b = pick(rng), c = pick(rng);
    if (a == b || b == c || a == c) continue;
    Index idx[3] = {a, b, c};
    std::sort(idx, idx + 3);
    const auto kind = static_cast<ConstraintKind>(t % 3);
    const auto key = ConstraintKey::metric(kind, idx[0], idx[1], idx[2]);
    EXPECT_EQ(ConstraintKey::from_metric_code(key.metric_code()), key);
  }
  for (Index k = 2; k < 12; ++k)
    for (Index j = 1; j < k; ++j)
      for (Index i = 0; i < j; ++i)
        for (int kind = 0; kind < 3; ++kind)
          EXPECT_TRUE(codes.insert(ConstraintKey::metric(static_cast<ConstraintKind>(kind), i, j, k).metric_code())
                          .second);
  EXPECT_THROW(ConstraintKey::metric(ConstraintKind::pair_upper, 0, 1, 2), DomainError);
  EXPECT_THROW(ConstraintKey::metric(ConstraintKind::metric_ij, 1, 0, 2), DomainError);
  EXPECT_THROW(ConstraintKey::pair(ConstraintKind::metric_ik, 0, 1), DomainError);
}

TEST(ProblemInstanceTest, RejectsInvalidData) {
  VectorX<double> d = VectorX<double>::Zero(3), w = VectorX<double>::Ones(3);
  EXPECT_NO_THROW(ProblemInstance<double>(3, d, w, 0.2));
  EXPECT_THROW(ProblemInstance<double>(2, VectorX<double>::Zero(1), VectorX<double>::Ones(1), 0.2), DomainError);
  EXPECT_THROW(ProblemInstance<double>(3, d, w, 0.0), DomainError);
  VectorX<double> bad_w = w;
  bad_w[1] = 0;
  EXPECT_THROW(ProblemInstance<double>(3, d, bad_w, 0.2), DomainError);
  VectorX<double> bad_d = d;
  bad_d[0] = -1;
  EXPECT_THROW(ProblemInstance<double>(3, bad_d, w, 0.2), DomainError);
  EXPECT_THROW(ProblemInstance<double>(4, d, w, 0.2), DomainError);

  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(3, 3), W = Eigen::MatrixXd::Ones(3, 3);
  D(0, 1) = 1;
  EXPECT_THROW(ProblemInstance<double>::from_dense(D, W, 0.2), DomainError);
  D(1, 0) = 1;
  const auto inst = ProblemInstance<double>::from_dense(D, W, 0.2);
  EXPECT_EQ(inst.d(1, 0), 1.0);
  EXPECT_EQ(inst.d(0, 2), 0.0);
}

TEST(PrimalObjectiveTest, Examples) {
  const auto inst = ProblemInstance<double>(3, VectorX<double>::Zero(3), VectorX<double>::Ones(3), 1.0);
  PrimalState<double> s(3);
  EXPECT_EQ(primal_objective(inst, s), 0.0);
  s.f.setOnes();
  EXPECT_DOUBLE_EQ(primal_objective(inst, s), 4.5);

  const auto rnd = random_instance(7, 3, 0.2);
  PrimalState<double> init(7);
  init.f = -rnd.w() / rnd.epsilon();
  EXPECT_NEAR(primal_objective(rnd, init), -rnd.w().squaredNorm() / (2 * rnd.epsilon()), 1e-12);

  EXPECT_THROW(primal_objective(rnd, s), DomainError);
}

TEST(DualObjectiveTest, ZeroDualsGiveUnconstrainedMinimum) {
  const auto inst = random_instance(6, 11, 0.2);
  DualStore<double> duals(6, 2);
  const double expected = -inst.w().squaredNorm() / (2 * inst.epsilon());
  EXPECT_NEAR(dual_objective(inst, duals), expected, 1e-12);
}

TEST(DualObjectiveTest, SingleMetricDualMatchesDenseFormula) {
  const auto inst = random_instance(4, 5, 0.3);
  const auto P = build_dense(inst);
  const auto key = ConstraintKey::metric(ConstraintKind::metric_ik, 0, 2, 3);
  const double y = 0.7;

  DualStore<double> duals(4, 1);
  duals.begin_pass();
  duals.cursor(0).record(key.metric_code(), y);
  duals.end_pass();

  Eigen::VectorXd ydense = Eigen::VectorXd::Zero(P.A.rows());
  ydense(oracle::dense_row(P, key)) = y;
  const double expected = oracle::dense_dual(P, ydense);
  EXPECT_NEAR(dual_objective(inst, duals), expected, 1e-12);

  // Via the state relation v = -(1/eps)(c + A^T y).
  const PrimalState<double> v = implied_state(inst, duals);
  const Eigen::VectorXd vd = -(1.0 / P.eps) * (P.c + P.A.transpose() * ydense);
  for (Index i = 0; i < 4; ++i)
    for (Index j = i + 1; j < 4; ++j) {
      EXPECT_NEAR(v.x_at(i, j), vd(P.x_col(i, j)), 1e-12);
      EXPECT_NEAR(v.f_at(i, j), vd(P.f_col(i, j)), 1e-12);
    }
  EXPECT_NEAR(dual_objective(inst, v, duals), expected, 1e-12);
  EXPECT_NEAR(expected, -0.5 * P.eps * vd.squaredNorm(), 1e-12);  // b = 0 on metric rows
}

TEST(MaxViolationTest, Examples) {
  const auto inst = ProblemInstance<double>(3, VectorX<double>::Zero(3), VectorX<double>::Ones(3), 0.2);
  PrimalState<double> s(3);
  s.x_at(0, 1) = 1;
  s.f.setConstant(10);
  EXPECT_DOUBLE_EQ(max_violation(inst, s), 1.0);

  // A metric X with F = |X - D| is feasible.
  const auto rnd = random_instance(8, 9);
  PrimalState<double> t(8);
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::MatrixXd pts = Eigen::MatrixXd::NullaryExpr(8, 2, [&] { return u(rng); });
  for (Index i = 0; i < 8; ++i)
    for (Index j = i + 1; j < 8; ++j) t.x_at(i, j) = (pts.row(i) - pts.row(j)).lpNorm<1>();
  t.f = (t.x - rnd.d()).cwiseAbs();
  EXPECT_LE(max_violation(rnd, t), 1e-15);
}

TEST(MaxViolationTest, MatchesExhaustiveConstraintLoop) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = random_instance(4, 100 + trial);
    const auto P = build_dense(inst);
    ASSERT_EQ(P.A.rows(), 24);
    PrimalState<double> s(4);
    for (Index p = 0; p < s.x.size(); ++p) {
      s.x[p] = u(rng);
      s.f[p] = u(rng);
    }
    Eigen::VectorXd v(P.A.cols());
    for (Index i = 0; i < 4; ++i)
      for (Index j = i + 1; j < 4; ++j) {
        v(P.x_col(i, j)) = s.x_at(i, j);
        v(P.f_col(i, j)) = s.f_at(i, j);
      }
    const double expected = std::max(0.0, (P.A * v - P.b).maxCoeff());
    EXPECT_NEAR(max_violation(inst, s), expected, 1e-14);
  }
}

TEST(DualStoreTest, StoresOnlyPositiveDualsInVisitOrder) {
  DualStore<double> duals(5, 2);
  duals.begin_pass();
  {
    auto c0 = duals.cursor(0);
    c0.record(3, 0.5);
    c0.record(7, 0.0);
    c0.record(9, 1.5);
    auto c1 = duals.cursor(1);
    c1.record(4, 2.0);
  }
  duals.end_pass();
  ASSERT_EQ(duals.metric_duals(0).size(), 2u);
  EXPECT_EQ(duals.metric_nonzeros(), 3u);

  duals.begin_pass();
  auto c0 = duals.cursor(0);
  EXPECT_EQ(c0.take(1), 0.0);
  EXPECT_EQ(c0.take(3), 0.5);
  EXPECT_EQ(c0.take(7), 0.0);
  EXPECT_EQ(c0.take(9), 1.5);
  EXPECT_TRUE(c0.exhausted());
  duals.end_pass();
  EXPECT_EQ(duals.metric_nonzeros(), 0u);
}

}  // namespace
}  // namespace metricproj
