#include <gtest/gtest.h>

#include <random>

#include "srecon/dore.hpp"
#include "srecon/experiments.hpp"
#include "test_support.hpp"

namespace srecon {
namespace {

using testing::gaussian_matrix;
using testing::gaussian_vector;
using testing::sparse_vector;

// The default tolerance only bounds the last step near sqrt(m * tol).
const StoppingRule kTight{1e-20, 50000};

struct Problem {
  SensingOperator op;
  Vector y, gy;
  Index r;
};

Problem random_problem(std::mt19937_64& rng, bool orthonormal, Index n = 12, Index m = 30, Index r = 3) {
  const Matrix h = orthonormal ? testing::orthonormal_rows(n, m, rng) : gaussian_matrix(n, m, rng);
  auto op = SensingOperator::dense(h);
  Vector y = h * sparse_vector(m, r, rng) + 0.05 * gaussian_vector(n, rng);
  Vector gy = op.gram_solve(y);
  return {std::move(op), std::move(y), std::move(gy), r};
}

// Two thresholded ECME steps from a random sparse start, as dore_run would produce.
DoreState warm_state(const Problem& p, std::mt19937_64& rng) {
  const Index m = p.op.n_cols();
  DoreState st;
  st.prev = measure(p.op, p.y, p.gy, sparse_vector(m, p.r, rng), p.r);
  st.curr = ecme_step_measured(p.op, p.y, p.gy, st.prev, p.r);
  return st;
}

TEST(Alpha, ZeroNumeratorGivesZero) {
  std::mt19937_64 rng(1);
  const Matrix h = gaussian_matrix(5, 9, rng);
  const auto op = SensingOperator::dense(h);
  const Vector s_hat = sparse_vector(9, 2, rng);
  const Vector y = h * s_hat;  // y - H s_hat = 0
  const Vector gy = op.gram_solve(y);
  const MeasuredSignal a = measure(op, y, gy, s_hat, 2);
  const MeasuredSignal b = measure(op, y, gy, sparse_vector(9, 2, rng), 2);
  EXPECT_DOUBLE_EQ(dore_alpha1(a, b, gy), 0.0);
}

TEST(Alpha, DegenerateRayGivesZero) {
  std::mt19937_64 rng(2);
  const auto p = random_problem(rng, false);
  const MeasuredSignal a = measure(p.op, p.y, p.gy, sparse_vector(30, 3, rng), 3);
  EXPECT_EQ(dore_alpha1(a, a, p.gy), 0.0);
  EXPECT_EQ(dore_alpha2(a.hs, a.ghs, a, p.gy), 0.0);
}

TEST(Alpha, FixedPointStepHasNoOverrelaxation) {
  std::mt19937_64 rng(3);
  const Matrix h = gaussian_matrix(10, 20, rng);
  const auto op = SensingOperator::dense(h);
  const Vector s = sparse_vector(20, 2, rng);
  const Vector y = h * s;
  DoreState st;
  st.prev = measure(op, y, op.gram_solve(y), s, 2);
  st.curr = st.prev;
  const DoreStepResult out = dore_step(op, y, st, 2);
  EXPECT_EQ(out.weights.alpha1, 0.0);
  EXPECT_LE(testing::max_abs_diff(out.state.curr.theta.s, s), 1e-12);
}

TEST(Alpha, ClosedFormAgreesWithDirectDefinition) {
  std::mt19937_64 rng(4);
  const auto p = random_problem(rng, false);
  const Matrix h = to_dense(p.op);
  const Matrix ginv = (h * h.transpose()).inverse();
  const DoreState st = warm_state(p, rng);
  const MeasuredSignal hat = ecme_step_measured(p.op, p.y, p.gy, st.curr, p.r);
  const Vector d = h * (hat.theta.s - st.curr.theta.s);
  const double expected = d.dot(ginv * (p.y - h * hat.theta.s)) / d.dot(ginv * d);
  EXPECT_NEAR(dore_alpha1(hat, st.curr, p.gy), expected, 1e-9 * std::max(1.0, std::abs(expected)));
}

TEST(DoreStep, TieGoesToEcmeCandidate) {
  const auto op = SensingOperator::identity(4);
  Vector y(4);
  y << 1, -2, 3, 0.5;
  const Vector gy = op.gram_solve(y);
  DoreState st;
  st.prev = measure(op, y, gy, Vector::Zero(4), 4);
  st.curr = ecme_step_measured(op, y, gy, st.prev, 4);
  // With r = N the ECME step and the overrelaxed candidate both fit y exactly.
  const DoreStepResult out = dore_step(op, y, gy, st, 4);
  EXPECT_EQ(out.state.curr.theta.sigma2, out.sigma2_ecme);
  EXPECT_EQ(out.branch, Branch::ecme);
}

TEST(DoreStep, NeverWorseThanEcme) {
  std::mt19937_64 rng(5);
  int overrelaxed = 0;
  for (int t = 0; t < 100; ++t) {
    const auto p = random_problem(rng, true);
    const DoreState st = warm_state(p, rng);
    const DoreStepResult out = dore_step(p.op, p.y, p.gy, st, p.r);
    const ParamEstimate plain = ecme_step(p.op, p.y, st.curr.theta);
    EXPECT_LE(out.state.curr.theta.sigma2, plain.sigma2 * (1 + 1e-12) + 1e-300);
    EXPECT_LE(l0_norm(out.state.curr.theta.s), p.r);
    overrelaxed += out.branch == Branch::overrelaxed;
  }
  EXPECT_GT(overrelaxed, 0);
}

TEST(DoreStep, LineSearchWeightsMinimiseAlongRays) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> scalar(-5.0, 5.0);
  for (int t = 0; t < 30; ++t) {
    const auto p = random_problem(rng, t % 2 == 0);
    const DoreState st = warm_state(p, rng);
    const MeasuredSignal hat = ecme_step_measured(p.op, p.y, p.gy, st.curr, p.r);
    const DoreStepResult out = dore_step(p.op, p.y, p.gy, st, p.r);
    const Vector dir1 = hat.theta.s - st.curr.theta.s;
    const Vector z_bar = hat.theta.s + out.weights.alpha1 * dir1;
    const Vector dir2 = z_bar - st.prev.theta.s;
    const Vector z_tilde = z_bar + out.weights.alpha2 * dir2;
    const double e1 = weighted_error(p.op, p.y, z_bar), e2 = weighted_error(p.op, p.y, z_tilde);
    for (int k = 0; k < 100; ++k) {
      const double a = scalar(rng);
      EXPECT_LE(e1, weighted_error(p.op, p.y, hat.theta.s + a * dir1) + 1e-10);
      EXPECT_LE(e2, weighted_error(p.op, p.y, z_bar + a * dir2) + 1e-10);
    }
  }
}

TEST(DoreStep, CallCountsPerIteration) {
  std::mt19937_64 rng(7);
  const auto p = random_problem(rng, false);
  const DoreState st = warm_state(p, rng);
  p.op.counters().reset();
  dore_step(p.op, p.y, p.gy, st, p.r);
  EXPECT_LE(p.op.counters().applies, 3u);
  EXPECT_LE(p.op.counters().gram_solves, 2u);
  EXPECT_LE(p.op.counters().adjoints, 2u);
}

TEST(DoreRun, CallCountsOverWholeRun) {
  std::mt19937_64 rng(8);
  const auto p = random_problem(rng, false, 20, 50, 4);
  p.op.counters().reset();
  const auto res = dore_run(p.op, p.y, p.r, Vector::Zero(50));
  const auto iters = static_cast<std::size_t>(res.iterations);
  // setup: gram_solve(y) and measuring s0
  EXPECT_LE(p.op.counters().applies, 3 * iters + 1);
  EXPECT_LE(p.op.counters().gram_solves, 2 * iters + 2);
  EXPECT_LE(p.op.counters().adjoints, 2 * iters);
}

TEST(DoreRun, ZeroMeasurementsConvergeImmediately) {
  const auto op = golden_dct_operator();
  const auto res = dore_run(op, Vector::Zero(21), 1, Vector::Zero(32));
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.iterations, 1);
  EXPECT_EQ(res.estimate.s, Vector::Zero(32));
  EXPECT_EQ(res.estimate.sigma2, 0.0);
}

TEST(DoreRun, RecoversOneSparseLikeEcme) {
  const auto op = golden_dct_operator();
  for (Index k = 0; k < 32; k += 3) {
    Vector s = Vector::Zero(32);
    s[k] = 0.3 + static_cast<double>(k);
    const Vector y = op.apply(s);
    const auto d = dore_run(op, y, 1, Vector::Zero(32), kTight);
    const auto e = ecme_run(op, y, 1, Vector::Zero(32), kTight);
    EXPECT_LE((d.estimate.s - s).norm(), 1e-8);
    EXPECT_LE((d.estimate.s - e.estimate.s).norm(), 1e-8);
  }
}

TEST(DoreRun, TraceNonincreasingAndBranchesRecorded) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 30; ++t) {
    const auto p = random_problem(rng, t % 3 == 0, 15, 40, 1 + t % 5);
    const auto res = dore_run(p.op, p.y, p.r, Vector::Zero(40));
    const double slack = 1e-12 * std::max(1.0, res.trace.front());
    for (std::size_t i = 1; i < res.trace.size(); ++i) EXPECT_LE(res.trace[i], res.trace[i - 1] + slack);
    EXPECT_EQ(res.trace.size(), static_cast<std::size_t>(res.iterations + 1));
    if (res.iterations > 2) {
      EXPECT_EQ(res.branches.size(), static_cast<std::size_t>(res.iterations - 2));
    }
  }
}

TEST(DoreRun, ConvergencePointIsEcmeFixedPoint) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 30; ++t) {
    const auto p = random_problem(rng, false, 15, 40, 1 + t % 5);
    const auto res = dore_run(p.op, p.y, p.r, Vector::Zero(40), kTight);
    ASSERT_TRUE(res.converged);
    const ParamEstimate again = ecme_step(p.op, p.y, res.estimate);
    EXPECT_LE((again.s - res.estimate.s).norm(), 1e-8);
  }
}

TEST(DoreRun, CachedImagesStayConsistent) {
  std::mt19937_64 rng(11);
  const auto p = random_problem(rng, false, 20, 50, 4);
  DoreState st = warm_state(p, rng);
  for (int k = 0; k < 50; ++k) {
    st = dore_step(p.op, p.y, p.gy, st, p.r).state;
    EXPECT_LE(cache_discrepancy(p.op, st), 1e-10);
  }
}

TEST(DoreRun, PhantomNeedsNoMoreIterationsThanEcme) {
  const ProblemInstance p = phantom_instance(64, 28);
  const Vector zero = Vector::Zero(p.op.n_cols());
  const Index r = *p.truth_support_size;
  const auto d = dore_run(p.op, p.y, r, zero);
  const auto e = ecme_run(p.op, p.y, r, zero);
  EXPECT_TRUE(d.converged);
  EXPECT_TRUE(e.converged);
  EXPECT_LE(d.iterations, e.iterations);
}

}  // namespace
}  // namespace srecon
