#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "srecon/experiments.hpp"
#include "srecon/model_selection.hpp"
#include "test_support.hpp"

namespace srecon {
namespace {

using testing::gaussian_matrix;
using testing::gaussian_vector;
using testing::sparse_vector;

// Direct formula, no caching and no tiers.
double uss_formula(double n, double m, double r, double sigma2, double ref) {
  return -0.5 * r * std::log(n / m) - 0.5 * (n - r - 2.0) * std::log(sigma2 / ref);
}

TEST(Uss, ZeroLevelIsZero) {
  std::mt19937_64 rng(1);
  const Matrix h = gaussian_matrix(10, 25, rng);
  const auto op = SensingOperator::dense(h);
  const Vector y = gaussian_vector(10, rng);
  const double ref = y.dot((h * h.transpose()).ldlt().solve(y)) / 10.0;
  const UssValue v = uss_objective(op, y, 0, ref);
  ASSERT_TRUE(v.is_finite());
  EXPECT_NEAR(v.value, 0.0, 1e-13);
}

TEST(Uss, MatchesFormula) {
  std::mt19937_64 rng(2);
  const Matrix h = gaussian_matrix(12, 30, rng);
  const auto op = SensingOperator::dense(h);
  const Vector y = gaussian_vector(12, rng);
  const UssScorer scorer(op, y);
  for (Index r = 1; r <= 6; ++r) {
    const double s2 = 0.1 * static_cast<double>(r);
    const double expected = uss_formula(12, 30, static_cast<double>(r), s2, scorer.reference_variance());
    EXPECT_NEAR(scorer(r, s2).value, expected, 1e-10 * std::max(1.0, std::abs(expected)));
  }
}

TEST(Uss, ScaleInvariance) {
  std::mt19937_64 rng(3);
  const Matrix h = gaussian_matrix(9, 20, rng);
  const auto op = SensingOperator::dense(h);
  const Vector y = gaussian_vector(9, rng);
  for (double c : {-3.0, 0.01, 7.0}) {
    for (Index r = 0; r <= 5; ++r) {
      const double s2 = 0.05 + 0.2 * static_cast<double>(r);
      const UssValue a = uss_objective(op, y, r, s2);
      const UssValue b = uss_objective(op, c * y, r, c * c * s2);
      EXPECT_NEAR(a.value, b.value, 1e-12 * std::max(1.0, std::abs(a.value))) << "c=" << c << " r=" << r;
    }
  }
}

TEST(Uss, ZeroVarianceIsInfiniteAndRankedByGrowth) {
  std::mt19937_64 rng(4);
  const auto op = SensingOperator::dense(gaussian_matrix(8, 10, rng));
  const Vector y = gaussian_vector(8, rng);
  const UssValue r2 = uss_objective(op, y, 2, 0.0), r3 = uss_objective(op, y, 3, 0.0);
  EXPECT_EQ(r2.tier, 1);
  EXPECT_EQ(r2.as_double(), std::numeric_limits<double>::infinity());
  EXPECT_GT(r2, r3);
  EXPECT_GT(r3, uss_objective(op, y, 1, 1e-3));
  EXPECT_EQ(uss_objective(op, y, 7, 0.0).tier, -1);  // N - r - 2 < 0
}

TEST(Uss, ZeroMeasurementsAreInputError) {
  const auto op = SensingOperator::identity(4);
  EXPECT_THROW(uss_objective(op, Vector::Zero(4), 1, 0.1), InputError);
}

TEST(UssValue, Ordering) {
  const UssValue neg{-1, 3.0}, lo = UssValue::finite(-100.0), hi = UssValue::finite(5.0), slow{1, 1.0},
                 fast{1, 2.5};
  EXPECT_LT(neg, lo);
  EXPECT_LT(lo, hi);
  EXPECT_LT(hi, slow);
  EXPECT_LT(slow, fast);
  EXPECT_EQ(hi, UssValue::finite(5.0));
}

TEST(ExactMl, SquareFullLevelFitsExactly) {
  std::mt19937_64 rng(5);
  const Matrix h = testing::random_invertible(6, rng);
  const ParamEstimate est = exact_ml_bruteforce(h, gaussian_vector(6, rng), 6);
  EXPECT_LE(est.sigma2, 1e-24);
}

TEST(ExactMl, ZeroLevelIsReferenceVariance) {
  std::mt19937_64 rng(6);
  const Matrix h = gaussian_matrix(5, 9, rng);
  const Vector y = gaussian_vector(5, rng);
  const ParamEstimate est = exact_ml_bruteforce(h, y, 0);
  EXPECT_EQ(est.s, Vector::Zero(9));
  EXPECT_NEAR(est.sigma2, y.dot((h * h.transpose()).inverse() * y) / 5.0, 1e-12);
}

TEST(ExactMl, RecoversPlantedSignal) {
  std::mt19937_64 rng(7);
  const Matrix h = gaussian_matrix(8, 12, rng);
  const Vector s = sparse_vector(12, 2, rng);
  const Vector y = h * s;
  const ParamEstimate est = exact_ml_bruteforce(h, y, 2);
  EXPECT_LE((est.s - s).norm(), 1e-8);
  EXPECT_LE(est.sigma2, 1e-20 * y.squaredNorm());
  EXPECT_LE((h * est.s - y).norm(), 1e-10 * y.norm());
}

TEST(ExactMl, GuardRefuses) {
  std::mt19937_64 rng(8);
  EXPECT_THROW(exact_ml_bruteforce(gaussian_matrix(10, 30, rng), gaussian_vector(10, rng), 8), SizeGuardError);
}

// With exact ML variances, USS peaks uniquely at the planted sparsity level.
TEST(ExactMl, UssPeaksAtTrueLevel) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 5; ++t) {
    const Index n = 8, m = 10, r_true = 2;
    const Matrix h = gaussian_matrix(n, m, rng);
    const Vector y = h * sparse_vector(m, r_true, rng);
    const auto op = SensingOperator::dense(h);
    const UssScorer scorer(op, y);
    Index best = -1;
    UssValue best_v{};
    bool unique = true;
    for (Index r = 0; r <= n - 3; ++r) {
      const UssValue v = scorer(r, exact_ml_bruteforce(h, y, r).sigma2);
      if (best < 0 || v > best_v) {
        best = r;
        best_v = v;
        unique = true;
      } else if (v == best_v) {
        unique = false;
      }
    }
    EXPECT_EQ(best, r_true);
    EXPECT_TRUE(unique);
  }
}

TEST(GoldenSection, UnimodalIsExact) {
  const auto res = golden_section_r_search([](Index r) { return UssValue::finite(-std::pow(r - 17.0, 2)); }, 64, 1);
  EXPECT_EQ(res.argmax, 17);
  for (Index peak = 0; peak <= 40; ++peak) {
    const auto g = golden_section_r_search(
        [peak](Index r) { return UssValue::finite(-std::abs(static_cast<double>(r - peak))); }, 40, 1);
    EXPECT_EQ(g.argmax, peak);
  }
}

TEST(GoldenSection, EvaluationBudget) {
  const auto res = golden_section_r_search([](Index) { return UssValue::finite(1.0); }, 64, 1);
  EXPECT_LE(res.evaluations, static_cast<std::size_t>(std::ceil(1.44 * std::log2(64.0)) + 2));
  EXPECT_EQ(res.evaluations, res.probed.size());
  EXPECT_TRUE(res.probed.count(res.argmax));
  for (Index r_max : {10, 50, 100, 400, 1000}) {
    for (Index L : {1, 4, 16}) {
      if (L >= r_max) continue;
      const auto g = golden_section_r_search(
          [](Index r) { return UssValue::finite(std::sin(0.1 * static_cast<double>(r))); }, r_max, L);
      const double n = 2.0 * static_cast<double>(r_max);
      EXPECT_LE(static_cast<double>(g.evaluations), 1.44 * std::log2(n / static_cast<double>(L)) + 4)
          << "r_max=" << r_max << " L=" << L;
    }
  }
}

TEST(GoldenSection, CoarseResolutionStopsEarly) {
  const auto res = golden_section_r_search([](Index r) { return UssValue::finite(-std::pow(r - 300.0, 2)); }, 800, 64);
  EXPECT_LE(std::abs(res.argmax - 300), 64);
}

TEST(GoldenSection, RejectsBadResolution) {
  auto f = [](Index) { return UssValue::finite(0.0); };
  EXPECT_THROW(golden_section_r_search(f, 10, 0), InputError);
  EXPECT_THROW(golden_section_r_search(f, 10, 10), InputError);
}

TEST(GoldenSection, DoreUssOnGoldenDctMatchesFullScan) {
  const auto op = golden_dct_operator();
  Vector s = Vector::Zero(32);
  s[13] = 2.0;
  const Vector y = op.apply(s);
  const UssScorer scorer(op, y);
  auto eval = [&](Index r) {
    const double s2 = r == 0 ? scorer.reference_variance() : dore_run(op, y, r, Vector::Zero(32)).estimate.sigma2;
    return scorer(r, s2);
  };
  const Index r_max = 11;
  Index scan_best = 0;
  UssValue best = eval(0);
  for (Index r = 1; r <= r_max; ++r) {
    const UssValue v = eval(r);
    if (v > best) {
      best = v;
      scan_best = r;
    }
  }
  EXPECT_EQ(scan_best, 1);
  EXPECT_EQ(golden_section_r_search(eval, r_max, 1).argmax, 1);
}

TEST(Adore, GoldenDctOneSparse) {
  const auto op = golden_dct_operator();
  for (Index k : {0, 7, 31}) {
    Vector s = Vector::Zero(32);
    s[k] = -1.25;
    const AdoreResult res = adore_run(op, op.apply(s), 1, {1e-20, 50000});
    EXPECT_EQ(res.r_selected, 1);
    EXPECT_LE((res.final.estimate.s - s).norm(), 1e-8);
    const double center = 1.4 * (std::log2(21.0) - 1.0);
    EXPECT_LE(std::abs(static_cast<double>(res.dore_runs) - center), 3.0) << res.dore_runs;
    EXPECT_EQ(res.evaluations.front().r, 0);
  }
}

TEST(Adore, NoisyMeasurementsGiveFiniteScores) {
  const ProblemInstance p = random_instance(60, 30, 4, 0.05, 99);
  const AdoreResult res = adore_run(p.op, p.y, 1);
  for (const auto& e : res.evaluations) EXPECT_TRUE(e.uss.is_finite()) << "r=" << e.r;
  EXPECT_GE(res.r_selected, 0);
  EXPECT_LE(res.r_selected, 15);
}

TEST(Adore, PhantomCloseToKnownSparsity) {
  const ProblemInstance p = phantom_instance(64, 28);
  const Vector zero = Vector::Zero(p.op.n_cols());
  const auto dore = dore_run(p.op, p.y, *p.truth_support_size, zero);
  const AdoreResult adore = adore_run(p.op, p.y, 64);
  const double a = image_psnr(p, adore.final.estimate.s), d = image_psnr(p, dore.estimate.s);
  EXPECT_LE(std::abs(adore.r_selected - *p.truth_support_size), 64);
  // Above 100 dB both are exact and the gap is round-off.
  EXPECT_TRUE(a >= d - 1.0 || a > 100.0) << "adore r=" << adore.r_selected << " psnr " << a << " vs " << d;
}

}  // namespace
}  // namespace srecon
