#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "srecon/combinations.hpp"
#include "srecon/dore.hpp"
#include "srecon/matrix_analysis.hpp"

namespace srecon {

/// USS value on the extended real line. When the variance estimate is numerically zero the
/// objective diverges; such values are ranked by the divergence rate (N - r - 2) / 2, which
/// orders +inf candidates by how fast they grow and -inf candidates by how slowly they fall.
struct UssValue {
  int tier = 0;        // +1: +inf, 0: finite, -1: -inf
  double value = 0.0;  // finite value, or the divergence rate for infinite tiers

  static UssValue finite(double v) { return {0, v}; }
  bool is_finite() const { return tier == 0; }
  double as_double() const {
    if (tier > 0) return std::numeric_limits<double>::infinity();
    if (tier < 0) return -std::numeric_limits<double>::infinity();
    return value;
  }
  friend bool operator==(const UssValue&, const UssValue&) = default;
  friend std::weak_ordering operator<=>(const UssValue& a, const UssValue& b) {
    if (a.tier != b.tier) return a.tier <=> b.tier;
    return std::weak_order(a.value, b.value);
  }
};

struct UssEvaluation {
  Index r = 0;
  double sigma2_est = 0.0;
  UssValue uss;
};

/// Evaluates USS(r) = -r/2 ln(N/m) - (N - r - 2)/2 ln(sigma2 / (y^T (H H^T)^{-1} y / N)).
/// The reference variance y^T (H H^T)^{-1} y / N is computed once.
class UssScorer {
 public:
  static constexpr double kRelativeZeroVariance = 1e-12;

  UssScorer(const SensingOperator& op, const Vector& y)
      : n_(static_cast<double>(op.n_rows())), m_(static_cast<double>(op.n_cols())) {
    detail::require_length(y, op.n_rows(), "USS: y");
    detail::require(y.squaredNorm() > 0.0, "USS: y must be nonzero");
    reference_ = y.dot(op.gram_solve(y)) / n_;
  }

  double reference_variance() const { return reference_; }
  double zero_variance_threshold() const { return kRelativeZeroVariance * reference_; }

  UssValue operator()(Index r, double sigma2_est) const {
    detail::require(sigma2_est >= 0.0, "USS: variance estimate must be nonnegative");
    const double rd = static_cast<double>(r);
    const double growth = 0.5 * (n_ - rd - 2.0);
    if (sigma2_est <= zero_variance_threshold() && growth != 0.0)
      return UssValue{growth > 0.0 ? 1 : -1, growth};
    double v = -0.5 * rd * std::log(n_ / m_);
    if (growth != 0.0) v -= growth * std::log(sigma2_est / reference_);
    return UssValue::finite(v);
  }

 private:
  double n_, m_;
  double reference_ = 0.0;
};

inline UssValue uss_objective(const SensingOperator& op, const Vector& y, Index r, double sigma2_est) {
  return UssScorer(op, y)(r, sigma2_est);
}

/// Exact ML estimate over the sparsity-r parameter space by enumerating every support of size
/// at most r and solving the (H H^T)^{-1}-weighted least-squares problem on it.
/// A larger support replaces the incumbent only if it strictly lowers sigma^2.
inline ParamEstimate exact_ml_bruteforce(const Matrix& h, const Vector& y, Index r,
                                         std::uint64_t guard = 1'000'000) {
  const Index n = h.rows(), m = h.cols();
  detail::require(y.size() == n, "exact_ml_bruteforce: y length differs from rows of H");
  detail::require(r >= 0 && r <= m, "exact_ml_bruteforce: r must lie in [0, m]");
  std::uint64_t total = 0;
  for (Index k = 0; k <= r; ++k) {
    total += binomial(static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(k));
    if (total > guard) throw SizeGuardError("exact_ml_bruteforce: support count exceeds the guard");
  }
  Eigen::LLT<Matrix> llt(h * h.transpose());
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-13)) throw ImproperOperatorError();
  const Matrix w = llt.matrixL().solve(h);
  const Vector wy = llt.matrixL().solve(y);

  ParamEstimate best{Vector::Zero(m), wy.squaredNorm() / static_cast<double>(n), r};
  for (Index k = 1; k <= std::min(r, n); ++k) {
    for_each_combination(m, k, [&](const Support& a) {
      const Matrix wa = columns(w, a);
      const Vector coef = wa.colPivHouseholderQr().solve(wy);
      const double s2 = (wy - wa * coef).squaredNorm() / static_cast<double>(n);
      if (s2 < best.sigma2) {
        best.sigma2 = s2;
        best.s.setZero();
        for (std::size_t j = 0; j < a.size(); ++j) best.s[a[j]] = coef[static_cast<Index>(j)];
      }
      return true;
    });
  }
  return best;
}

struct GoldenSectionResult {
  Index argmax = 0;
  std::map<Index, UssValue> probed;
  std::size_t evaluations = 0;
};

/// Integer golden-section maximisation over [0, r_max]. Each r is evaluated at most once.
/// Initial interior probes sit at b - floor(0.618 (b - a)) and a + floor(0.618 (b - a));
/// after each comparison the surviving probe is kept and one new probe is placed at its
/// mirror image a + b - kept. The search stops once b - a < L; while L <= b - a < 3 the
/// remaining points of [a, b] are evaluated directly. Ties resolve to the smaller r.
template <class Evaluator>
GoldenSectionResult golden_section_r_search(Evaluator&& evaluate, Index r_max, Index L) {
  detail::require(L >= 1 && L < r_max, "golden_section_r_search: need 1 <= L < r_max");
  GoldenSectionResult out;
  auto f = [&](Index r) -> UssValue {
    auto it = out.probed.find(r);
    if (it != out.probed.end()) return it->second;
    ++out.evaluations;
    UssValue v = evaluate(r);
    out.probed.emplace(r, v);
    return v;
  };
  // Fibonacci spacing keeps the mirrored probes on integers without drift. The
  // bracket is padded up to a Fibonacci length; padded points are never evaluated.
  std::vector<Index> fib{1, 2};
  while (fib.back() < r_max) fib.push_back(fib[fib.size() - 1] + fib[fib.size() - 2]);
  const UssValue worst{-1, std::numeric_limits<double>::infinity()};
  auto g = [&](Index r) { return r > r_max ? worst : f(r); };
  std::size_t k = fib.size() - 1;
  Index a = 0, b = fib[k];
  while (b - a >= L && b - a >= 3) {
    const Index c = a + fib[k - 2], d = a + fib[k - 1];
    if (g(c) >= g(d)) b = d;
    else a = c;
    --k;
  }
  b = std::min(b, r_max);
  if (b - a >= L) {
    for (Index r = a; r <= b; ++r) f(r);
  }
  // Best probed point; map order gives the smaller r on ties.
  auto best = out.probed.begin();
  for (auto it = out.probed.begin(); it != out.probed.end(); ++it)
    if (it->second > best->second) best = it;
  out.argmax = best->first;
  return out;
}

struct AdoreResult {
  Index r_selected = 0;
  std::vector<UssEvaluation> evaluations;  // ascending r
  ReconstructionResult final;
  std::size_t dore_runs = 0;
};

/// Golden-section search over r in [0, ceil(N/2)] scored by USS with the DORE variance
/// estimate at each probed r; returns the DORE reconstruction at the selected level.
inline AdoreResult adore_run(const SensingOperator& op, const Vector& y, Index L, const StoppingRule& stop = {}) {
  const UssScorer scorer(op, y);
  const Index r_max = (op.n_rows() + 1) / 2;
  const Vector s0 = Vector::Zero(op.n_cols());
  std::map<Index, ReconstructionResult> runs;
  std::map<Index, double> sigma2;
  AdoreResult out;

  auto evaluate = [&](Index r) {
    double s2 = scorer.reference_variance();
    if (r > 0) {
      auto res = dore_run(op, y, r, s0, stop);
      ++out.dore_runs;
      s2 = res.estimate.sigma2;
      runs.emplace(r, std::move(res));
    }
    sigma2[r] = s2;
    return scorer(r, s2);
  };

  Index r_sel = 0;
  if (r_max <= L || r_max < 2) {
    // Interval already below resolution: score every level directly.
    UssValue best{};
    for (Index r = 0; r <= r_max; ++r) {
      const UssValue v = evaluate(r);
      out.evaluations.push_back({r, sigma2[r], v});
      if (r == 0 || v > best) {
        best = v;
        r_sel = r;
      }
    }
  } else {
    const auto gs = golden_section_r_search(evaluate, r_max, L);
    r_sel = gs.argmax;
    for (const auto& [r, v] : gs.probed) out.evaluations.push_back({r, sigma2[r], v});
  }
  out.r_selected = r_sel;
  if (r_sel == 0) {
    out.final.estimate = ParamEstimate{s0, scorer.reference_variance(), 0};
    out.final.trace = {scorer.reference_variance() * static_cast<double>(op.n_rows())};
    out.final.converged = true;
  } else {
    out.final = std::move(runs.at(r_sel));
  }
  return out;
}

}  // namespace srecon
