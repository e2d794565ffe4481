#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "srecon/combinations.hpp"
#include "srecon/common.hpp"
#include "srecon/operators.hpp"

namespace srecon {

inline constexpr std::uint64_t kDefaultEnumerationGuard = 10'000'000;

/// Eigenvalues at or below this are treated as zero in the SSQ measures.
inline constexpr double kEigenZero = 1e-12;

/// Precomputed projector P = H^T (H H^T)^{-1} H for a dense proper H.
/// The restricted form P(A, A) is the r x r matrix whose extreme eigenvalues give the SSQ bounds.
class RowSpaceProjector {
 public:
  explicit RowSpaceProjector(const Matrix& h) : h_(h) {
    detail::require(h.rows() > 0 && h.rows() <= h.cols(), "SSQ: H must be N x m with N <= m");
    Eigen::LLT<Matrix> llt(h * h.transpose());
    if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-13)) throw ImproperOperatorError();
    const Matrix w = llt.matrixL().solve(h);  // L^{-1} H
    p_ = w.transpose() * w;
  }

  const Matrix& matrix() const { return p_; }
  const Matrix& h() const { return h_; }

  Matrix restricted(const Support& a) const {
    const auto k = static_cast<Index>(a.size());
    Matrix q(k, k);
    for (Index i = 0; i < k; ++i)
      for (Index j = 0; j < k; ++j) q(i, j) = p_(a[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(j)]);
    return q;
  }

 private:
  Matrix h_;
  Matrix p_;
};

inline Matrix columns(const Matrix& h, const Support& a) {
  Matrix out(h.rows(), static_cast<Index>(a.size()));
  for (std::size_t j = 0; j < a.size(); ++j) out.col(static_cast<Index>(j)) = h.col(a[j]);
  return out;
}

inline Vector restrict(const Vector& s, const Support& a) {
  Vector out(static_cast<Index>(a.size()));
  for (std::size_t j = 0; j < a.size(); ++j) out[static_cast<Index>(j)] = s[a[j]];
  return out;
}

/// (lambda_min, lambda_max) of a symmetric matrix.
inline std::pair<double, double> extreme_eigenvalues(const Matrix& sym) {
  if (sym.rows() == 1) return {sym(0, 0), sym(0, 0)};
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return {es.eigenvalues()[0], es.eigenvalues()[sym.rows() - 1]};
}

/// r-SSQ of a nonzero s: s^T H^T (H H^T)^{-1} H s / s^T s.
inline double ssq(const Vector& s, const Matrix& h) {
  detail::require(s.size() == h.cols(), "ssq: length of s differs from columns of H");
  detail::require(s.squaredNorm() > 0.0, "ssq: s must be nonzero");
  Eigen::LLT<Matrix> llt(h * h.transpose());
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-13)) throw ImproperOperatorError();
  const Vector hs = h * s;
  return hs.dot(llt.solve(hs)) / s.squaredNorm();
}

/// Same quantity evaluated through the restricted form on supp(s).
inline double ssq_restricted(const Vector& s, const RowSpaceProjector& proj) {
  detail::require(s.squaredNorm() > 0.0, "ssq: s must be nonzero");
  const Support a = support(s);
  const Vector sa = restrict(s, a);
  return sa.dot(proj.restricted(a) * sa) / sa.squaredNorm();
}

struct ExtremeOverSupports {
  double value = 0.0;
  Support support;
};

namespace detail {

inline void enumeration_guard(Index m, Index r, std::uint64_t guard) {
  if (binomial(static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(r)) > guard)
    throw SizeGuardError("support enumeration C(" + std::to_string(m) + ", " + std::to_string(r) +
                         ") exceeds the guard; use the sampled mode");
}

}  // namespace detail

/// Minimum r-SSQ: min over size-r supports A of lambda_min(P(A, A)), with an attaining support.
/// Stops at the first support whose lambda_min is numerically zero.
inline ExtremeOverSupports min_ssq(const RowSpaceProjector& proj, Index r,
                                   std::uint64_t guard = kDefaultEnumerationGuard) {
  const Index m = proj.h().cols(), n = proj.h().rows();
  detail::require(r >= 1 && r <= m, "min_ssq: r must lie in [1, m]");
  if (r > n) {
    Support first(static_cast<std::size_t>(r));
    std::iota(first.begin(), first.end(), Index{0});
    return {0.0, first};
  }
  detail::enumeration_guard(m, r, guard);
  ExtremeOverSupports best{std::numeric_limits<double>::infinity(), {}};
  for_each_combination(m, r, [&](const Support& a) {
    const double lmin = extreme_eigenvalues(proj.restricted(a)).first;
    if (lmin < best.value) best = {lmin, a};
    return best.value > kEigenZero;
  });
  best.value = best.value <= kEigenZero ? 0.0 : std::min(best.value, 1.0);
  return best;
}

inline ExtremeOverSupports min_ssq(const Matrix& h, Index r, std::uint64_t guard = kDefaultEnumerationGuard) {
  return min_ssq(RowSpaceProjector(h), r, guard);
}

/// Restricted isometry constant: max over size-r supports of
/// max(|1 - lambda_min(H_A^T H_A)|, |lambda_max(H_A^T H_A) - 1|).
inline ExtremeOverSupports ric(const Matrix& h, Index r, std::uint64_t guard = kDefaultEnumerationGuard) {
  const Index m = h.cols();
  detail::require(r >= 1 && r <= m, "ric: r must lie in [1, m]");
  detail::enumeration_guard(m, r, guard);
  const Matrix gram = h.transpose() * h;
  ExtremeOverSupports best{-1.0, {}};
  for_each_combination(m, r, [&](const Support& a) {
    Matrix q(r, r);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < r; ++j) q(i, j) = gram(a[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(j)]);
    const auto [lo, hi] = extreme_eigenvalues(q);
    const double g = std::max(std::abs(1.0 - lo), std::abs(hi - 1.0));
    if (g > best.value) best = {g, a};
    return true;
  });
  return best;
}

/// Non-exact estimates from randomly sampled supports. The minimum SSQ found is an upper
/// bound on the true minimum; the RIC found is a lower bound on the true constant.
struct SampledBounds {
  ExtremeOverSupports ssq_upper_bound;
  ExtremeOverSupports ric_lower_bound;
  std::size_t samples = 0;
};

inline SampledBounds sampled_measures(const Matrix& h, Index r, std::size_t samples, std::uint64_t seed) {
  const Index m = h.cols();
  detail::require(r >= 1 && r <= m, "sampled_measures: r must lie in [1, m]");
  RowSpaceProjector proj(h);
  const Matrix gram = h.transpose() * h;
  std::mt19937_64 rng(seed);
  std::vector<Index> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), Index{0});
  SampledBounds out;
  out.ssq_upper_bound.value = std::numeric_limits<double>::infinity();
  out.ric_lower_bound.value = -1.0;
  out.samples = samples;
  for (std::size_t t = 0; t < samples; ++t) {
    std::shuffle(perm.begin(), perm.end(), rng);
    Support a(perm.begin(), perm.begin() + r);
    std::sort(a.begin(), a.end());
    const double lmin = extreme_eigenvalues(proj.restricted(a)).first;
    if (lmin < out.ssq_upper_bound.value) out.ssq_upper_bound = {std::max(lmin, 0.0), a};
    Matrix q(r, r);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < r; ++j) q(i, j) = gram(a[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(j)]);
    const auto [lo, hi] = extreme_eigenvalues(q);
    const double g = std::max(std::abs(1.0 - lo), std::abs(hi - 1.0));
    if (g > out.ric_lower_bound.value) out.ric_lower_bound = {g, a};
  }
  return out;
}

/// Numerical rank with absolute threshold tol_scale * ||H||_F on the pivots of a
/// column-pivoted QR.
inline Index numerical_rank(const Matrix& a, double threshold) {
  if (a.cols() == 0) return 0;
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  const auto& r = qr.matrixR();
  Index rank = 0;
  for (Index i = 0; i < std::min(a.rows(), a.cols()); ++i)
    if (std::abs(r(i, i)) > threshold) ++rank;
  return rank;
}

struct SparkResult {
  Index value = 0;  // exact spark when exact, otherwise a strict lower bound minus one
  bool exact = true;
  Support dependent_set;  // a minimal dependent column set when one exists
};

/// Smallest number of linearly dependent columns; N + 1 when every N columns are independent.
/// Enumeration stops with exact == false once the cumulative subset count would exceed guard,
/// in which case spark > value.
inline SparkResult spark(const Matrix& h, std::uint64_t guard = kDefaultEnumerationGuard) {
  const Index n = h.rows(), m = h.cols();
  const double tol = 1e-10 * h.norm();
  std::uint64_t used = 0;
  for (Index k = 1; k <= std::min(n, m); ++k) {
    const std::uint64_t count = binomial(static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(k));
    if (count > guard || used + count > guard) return {k - 1, false, {}};
    used += count;
    Support found;
    for_each_combination(m, k, [&](const Support& a) {
      if (numerical_rank(columns(h, a), tol) < k) {
        found = a;
        return false;
      }
      return true;
    });
    if (!found.empty()) return {k, true, found};
  }
  // Every N columns are independent; any N + 1 columns of R^N are dependent.
  Support first;
  if (m > n) {
    first.resize(static_cast<std::size_t>(n + 1));
    std::iota(first.begin(), first.end(), Index{0});
  }
  return {n + 1, true, first};
}

/// Unique representation property: spark(H) = N + 1. Requires an exact spark.
inline bool urp(const Matrix& h, std::uint64_t guard = kDefaultEnumerationGuard) {
  const SparkResult sp = spark(h, guard);
  if (!sp.exact) throw SizeGuardError("urp: spark enumeration exceeds the guard");
  return sp.value == h.rows() + 1;
}

/// Largest |h_i^T h_j| / (||h_i|| ||h_j||) over distinct columns.
inline double coherence(const Matrix& h) {
  double mu = 0.0;
  const Vector norms = h.colwise().norm();
  for (Index i = 0; i < h.cols(); ++i)
    for (Index j = i + 1; j < h.cols(); ++j)
      mu = std::max(mu, std::abs(h.col(i).dot(h.col(j))) / (norms[i] * norms[j]));
  return mu;
}

struct SparsityLevelMeasures {
  Index r = 0;
  double rho_min = 0.0;
  Support worst_support;
  double gamma_r = 0.0;
  Support ric_support;
};

struct RecoveryFlags {
  Index r = 0;
  bool unique_p0 = false;         // rho_{2r,min} > 0
  bool guaranteed_recovery = false;  // rho_{2r,min} > 0.5
};

struct MatrixCertificate {
  SparkResult spark;
  std::optional<bool> urp;  // empty when the spark is not exact
  double coherence = 0.0;
  std::vector<SparsityLevelMeasures> per_r;  // r = 1 .. min(2 r_max, m)
  std::vector<RecoveryFlags> flags;         // r = 1 .. r_max
};

/// Exact certificate for sparsity levels up to r_max. Measures are computed for every level
/// up to 2 r_max since the recovery conditions at r involve rho_{2r,min}.
inline MatrixCertificate certify(const Matrix& h, Index r_max, std::uint64_t guard = kDefaultEnumerationGuard) {
  detail::require(r_max >= 1, "certify: r_max must be positive");
  const Index top = std::min(2 * r_max, h.cols());
  for (Index r = 1; r <= top; ++r) detail::enumeration_guard(h.cols(), r, guard);
  MatrixCertificate cert;
  cert.spark = spark(h, guard);
  if (cert.spark.exact) cert.urp = cert.spark.value == h.rows() + 1;
  cert.coherence = coherence(h);
  const RowSpaceProjector proj(h);
  for (Index r = 1; r <= top; ++r) {
    SparsityLevelMeasures lv;
    lv.r = r;
    auto mn = min_ssq(proj, r, guard);
    lv.rho_min = mn.value;
    lv.worst_support = std::move(mn.support);
    auto g = ric(h, r, guard);
    lv.gamma_r = g.value;
    lv.ric_support = std::move(g.support);
    cert.per_r.push_back(std::move(lv));
  }
  for (Index r = 1; r <= r_max; ++r) {
    const double rho2r = 2 * r <= h.cols() ? cert.per_r[static_cast<std::size_t>(2 * r - 1)].rho_min : 0.0;
    cert.flags.push_back({r, rho2r > 0.0, rho2r > 0.5});
  }
  return cert;
}

struct FixedPointViolation {
  Index index = 0;
  double gradient = 0.0;
};

struct FixedPointReport {
  bool ok = true;
  double scale = 0.0;      // gradient magnitude reference, 2 ||H^T (H H^T)^{-1} y||_inf
  double max_abs_gradient = 0.0;  // over the checked indices
  Support checked;
  std::vector<FixedPointViolation> violations;
};

/// First-order r-local stationarity of E at s_star: every index i with
/// |{i} U supp(s_star)| <= r must have zero partial derivative
/// dE/ds_i = -2 [H^T (H H^T)^{-1} (y - H s_star)]_i, up to rel_tol * scale.
inline FixedPointReport verify_fixed_point(const SensingOperator& op, const Vector& y, const Vector& s_star, Index r,
                                           double rel_tol = 1e-6) {
  detail::require_length(y, op.n_rows(), "verify_fixed_point: y");
  detail::require_length(s_star, op.n_cols(), "verify_fixed_point: s");
  FixedPointReport rep;
  const Support supp = support(s_star);
  detail::require(static_cast<Index>(supp.size()) <= r, "verify_fixed_point: s has more than r nonzeros");
  const Vector grad = -2.0 * op.apply_adjoint(op.gram_solve(y - op.apply(s_star)));
  const Vector grad0 = 2.0 * op.apply_adjoint(op.gram_solve(y));
  rep.scale = std::max({grad0.cwiseAbs().maxCoeff(), 2.0 * s_star.cwiseAbs().maxCoeff(),
                        std::numeric_limits<double>::min()});
  if (static_cast<Index>(supp.size()) < r) {
    rep.checked.resize(static_cast<std::size_t>(op.n_cols()));
    std::iota(rep.checked.begin(), rep.checked.end(), Index{0});
  } else {
    rep.checked = supp;
  }
  for (Index i : rep.checked) {
    const double g = grad[i];
    rep.max_abs_gradient = std::max(rep.max_abs_gradient, std::abs(g));
    if (std::abs(g) > rel_tol * rep.scale) rep.violations.push_back({i, g});
  }
  rep.ok = rep.violations.empty();
  return rep;
}

}  // namespace srecon
