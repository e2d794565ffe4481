#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <vector>

#include "srecon/common.hpp"
#include "srecon/operators.hpp"

namespace srecon {

/// theta = (s, sigma^2) in the sparsity-r parameter space.
struct ParamEstimate {
  Vector s;
  double sigma2 = 0.0;
  Index r = 0;
};

struct StoppingRule {
  double tol = 1e-14;  // on ||s+ - s||^2 / m
  long max_iter = 50000;
};

/// Which candidate the DORE decision step kept.
enum class Branch : std::uint8_t { ecme, overrelaxed };

struct ReconstructionResult {
  ParamEstimate estimate;
  std::vector<double> trace;  // E(s^(p)), p = 0 .. iterations
  long iterations = 0;
  bool converged = false;
  double elapsed_seconds = 0.0;
  std::vector<Branch> branches;  // DORE only, one entry per accelerated iteration
  std::vector<Support> supports;  // supp(s^(p)) per iteration, only when recorded
};

/// T_r: keeps the r largest-magnitude entries and writes exact zeros elsewhere.
/// Among equal magnitudes the lower index wins.
inline Vector hard_threshold(const Vector& x, Index r) {
  detail::require(r >= 0 && r <= x.size(), "hard_threshold: r must lie in [0, length]");
  Vector out = Vector::Zero(x.size());
  if (r == 0) return out;
  std::vector<Index> idx(static_cast<std::size_t>(x.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  auto before = [&x](Index a, Index b) {
    const double ma = std::abs(x[a]), mb = std::abs(x[b]);
    return ma > mb || (ma == mb && a < b);
  };
  std::nth_element(idx.begin(), idx.begin() + (r - 1), idx.end(), before);
  for (Index k = 0; k < r; ++k) out[idx[static_cast<std::size_t>(k)]] = x[idx[static_cast<std::size_t>(k)]];
  return out;
}

/// E(s) = (y - Hs)^T (H H^T)^{-1} (y - Hs).
inline double weighted_error(const SensingOperator& op, const Vector& y, const Vector& s) {
  detail::require_length(y, op.n_rows(), "weighted_error: y");
  const Vector res = y - op.apply(s);
  return res.dot(op.gram_solve(res));
}

/// Variance-component ML estimate for fixed s: E(s) / N.
inline double sigma2_hat(const SensingOperator& op, const Vector& y, const Vector& s) {
  return weighted_error(op, y, s) / static_cast<double>(op.n_rows());
}

/// One ECME iteration: EM signal update, hard threshold, then variance CM step.
inline ParamEstimate ecme_step(const SensingOperator& op, const Vector& y, const ParamEstimate& theta) {
  detail::require_length(theta.s, op.n_cols(), "ecme_step: s");
  detail::require_length(y, op.n_rows(), "ecme_step: y");
  const Vector z = theta.s + op.apply_adjoint(op.gram_solve(y - op.apply(theta.s)));
  ParamEstimate next{hard_threshold(z, theta.r), 0.0, theta.r};
  next.sigma2 = sigma2_hat(op, y, next.s);
  return next;
}

namespace detail {

inline double step_size(const Vector& a, const Vector& b) {
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

// Shared ECME/IHT loop. With use_gram == false the (H H^T)^{-1} application is skipped,
// which is exact when H H^T = I.
inline ReconstructionResult threshold_iterate(const SensingOperator& op, const Vector& y, Index r, const Vector& s0,
                                              const StoppingRule& stop, bool use_gram, bool record_supports) {
  require_length(y, op.n_rows(), "y");
  require_length(s0, op.n_cols(), "s0");
  require(r >= 0 && r <= op.n_cols(), "sparsity level r out of range");
  require(stop.tol > 0.0 && stop.max_iter > 0, "invalid stopping rule");
  const auto t0 = std::chrono::steady_clock::now();
  const double n = static_cast<double>(op.n_rows());

  ReconstructionResult result;
  Vector s = l0_norm(s0) <= r ? s0 : hard_threshold(s0, r);
  Vector res = y - op.apply(s);
  Vector wres = use_gram ? op.gram_solve(res) : res;
  result.trace.push_back(res.dot(wres));
  if (record_supports) result.supports.push_back(support(s));

  while (result.iterations < stop.max_iter) {
    Vector next = hard_threshold(s + op.apply_adjoint(wres), r);
    res = y - op.apply(next);
    wres = use_gram ? op.gram_solve(res) : res;
    result.trace.push_back(res.dot(wres));
    ++result.iterations;
    if (record_supports) result.supports.push_back(support(next));
    const double delta = step_size(next, s);
    s = std::move(next);
    if (delta < stop.tol) {
      result.converged = true;
      break;
    }
  }
  result.estimate = ParamEstimate{std::move(s), result.trace.back() / n, r};
  result.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace detail

/// Iterates ecme_step from s0 (thresholded to r if needed) until ||s+ - s||^2 / m < tol.
inline ReconstructionResult ecme_run(const SensingOperator& op, const Vector& y, Index r, const Vector& s0,
                                     const StoppingRule& stop = {}, bool record_supports = false) {
  return detail::threshold_iterate(op, y, r, s0, stop, true, record_supports);
}

/// ECME specialised to H H^T = I: plain iterative hard thresholding.
inline ReconstructionResult iht_run(const SensingOperator& op, const Vector& y, Index r, const Vector& s0,
                                    const StoppingRule& stop = {}, bool record_supports = false) {
  if (!op.rows_orthonormal()) throw InputError("IHT path requires orthonormal rows");
  return detail::threshold_iterate(op, y, r, s0, stop, false, record_supports);
}

/// H^T (H H^T)^{-1} y.
inline Vector minimum_norm_estimate(const SensingOperator& op, const Vector& y) {
  detail::require_length(y, op.n_rows(), "minimum_norm_estimate: y");
  return op.apply_adjoint(op.gram_solve(y));
}

/// Posterior mean of the full signal given theta: s + H^T (H H^T)^{-1} (y - H s).
inline Vector empirical_bayes_estimate(const SensingOperator& op, const Vector& y, const ParamEstimate& theta) {
  detail::require_length(y, op.n_rows(), "empirical_bayes_estimate: y");
  detail::require_length(theta.s, op.n_cols(), "empirical_bayes_estimate: s");
  return theta.s + op.apply_adjoint(op.gram_solve(y - op.apply(theta.s)));
}

}  // namespace srecon
