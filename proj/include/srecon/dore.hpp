#pragma once

#include <chrono>
#include <cmath>
#include <utility>

#include "srecon/core_recon.hpp"

namespace srecon {

/// A signal together with its measurement-space images H s and (H H^T)^{-1} H s.
struct MeasuredSignal {
  ParamEstimate theta;
  Vector hs;
  Vector ghs;
};

/// Two consecutive iterates, (p-1) and p.
struct DoreState {
  MeasuredSignal prev;
  MeasuredSignal curr;
};

struct OverrelaxationWeights {
  double alpha1 = 0.0;
  double alpha2 = 0.0;
};

struct DoreStepResult {
  DoreState state;
  OverrelaxationWeights weights;
  Branch branch = Branch::ecme;
  double sigma2_ecme = 0.0;  // sigma^2 of the plain ECME candidate
};

namespace detail {

inline double sigma2_from_images(const Vector& y, const Vector& gy, const MeasuredSignal& m) {
  return (y - m.hs).dot(gy - m.ghs) / static_cast<double>(y.size());
}

}  // namespace detail

/// Attaches H s and (H H^T)^{-1} H s to s, and sets sigma^2 from them.
inline MeasuredSignal measure(const SensingOperator& op, const Vector& y, const Vector& gy, Vector s, Index r) {
  MeasuredSignal m;
  m.hs = op.apply(s);
  m.ghs = op.gram_solve(m.hs);
  m.theta = ParamEstimate{std::move(s), 0.0, r};
  m.theta.sigma2 = detail::sigma2_from_images(y, gy, m);
  return m;
}

/// Closed-form maximiser over a of the likelihood along new + a (new - old), using only
/// measurement-space images. Returns 0 when the ray is degenerate.
inline double line_search_weight(const Vector& h_new, const Vector& gh_new, const Vector& h_old,
                                 const Vector& gh_old, const Vector& gy) {
  const Vector dh = h_new - h_old;
  const double num = dh.dot(gy - gh_new);
  const double den = dh.dot(gh_new - gh_old);
  if (!(den > 0.0) || !std::isfinite(num)) return 0.0;
  return num / den;
}

/// alpha_1 for the ray s_hat + a (s_hat - s_p).
inline double dore_alpha1(const MeasuredSignal& s_hat, const MeasuredSignal& s_p, const Vector& gy) {
  return line_search_weight(s_hat.hs, s_hat.ghs, s_p.hs, s_p.ghs, gy);
}

/// alpha_2 for the ray z_bar + a (z_bar - s_{p-1}); z_bar's images are linear combinations.
inline double dore_alpha2(const Vector& hz_bar, const Vector& ghz_bar, const MeasuredSignal& s_prev, const Vector& gy) {
  return line_search_weight(hz_bar, ghz_bar, s_prev.hs, s_prev.ghs, gy);
}

/// ECME step on a measured signal; reuses the cached images of the input.
inline MeasuredSignal ecme_step_measured(const SensingOperator& op, const Vector& y, const Vector& gy,
                                         const MeasuredSignal& cur, Index r) {
  Vector z = cur.theta.s + op.apply_adjoint(gy - cur.ghs);
  return measure(op, y, gy, hard_threshold(z, r), r);
}

/// One DORE iteration: ECME step, two line-search overrelaxations, threshold, decision.
/// gy must equal (H H^T)^{-1} y.
inline DoreStepResult dore_step(const SensingOperator& op, const Vector& y, const Vector& gy, const DoreState& state,
                                Index r) {
  const MeasuredSignal& sp = state.curr;
  const MeasuredSignal& sp_prev = state.prev;

  MeasuredSignal hat = ecme_step_measured(op, y, gy, sp, r);

  DoreStepResult out;
  out.sigma2_ecme = hat.theta.sigma2;
  const double a1 = dore_alpha1(hat, sp, gy);
  const Vector z_bar = hat.theta.s + a1 * (hat.theta.s - sp.theta.s);
  const Vector hz_bar = hat.hs + a1 * (hat.hs - sp.hs);
  const Vector ghz_bar = hat.ghs + a1 * (hat.ghs - sp.ghs);

  const double a2 = dore_alpha2(hz_bar, ghz_bar, sp_prev, gy);
  const Vector z_tilde = z_bar + a2 * (z_bar - sp_prev.theta.s);
  MeasuredSignal tilde = measure(op, y, gy, hard_threshold(z_tilde, r), r);

  out.weights = {a1, a2};
  out.state.prev = sp;
  if (tilde.theta.sigma2 < hat.theta.sigma2) {
    out.branch = Branch::overrelaxed;
    out.state.curr = std::move(tilde);
  } else {
    out.branch = Branch::ecme;
    out.state.curr = std::move(hat);
  }
  return out;
}

inline DoreStepResult dore_step(const SensingOperator& op, const Vector& y, const DoreState& state, Index r) {
  return dore_step(op, y, op.gram_solve(y), state, r);
}

/// Largest relative mismatch between cached images and freshly computed ones.
inline double cache_discrepancy(const SensingOperator& op, const DoreState& state) {
  double worst = 0.0;
  for (const MeasuredSignal* m : {&state.prev, &state.curr}) {
    const Vector hs = op.map().apply(m->theta.s);
    const Vector ghs = op.rows_orthonormal() ? hs : Vector(op.gram_solve(hs));
    const double scale = std::max(1.0, hs.norm());
    worst = std::max(worst, (hs - m->hs).norm() / scale);
    worst = std::max(worst, (ghs - m->ghs).norm() / std::max(1.0, ghs.norm()));
  }
  return worst;
}

/// DORE for a known sparsity level: two ECME steps from s0, then DORE iterations until
/// ||s+ - s||^2 / m < tol. Iteration counts include the two initial ECME steps.
inline ReconstructionResult dore_run(const SensingOperator& op, const Vector& y, Index r, const Vector& s0,
                                     const StoppingRule& stop = {}) {
  detail::require_length(y, op.n_rows(), "dore_run: y");
  detail::require_length(s0, op.n_cols(), "dore_run: s0");
  detail::require(r >= 0 && r <= op.n_cols(), "dore_run: sparsity level r out of range");
  detail::require(stop.tol > 0.0 && stop.max_iter > 0, "dore_run: invalid stopping rule");
  const auto t0 = std::chrono::steady_clock::now();
  const double n = static_cast<double>(op.n_rows());
  const Vector gy = op.gram_solve(y);

  ReconstructionResult result;
  auto finish = [&](const MeasuredSignal& last) {
    result.estimate = last.theta;
    result.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
  };

  MeasuredSignal s_init = measure(op, y, gy, l0_norm(s0) <= r ? s0 : hard_threshold(s0, r), r);
  result.trace.push_back(s_init.theta.sigma2 * n);

  // Initialisation: theta^(1), theta^(2) by plain ECME steps.
  DoreState state;
  state.curr = std::move(s_init);
  for (int k = 0; k < 2; ++k) {
    MeasuredSignal next = ecme_step_measured(op, y, gy, state.curr, r);
    result.trace.push_back(next.theta.sigma2 * n);
    ++result.iterations;
    const double delta = detail::step_size(next.theta.s, state.curr.theta.s);
    state.prev = std::move(state.curr);
    state.curr = std::move(next);
    if (delta < stop.tol) {
      result.converged = true;
      return finish(state.curr);
    }
    if (result.iterations >= stop.max_iter) return finish(state.curr);
  }

  while (result.iterations < stop.max_iter) {
    DoreStepResult step = dore_step(op, y, gy, state, r);
    result.branches.push_back(step.branch);
    result.trace.push_back(step.state.curr.theta.sigma2 * n);
    ++result.iterations;
    const double delta = detail::step_size(step.state.curr.theta.s, state.curr.theta.s);
    state = std::move(step.state);
    if (delta < stop.tol) {
      result.converged = true;
      break;
    }
  }
  return finish(state.curr);
}

}  // namespace srecon
