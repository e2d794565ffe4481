#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "srecon/core_recon.hpp"
#include "srecon/dore.hpp"
#include "srecon/haar.hpp"
#include "srecon/model_selection.hpp"
#include "srecon/operators.hpp"

namespace srecon {

/// 10 log10(range^2 / MSE) with range = max - min of the reference. +inf on exact match.
inline double psnr(const Vector& reference, const Vector& estimate) {
  detail::require(reference.size() == estimate.size() && reference.size() > 0, "psnr: length mismatch");
  const double range = reference.maxCoeff() - reference.minCoeff();
  detail::require(range > 0.0, "psnr: reference is constant");
  const double mse = (estimate - reference).squaredNorm() / static_cast<double>(reference.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(range * range / mse);
}

struct Ellipse {
  double intensity, a, b, x0, y0, phi_deg;
};

/// Shepp-Logan ellipse table with the higher-contrast intensities of the modified variant.
inline const std::array<Ellipse, 10>& shepp_logan_ellipses() {
  static const std::array<Ellipse, 10> table{{
      {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
      {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
      {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
      {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
      {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
      {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
      {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
      {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
      {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
      {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
  }};
  return table;
}

/// Rasterises ellipses on the grid x_j = (j - (side-1)/2) / ((side-1)/2), y decreasing down the rows.
template <class Range>
Matrix rasterize_ellipses(Index side, const Range& ellipses) {
  Matrix img = Matrix::Zero(side, side);
  const double half = (static_cast<double>(side) - 1.0) / 2.0;
  for (const Ellipse& e : ellipses) {
    const double phi = e.phi_deg * std::numbers::pi / 180.0;
    const double cp = std::cos(phi), sp = std::sin(phi);
    for (Index i = 0; i < side; ++i) {
      const double y = (half - static_cast<double>(i)) / half - e.y0;
      for (Index j = 0; j < side; ++j) {
        const double x = (static_cast<double>(j) - half) / half - e.x0;
        const double u = x * cp + y * sp, v = y * cp - x * sp;
        if (u * u / (e.a * e.a) + v * v / (e.b * e.b) <= 1.0) img(i, j) += e.intensity;
      }
    }
  }
  return img;
}

inline Matrix phantom(Index side) {
  detail::require(side >= 32, "phantom: side must be at least 32");
  detail::require(is_power_of_two(side), "phantom: side must be a power of two");
  return rasterize_ellipses(side, shepp_logan_ellipses());
}

/// Star-shaped sampling set: n_lines lines through the DC term at angles k pi / n_lines.
/// Each line is rasterised along its dominant axis with offsets -side/2 .. side/2-1 and
/// rounding of the minor coordinate. The result is closed under k -> -k (mod side) and
/// stored in natural (unshifted) frequency order.
inline FrequencyMask radial_mask(Index side, Index n_lines) {
  detail::require(side >= 2 && n_lines >= 1, "radial_mask: need side >= 2 and n_lines >= 1");
  FrequencyMask mask(side);
  auto wrap = [side](long long k) { return static_cast<Index>(((k % side) + side) % side); };
  for (Index l = 0; l < n_lines; ++l) {
    const double theta = std::numbers::pi * static_cast<double>(l) / static_cast<double>(n_lines);
    const bool x_major = theta <= std::numbers::pi / 4 || theta > 3 * std::numbers::pi / 4;
    for (Index t = -side / 2; t <= side / 2 - 1; ++t) {
      const double td = static_cast<double>(t);
      if (x_major) {
        const auto ky = static_cast<long long>(std::round(std::tan(theta) * td));
        mask.set(wrap(ky), wrap(t));
      } else {
        const auto kx = static_cast<long long>(std::round(td / std::tan(theta)));
        mask.set(wrap(t), wrap(kx));
      }
    }
  }
  return mask.symmetrized();
}

struct ProblemInstance {
  SensingOperator op;
  Vector y;
  std::optional<Vector> truth;
  std::optional<Index> truth_support_size;
  std::uint64_t seed = 0;
  bool noiseless = true;
  Index image_side = 0;  // nonzero for image problems
};

/// Gaussian N x m sensing matrix, uniformly random support of size r_true with standard normal
/// amplitudes, y = H s + n with n ~ N(0, noise_sigma^2 I).
inline ProblemInstance random_instance(Index m, Index n, Index r_true, double noise_sigma, std::uint64_t seed) {
  detail::require(n >= 1 && n <= m, "random_instance: need 1 <= N <= m");
  detail::require(r_true >= 0 && r_true <= m, "random_instance: r_true out of range");
  detail::require(noise_sigma >= 0.0, "random_instance: noise_sigma must be nonnegative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix h(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) h(i, j) = normal(rng);
  std::vector<Index> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  Vector s = Vector::Zero(m);
  for (Index k = 0; k < r_true; ++k) s[perm[static_cast<std::size_t>(k)]] = normal(rng);
  Vector y = h * s;
  if (noise_sigma > 0.0)
    for (Index i = 0; i < n; ++i) y[i] += noise_sigma * normal(rng);
  return ProblemInstance{SensingOperator::dense(std::move(h)), std::move(y), std::move(s), r_true, seed,
                         noise_sigma == 0.0, 0};
}

/// Full-depth Haar levels for a side x side image.
inline int full_haar_levels(Index side) { return log2_exact(side); }

/// Noiseless phantom problem: s = Haar coefficients of the phantom, H = partial DFT2 x inverse Haar.
inline ProblemInstance phantom_instance(Index side, Index n_lines) {
  const int levels = full_haar_levels(side);
  const Vector truth = haar_dwt_2d(phantom(side), levels);
  auto op = SensingOperator::partial_dft2_haar(radial_mask(side, n_lines), levels);
  Vector y = op.apply(truth);
  const Index k = l0_norm(truth);
  return ProblemInstance{std::move(op), std::move(y), truth, k, 0, true, side};
}

/// PSNR of the reconstructed image Psi s_hat against Psi s.
inline double image_psnr(const ProblemInstance& p, const Vector& coeffs) {
  detail::require(p.truth.has_value() && p.image_side > 0, "image_psnr: not an image problem");
  const int levels = full_haar_levels(p.image_side);
  return psnr(flatten(haar_idwt_2d(*p.truth, p.image_side, levels)),
              flatten(haar_idwt_2d(coeffs, p.image_side, levels)));
}

struct ExperimentReport {
  std::string method;
  Index n_lines = 0;
  double n_over_m = 0.0;
  double psnr_db = 0.0;
  long iterations = 0;
  double elapsed_seconds = 0.0;
  Index r_used = 0;
  bool converged = false;
};

struct BenchConfig {
  Index side = 64;
  std::vector<Index> lines{8, 12, 16, 20, 24};
  std::vector<std::string> methods{"ecme", "dore", "mn"};
  double tol = 1e-14;
  long max_iter = 50000;
  Index adore_L = 64;
};

/// Runs every (density, method) cell of the sweep on the phantom problem, in that order.
/// Thresholding methods at known r use the true Haar support size.
inline std::vector<ExperimentReport> benchmark_sweep(const BenchConfig& cfg) {
  detail::require(!cfg.lines.empty() && !cfg.methods.empty(), "bench: empty sweep");
  const StoppingRule stop{cfg.tol, cfg.max_iter};
  std::vector<ExperimentReport> rows;
  for (Index lines : cfg.lines) {
    const ProblemInstance p = phantom_instance(cfg.side, lines);
    const Vector zero = Vector::Zero(p.op.n_cols());
    const Index r = *p.truth_support_size;
    const double ratio = static_cast<double>(p.op.n_rows()) / static_cast<double>(p.op.n_cols());
    for (const std::string& method : cfg.methods) {
      ExperimentReport rep;
      rep.method = method;
      rep.n_lines = lines;
      rep.n_over_m = ratio;
      Vector est;
      if (method == "ecme" || method == "iht" || method == "dore") {
        ReconstructionResult res = method == "dore"  ? dore_run(p.op, p.y, r, zero, stop)
                                   : method == "iht" ? iht_run(p.op, p.y, r, zero, stop)
                                                     : ecme_run(p.op, p.y, r, zero, stop);
        est = res.estimate.s;
        rep.iterations = res.iterations;
        rep.elapsed_seconds = res.elapsed_seconds;
        rep.converged = res.converged;
        rep.r_used = r;
      } else if (method == "adore") {
        const auto t0 = std::chrono::steady_clock::now();
        AdoreResult res = adore_run(p.op, p.y, cfg.adore_L, stop);
        est = res.final.estimate.s;
        rep.iterations = res.final.iterations;
        rep.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rep.converged = res.final.converged;
        rep.r_used = res.r_selected;
      } else if (method == "mn") {
        const auto t0 = std::chrono::steady_clock::now();
        est = minimum_norm_estimate(p.op, p.y);
        rep.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rep.converged = true;
      } else {
        throw InputError("bench: unknown method '" + method + "'");
      }
      rep.psnr_db = image_psnr(p, est);
      rows.push_back(std::move(rep));
    }
  }
  return rows;
}

}  // namespace srecon
