#pragma once

// Test-only generators and oracles. Nothing here calls into the code paths it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "srecon/common.hpp"

namespace srecon::testing {

inline Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix h(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) h(i, j) = n(rng);
  return h;
}

inline Vector gaussian_vector(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

/// r-sparse vector with a uniformly random support and N(0,1) amplitudes bounded away from 0.
inline Vector sparse_vector(Index m, Index r, std::mt19937_64& rng) {
  std::vector<Index> perm(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::normal_distribution<double> d(0.0, 1.0);
  Vector s = Vector::Zero(m);
  for (Index k = 0; k < r; ++k) {
    double v = d(rng);
    v += v >= 0 ? 0.1 : -0.1;
    s[perm[static_cast<std::size_t>(k)]] = v;
  }
  return s;
}

/// Well-conditioned random invertible matrix: I + small Gaussian perturbation, scaled.
inline Matrix random_invertible(Index n, std::mt19937_64& rng) {
  Matrix g = gaussian_matrix(n, n, rng);
  return Matrix::Identity(n, n) * 2.0 + 0.5 * g / std::sqrt(static_cast<double>(n));
}

/// Orthonormal type-II DCT matrix written out from its textbook definition.
inline Matrix dct2_matrix(Index n) {
  Matrix c(n, n);
  for (Index k = 0; k < n; ++k)
    for (Index j = 0; j < n; ++j)
      c(k, j) = (k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n)) *
                std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * j + 1.0) / (2.0 * n));
  return c;
}

/// Rows of dct2_matrix(32) at the 1-based indices of the golden 21 x 32 example.
inline Matrix golden_dct_dense() {
  static const int rows[] = {2, 3, 4, 5, 7, 9, 10, 12, 13, 14, 16, 18, 20, 21, 22, 24, 27, 29, 30, 31, 32};
  const Matrix c = dct2_matrix(32);
  Matrix h(21, 32);
  for (int i = 0; i < 21; ++i) h.row(i) = c.row(rows[i] - 1);
  return h;
}

/// Matrix with orthonormal rows (N x m) from a QR of a Gaussian matrix.
inline Matrix orthonormal_rows(Index n, Index m, std::mt19937_64& rng) {
  const Matrix a = gaussian_matrix(m, n, rng);
  Eigen::HouseholderQR<Matrix> qr(a);
  const Matrix q = qr.householderQ() * Matrix::Identity(m, n);
  return q.transpose();
}

inline double max_abs_diff(const Vector& a, const Vector& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace srecon::testing
