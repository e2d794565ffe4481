#pragma once

#include <cmath>

#include "srecon/common.hpp"

namespace srecon {

inline bool is_power_of_two(Index n) { return n > 0 && (n & (n - 1)) == 0; }

inline int log2_exact(Index n) {
  int k = 0;
  while ((Index{1} << k) < n) ++k;
  return k;
}

/// Row-major flatten of a square image: v[i * side + j] = img(i, j).
inline Vector flatten(const Matrix& img) {
  Vector v(img.size());
  const Index side = img.cols();
  for (Index i = 0; i < img.rows(); ++i)
    for (Index j = 0; j < side; ++j) v[i * side + j] = img(i, j);
  return v;
}

inline Matrix unflatten(const Vector& v, Index side) {
  detail::require(v.size() == side * side, "unflatten: length is not side^2");
  Matrix img(side, side);
  for (Index i = 0; i < side; ++i)
    for (Index j = 0; j < side; ++j) img(i, j) = v[i * side + j];
  return img;
}

namespace detail {

inline void check_haar_args(Index side, int levels) {
  require(is_power_of_two(side), "haar: image side must be a power of two");
  require(levels >= 1 && levels <= log2_exact(side), "haar: levels must lie in [1, log2(side)]");
}

// One analysis step on the leading n x n block: rows then columns, [approx | detail].
inline void haar_forward_block(Matrix& a, Index n) {
  const double h = 1.0 / std::sqrt(2.0);
  const Index half = n / 2;
  Vector tmp(n);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < half; ++k) {
      tmp[k] = (a(i, 2 * k) + a(i, 2 * k + 1)) * h;
      tmp[half + k] = (a(i, 2 * k) - a(i, 2 * k + 1)) * h;
    }
    for (Index k = 0; k < n; ++k) a(i, k) = tmp[k];
  }
  for (Index j = 0; j < n; ++j) {
    for (Index k = 0; k < half; ++k) {
      tmp[k] = (a(2 * k, j) + a(2 * k + 1, j)) * h;
      tmp[half + k] = (a(2 * k, j) - a(2 * k + 1, j)) * h;
    }
    for (Index k = 0; k < n; ++k) a(k, j) = tmp[k];
  }
}

inline void haar_inverse_block(Matrix& a, Index n) {
  const double h = 1.0 / std::sqrt(2.0);
  const Index half = n / 2;
  Vector tmp(n);
  for (Index j = 0; j < n; ++j) {
    for (Index k = 0; k < half; ++k) {
      tmp[2 * k] = (a(k, j) + a(half + k, j)) * h;
      tmp[2 * k + 1] = (a(k, j) - a(half + k, j)) * h;
    }
    for (Index k = 0; k < n; ++k) a(k, j) = tmp[k];
  }
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < half; ++k) {
      tmp[2 * k] = (a(i, k) + a(i, half + k)) * h;
      tmp[2 * k + 1] = (a(i, k) - a(i, half + k)) * h;
    }
    for (Index k = 0; k < n; ++k) a(i, k) = tmp[k];
  }
}

}  // namespace detail

/// Orthonormal 2-D Haar analysis (Mallat layout, approximation block top-left).
/// Returns the coefficient array flattened row-major.
inline Vector haar_dwt_2d(const Matrix& image, int levels) {
  detail::require(image.rows() == image.cols(), "haar: image must be square");
  detail::check_haar_args(image.rows(), levels);
  Matrix a = image;
  Index n = image.rows();
  for (int l = 0; l < levels; ++l, n /= 2) detail::haar_forward_block(a, n);
  return flatten(a);
}

/// Inverse of haar_dwt_2d.
inline Matrix haar_idwt_2d(const Vector& coeffs, Index side, int levels) {
  detail::check_haar_args(side, levels);
  Matrix a = unflatten(coeffs, side);
  for (int l = levels - 1; l >= 0; --l) detail::haar_inverse_block(a, side >> l);
  return a;
}

}  // namespace srecon
