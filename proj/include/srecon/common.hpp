#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace srecon {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;
using Support = std::vector<Index>;

/// Raised for malformed arguments: wrong dimensions, out-of-range levels, bad files.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a combinatorial enumeration would exceed its configured guard.
class SizeGuardError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Raised when H H^T cannot be factored (H is not a full-row-rank N x m matrix with N <= m).
class ImproperOperatorError : public std::runtime_error {
 public:
  ImproperOperatorError() : std::runtime_error("not a proper sensing matrix") {}
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InputError(what);
}

inline void require_length(const Vector& v, Index n, const char* name) {
  if (v.size() != n) {
    throw InputError(std::string(name) + ": expected length " + std::to_string(n) + ", got " +
                     std::to_string(v.size()));
  }
}

}  // namespace detail

/// Indices of the exactly-nonzero entries, ascending.
inline Support support(const Vector& x) {
  Support s;
  for (Index i = 0; i < x.size(); ++i)
    if (x[i] != 0.0) s.push_back(i);
  return s;
}

inline Index l0_norm(const Vector& x) { return static_cast<Index>(support(x).size()); }

}  // namespace srecon
