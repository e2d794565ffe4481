#pragma once

#include <unsupported/Eigen/FFT>

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "srecon/common.hpp"
#include "srecon/haar.hpp"

namespace srecon {

enum class OperatorKind { dense, composed, partial_dct, partial_dft2, identity, haar_synthesis };

inline std::string_view to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::dense: return "dense";
    case OperatorKind::composed: return "composed";
    case OperatorKind::partial_dct: return "partial-dct";
    case OperatorKind::partial_dft2: return "partial-dft2";
    case OperatorKind::identity: return "identity";
    case OperatorKind::haar_synthesis: return "haar-synthesis";
  }
  return "unknown";
}

/// A real linear map R^cols -> R^rows with its transpose. Implementations are immutable.
class LinearMap {
 public:
  virtual ~LinearMap() = default;
  virtual Index rows() const = 0;
  virtual Index cols() const = 0;
  virtual OperatorKind kind() const = 0;
  virtual Vector apply(const Vector& v) const = 0;
  virtual Vector apply_adjoint(const Vector& w) const = 0;
  /// True when the map is known analytically to satisfy A A^T = I.
  virtual bool declares_orthonormal_rows() const { return false; }
};

class DenseMap final : public LinearMap {
 public:
  explicit DenseMap(Matrix h) : h_(std::move(h)) {
    detail::require(h_.rows() > 0 && h_.cols() > 0, "dense operator: empty matrix");
    detail::require(h_.allFinite(), "dense operator: non-finite entries");
  }
  Index rows() const override { return h_.rows(); }
  Index cols() const override { return h_.cols(); }
  OperatorKind kind() const override { return OperatorKind::dense; }
  Vector apply(const Vector& v) const override { return h_ * v; }
  Vector apply_adjoint(const Vector& w) const override { return h_.transpose() * w; }
  const Matrix& matrix() const { return h_; }

 private:
  Matrix h_;
};

class IdentityMap final : public LinearMap {
 public:
  explicit IdentityMap(Index n) : n_(n) { detail::require(n > 0, "identity operator: n must be positive"); }
  Index rows() const override { return n_; }
  Index cols() const override { return n_; }
  OperatorKind kind() const override { return OperatorKind::identity; }
  Vector apply(const Vector& v) const override { return v; }
  Vector apply_adjoint(const Vector& w) const override { return w; }
  bool declares_orthonormal_rows() const override { return true; }

 private:
  Index n_;
};

/// Selected rows of the orthonormal length-n type-II DCT matrix, evaluated on the fly.
/// Row indices are 0-based.
class PartialDctMap final : public LinearMap {
 public:
  PartialDctMap(Index n, std::vector<Index> row_indices) : n_(n), rows_(std::move(row_indices)) {
    detail::require(n > 0 && !rows_.empty(), "partial DCT: empty selection");
    for (Index k : rows_) detail::require(k >= 0 && k < n, "partial DCT: row index out of range");
  }
  Index rows() const override { return static_cast<Index>(rows_.size()); }
  Index cols() const override { return n_; }
  OperatorKind kind() const override { return OperatorKind::partial_dct; }
  bool declares_orthonormal_rows() const override {
    std::vector<Index> sorted = rows_;
    std::sort(sorted.begin(), sorted.end());
    return std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
  }

  double entry(Index row, Index col) const {
    const Index k = rows_[static_cast<std::size_t>(row)];
    const double scale = k == 0 ? std::sqrt(1.0 / n_) : std::sqrt(2.0 / n_);
    return scale * std::cos(std::numbers::pi * (2.0 * col + 1.0) * k / (2.0 * n_));
  }

  Vector apply(const Vector& v) const override {
    Vector out = Vector::Zero(rows());
    for (Index r = 0; r < rows(); ++r)
      for (Index c = 0; c < n_; ++c) out[r] += entry(r, c) * v[c];
    return out;
  }
  Vector apply_adjoint(const Vector& w) const override {
    Vector out = Vector::Zero(n_);
    for (Index r = 0; r < rows(); ++r)
      for (Index c = 0; c < n_; ++c) out[c] += entry(r, c) * w[r];
    return out;
  }

 private:
  Index n_;
  std::vector<Index> rows_;
};

/// Boolean frequency mask on a side x side grid, natural DFT ordering (index 0 is DC).
struct FrequencyMask {
  Index side = 0;
  std::vector<std::uint8_t> bits;  // row-major

  FrequencyMask() = default;
  explicit FrequencyMask(Index s) : side(s), bits(static_cast<std::size_t>(s * s), 0) {}

  bool operator()(Index i, Index j) const { return bits[static_cast<std::size_t>(i * side + j)] != 0; }
  void set(Index i, Index j, bool on = true) { bits[static_cast<std::size_t>(i * side + j)] = on ? 1 : 0; }
  Index count() const {
    Index c = 0;
    for (auto b : bits) c += b != 0;
    return c;
  }
  /// Adds the conjugate partner (-i, -j) mod side of every selected frequency.
  FrequencyMask symmetrized() const {
    FrequencyMask out = *this;
    for (Index i = 0; i < side; ++i)
      for (Index j = 0; j < side; ++j)
        if ((*this)(i, j)) out.set((side - i) % side, (side - j) % side);
    return out;
  }
};

namespace detail {

using Complex = std::complex<double>;

// Unitary 2-D DFT (forward) of a row-major side x side complex array.
inline std::vector<Complex> unitary_fft2(const std::vector<Complex>& in, Index side) {
  Eigen::FFT<double> fft;
  std::vector<Complex> data = in, line(static_cast<std::size_t>(side)), out_line;
  const auto s = static_cast<std::size_t>(side);
  for (std::size_t i = 0; i < s; ++i) {
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(i * s), s, line.begin());
    fft.fwd(out_line, line);
    std::copy_n(out_line.begin(), s, data.begin() + static_cast<std::ptrdiff_t>(i * s));
  }
  for (std::size_t j = 0; j < s; ++j) {
    for (std::size_t i = 0; i < s; ++i) line[i] = data[i * s + j];
    fft.fwd(out_line, line);
    for (std::size_t i = 0; i < s; ++i) data[i * s + j] = out_line[i];
  }
  const double scale = 1.0 / static_cast<double>(side);
  for (auto& c : data) c *= scale;
  return data;
}

}  // namespace detail

/// Real embedding of the unitary 2-D DFT restricted to a conjugate-symmetric frequency set.
/// Each self-conjugate frequency yields one row (its real coefficient); each conjugate pair
/// yields two rows, sqrt(2)*Re and sqrt(2)*Im of the representative. The rows are orthonormal
/// and their count equals the number of selected points in the symmetrized mask.
class PartialDft2Map final : public LinearMap {
 public:
  explicit PartialDft2Map(const FrequencyMask& mask) : side_(mask.side) {
    detail::require(side_ > 0 && mask.bits.size() == static_cast<std::size_t>(side_ * side_),
                    "partial DFT2: malformed mask");
    const FrequencyMask sym = mask.symmetrized();
    detail::require(sym.count() > 0, "partial DFT2: empty mask");
    for (Index i = 0; i < side_; ++i) {
      for (Index j = 0; j < side_; ++j) {
        if (!sym(i, j)) continue;
        const Index lin = i * side_ + j;
        const Index partner = ((side_ - i) % side_) * side_ + (side_ - j) % side_;
        if (partner == lin) {
          entries_.push_back({lin, Component::self});
        } else if (lin < partner) {
          entries_.push_back({lin, Component::real});
          entries_.push_back({lin, Component::imag});
        }
      }
    }
  }

  Index rows() const override { return static_cast<Index>(entries_.size()); }
  Index cols() const override { return side_ * side_; }
  Index side() const { return side_; }
  OperatorKind kind() const override { return OperatorKind::partial_dft2; }
  bool declares_orthonormal_rows() const override { return true; }

  Vector apply(const Vector& v) const override {
    detail::require_length(v, cols(), "partial DFT2 apply");
    std::vector<detail::Complex> img(static_cast<std::size_t>(cols()));
    for (Index k = 0; k < cols(); ++k) img[static_cast<std::size_t>(k)] = v[k];
    const auto freq = detail::unitary_fft2(img, side_);
    Vector out(rows());
    const double r2 = std::sqrt(2.0);
    for (std::size_t r = 0; r < entries_.size(); ++r) {
      const auto& e = entries_[r];
      const auto c = freq[static_cast<std::size_t>(e.lin)];
      switch (e.comp) {
        case Component::self: out[static_cast<Index>(r)] = c.real(); break;
        case Component::real: out[static_cast<Index>(r)] = r2 * c.real(); break;
        case Component::imag: out[static_cast<Index>(r)] = r2 * c.imag(); break;
      }
    }
    return out;
  }

  Vector apply_adjoint(const Vector& w) const override {
    detail::require_length(w, rows(), "partial DFT2 adjoint");
    std::vector<detail::Complex> freq(static_cast<std::size_t>(cols()));
    const double r2 = std::sqrt(2.0);
    for (std::size_t r = 0; r < entries_.size(); ++r) {
      const auto& e = entries_[r];
      auto& c = freq[static_cast<std::size_t>(e.lin)];
      const double wr = w[static_cast<Index>(r)];
      switch (e.comp) {
        case Component::self: c += wr; break;
        case Component::real: c += r2 * wr; break;
        case Component::imag: c -= detail::Complex(0.0, r2 * wr); break;
      }
    }
    const auto img = detail::unitary_fft2(freq, side_);
    Vector out(cols());
    for (Index k = 0; k < cols(); ++k) out[k] = img[static_cast<std::size_t>(k)].real();
    return out;
  }

 private:
  enum class Component : std::uint8_t { self, real, imag };
  struct Entry {
    Index lin;
    Component comp;
  };
  Index side_;
  std::vector<Entry> entries_;
};

/// Inverse orthonormal Haar DWT: wavelet coefficients -> image, both flattened row-major.
class HaarSynthesisMap final : public LinearMap {
 public:
  HaarSynthesisMap(Index side, int levels) : side_(side), levels_(levels) {
    detail::check_haar_args(side, levels);
  }
  Index rows() const override { return side_ * side_; }
  Index cols() const override { return side_ * side_; }
  OperatorKind kind() const override { return OperatorKind::haar_synthesis; }
  bool declares_orthonormal_rows() const override { return true; }
  Vector apply(const Vector& v) const override { return flatten(haar_idwt_2d(v, side_, levels_)); }
  Vector apply_adjoint(const Vector& w) const override {
    return haar_dwt_2d(unflatten(w, side_), levels_);
  }

 private:
  Index side_;
  int levels_;
};

/// outer * inner.
class ComposedMap final : public LinearMap {
 public:
  ComposedMap(std::shared_ptr<const LinearMap> outer, std::shared_ptr<const LinearMap> inner)
      : outer_(std::move(outer)), inner_(std::move(inner)) {
    detail::require(outer_ && inner_, "composed operator: null factor");
    detail::require(outer_->cols() == inner_->rows(), "composed operator: inner dimensions differ");
  }
  Index rows() const override { return outer_->rows(); }
  Index cols() const override { return inner_->cols(); }
  OperatorKind kind() const override { return OperatorKind::composed; }
  // Orthonormal rows of the outer factor survive right-multiplication by an orthogonal square map.
  bool declares_orthonormal_rows() const override {
    return outer_->declares_orthonormal_rows() && inner_->declares_orthonormal_rows() &&
           inner_->rows() == inner_->cols();
  }
  Vector apply(const Vector& v) const override { return outer_->apply(inner_->apply(v)); }
  Vector apply_adjoint(const Vector& w) const override {
    return inner_->apply_adjoint(outer_->apply_adjoint(w));
  }

 private:
  std::shared_ptr<const LinearMap> outer_, inner_;
};

/// Call counts, shared by all copies of one SensingOperator.
struct OperatorCounters {
  std::atomic<std::size_t> applies{0};
  std::atomic<std::size_t> adjoints{0};
  std::atomic<std::size_t> gram_solves{0};
  void reset() {
    applies = 0;
    adjoints = 0;
    gram_solves = 0;
  }
};

/// Explicit matrix of a linear map, built column by column.
inline Matrix to_dense(const LinearMap& map) {
  Matrix h(map.rows(), map.cols());
  Vector e = Vector::Zero(map.cols());
  for (Index j = 0; j < map.cols(); ++j) {
    e[j] = 1.0;
    h.col(j) = map.apply(e);
    e[j] = 0.0;
  }
  return h;
}

/// H H^T built by probing with basis vectors of the measurement space.
inline Matrix probe_gram(const LinearMap& map) {
  if (auto* dense = dynamic_cast<const DenseMap*>(&map)) return dense->matrix() * dense->matrix().transpose();
  const Index n = map.rows();
  Matrix g(n, n);
  Vector e = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    e[i] = 1.0;
    g.col(i) = map.apply(map.apply_adjoint(e));
    e[i] = 0.0;
  }
  return 0.5 * (g + g.transpose());
}

/// Sensing operator H (N x m, N <= m) with a precomputed solver for (H H^T) x = b.
///
/// When the rows of H are orthonormal the gram solve is the identity and no factor is
/// stored. Orthonormality is established by computing H H^T when the map is small
/// (N * m <= probe_limit), and otherwise taken from the map's analytic declaration.
class SensingOperator {
 public:
  static constexpr double kOrthonormalTol = 1e-10;
  static constexpr Index kDefaultProbeLimit = Index{1} << 22;

  explicit SensingOperator(std::shared_ptr<const LinearMap> map, Index probe_limit = kDefaultProbeLimit)
      : map_(std::move(map)), counters_(std::make_shared<OperatorCounters>()) {
    detail::require(map_ != nullptr, "sensing operator: null map");
    if (map_->rows() > map_->cols()) throw ImproperOperatorError();
    const bool small = map_->rows() * map_->cols() <= probe_limit;
    if (!small && map_->declares_orthonormal_rows()) {
      rows_orthonormal_ = true;
      return;
    }
    Matrix g = probe_gram(*map_);
    if ((g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() <= kOrthonormalTol) {
      rows_orthonormal_ = true;
      return;
    }
    auto llt = std::make_shared<Eigen::LLT<Matrix>>(g);
    if (llt->info() != Eigen::Success || !(llt->rcond() > 1e-13)) throw ImproperOperatorError();
    gram_ = std::move(llt);
  }

  static SensingOperator dense(Matrix h) { return SensingOperator(std::make_shared<DenseMap>(std::move(h))); }
  static SensingOperator identity(Index n) { return SensingOperator(std::make_shared<IdentityMap>(n)); }
  static SensingOperator partial_dct(Index n, std::vector<Index> rows) {
    return SensingOperator(std::make_shared<PartialDctMap>(n, std::move(rows)));
  }
  static SensingOperator partial_dft2(const FrequencyMask& mask) {
    return SensingOperator(std::make_shared<PartialDft2Map>(mask));
  }
  /// Phi * Psi with Psi the inverse Haar DWT on a side x side image.
  static SensingOperator partial_dft2_haar(const FrequencyMask& mask, int levels) {
    auto phi = std::make_shared<PartialDft2Map>(mask);
    auto psi = std::make_shared<HaarSynthesisMap>(mask.side, levels);
    return SensingOperator(std::make_shared<ComposedMap>(std::move(phi), std::move(psi)));
  }

  Index n_rows() const { return map_->rows(); }
  Index n_cols() const { return map_->cols(); }
  OperatorKind kind() const { return map_->kind(); }
  bool rows_orthonormal() const { return rows_orthonormal_; }
  const LinearMap& map() const { return *map_; }

  Vector apply(const Vector& v) const {
    detail::require_length(v, n_cols(), "apply");
    ++counters_->applies;
    return map_->apply(v);
  }

  Vector apply_adjoint(const Vector& w) const {
    detail::require_length(w, n_rows(), "apply_adjoint");
    ++counters_->adjoints;
    return map_->apply_adjoint(w);
  }

  /// x with (H H^T) x = b.
  Vector gram_solve(const Vector& b) const {
    detail::require_length(b, n_rows(), "gram_solve");
    ++counters_->gram_solves;
    if (rows_orthonormal_) return b;
    return gram_->solve(b);
  }

  /// Lower-triangular L with H H^T = L L^T; identity for orthonormal rows.
  Matrix gram_factor() const {
    if (rows_orthonormal_) return Matrix::Identity(n_rows(), n_rows());
    return gram_->matrixL();
  }

  OperatorCounters& counters() const { return *counters_; }

 private:
  std::shared_ptr<const LinearMap> map_;
  std::shared_ptr<const Eigen::LLT<Matrix>> gram_;
  std::shared_ptr<OperatorCounters> counters_;
  bool rows_orthonormal_ = false;
};

inline Matrix to_dense(const SensingOperator& op) { return to_dense(op.map()); }

/// 1-based row indices of the 21 x 32 DCT-II row submatrix with minimum 2-SSQ above 0.5.
inline const std::vector<Index>& golden_dct_rows_1based() {
  static const std::vector<Index> rows{2, 3, 4, 5, 7, 9, 10, 12, 13, 14, 16,
                                       18, 20, 21, 22, 24, 27, 29, 30, 31, 32};
  return rows;
}

inline SensingOperator golden_dct_operator() {
  std::vector<Index> rows;
  for (Index r : golden_dct_rows_1based()) rows.push_back(r - 1);
  return SensingOperator::partial_dct(32, rows);
}

}  // namespace srecon
