#pragma once

// Complexified Gaussian-kernel sliding-window kernel recursive least squares.
//
// Complex inputs x in C^L are mapped to the real composite vector
// [Re(x), Im(x)] in R^{2L} and compared with a real Gaussian kernel
//
//     k(p, q) = exp(-|p - q|^2 / (2 sigma^2)).
//
// The filter keeps the last M input/output pairs. With K the kernel matrix
// of the dictionary, the regularised matrix is K + lambda I and the
// coefficients are alpha = (K + lambda I)^{-1} y. The inverse is never
// formed from scratch: adding a point appends a row/column through its
// Schur complement, and dropping the oldest point is the matching downdate.
//
// Dictionary order is oldest -> newest. Row/column i of inv_kernel() and
// element i of outputs()/alpha() refer to dictionary point i.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <ostream>
#include <string>

#include <Eigen/Core>

#include "fopaeq/errors.hpp"
#include "fopaeq/types.hpp"

namespace fopaeq {

template <typename Real>
struct KernelParams {
  Real sigma = Real(3.1622776601683795);  // 10^0.5
  Real lambda = Real(0.1);
  std::size_t window_m = 50;
  std::size_t block_l = 20;

  void validate() const {
    if (!(sigma > 0)) throw ArgumentError("kernel sigma must be > 0");
    if (!(lambda >= 0)) throw ArgumentError("kernel lambda must be >= 0");
    if (window_m < 1) throw ArgumentError("kernel window_m must be >= 1");
    if (block_l < 1) throw ArgumentError("kernel block_l must be >= 1");
  }

  Eigen::Index composite_size() const { return static_cast<Eigen::Index>(2 * block_l); }
};

// Relative singularity guard on Schur complements (relative to c_n).
inline constexpr double kSchurEpsilon = 1e-12;

template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar gaussian_kernel(const Eigen::MatrixBase<DerivedP>& p,
                                          const Eigen::MatrixBase<DerivedQ>& q,
                                          typename DerivedP::Scalar sigma) {
  using Real = typename DerivedP::Scalar;
  if (p.size() != q.size()) throw ArgumentError("gaussian_kernel: length mismatch");
  if (!(sigma > 0)) throw ArgumentError("gaussian_kernel: sigma must be > 0");
  const Real d2 = (p - q).squaredNorm();
  return std::exp(-d2 / (Real(2) * sigma * sigma));
}

// [Re(x), Im(x)] as a real column vector of length 2 * x.size().
template <typename Derived>
VectorX<typename Derived::RealScalar> complexify(const Eigen::MatrixBase<Derived>& x) {
  using Real = typename Derived::RealScalar;
  const Eigen::Index l = x.size();
  VectorX<Real> out(2 * l);
  out.head(l) = x.real();
  out.tail(l) = x.imag();
  return out;
}

template <typename Derived>
VectorX<typename Derived::RealScalar> complexify(const Eigen::MatrixBase<Derived>& x,
                                                 std::size_t block_l) {
  if (static_cast<std::size_t>(x.size()) != block_l)
    throw ArgumentError("complexify: expected " + std::to_string(block_l) + " values, got " +
                        std::to_string(x.size()));
  return complexify(x);
}

// Gaussian kernel matrix of the rows of `points` (no regularisation).
template <typename Derived>
MatrixX<typename Derived::Scalar> kernel_matrix(const Eigen::MatrixBase<Derived>& points,
                                                typename Derived::Scalar sigma) {
  using Real = typename Derived::Scalar;
  const Eigen::Index n = points.rows();
  MatrixX<Real> k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = Real(1);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      k(i, j) = gaussian_kernel(points.row(i), points.row(j), sigma);
      k(j, i) = k(i, j);
    }
  }
  return k;
}

template <typename Real>
class SwkrlsState {
 public:
  using RealVector = VectorX<Real>;
  using ComplexVector = ComplexVectorX<Real>;
  using Matrix = MatrixX<Real>;
  using Points = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  SwkrlsState() = default;

  SwkrlsState(std::size_t window_m, std::size_t block_l) { reserve(window_m, block_l); }

  explicit SwkrlsState(const KernelParams<Real>& params)
      : SwkrlsState(params.window_m, params.block_l) {}

  // Builds a state from explicit parts. No consistency check is made beyond
  // dimensions; used for golden files and fault-injection tests.
  template <typename DP, typename DY, typename DK>
  static SwkrlsState from_parts(std::size_t window_m, const Eigen::MatrixBase<DP>& dictionary,
                                const Eigen::MatrixBase<DY>& outputs,
                                const Eigen::MatrixBase<DK>& inv_kernel) {
    const Eigen::Index n = dictionary.rows();
    if (outputs.size() != n || inv_kernel.rows() != n || inv_kernel.cols() != n)
      throw ArgumentError("SwkrlsState::from_parts: dimension mismatch");
    if (n < 1 || dictionary.cols() < 2 || dictionary.cols() % 2 != 0 ||
        static_cast<std::size_t>(n) > window_m)
      throw ArgumentError("SwkrlsState::from_parts: invalid dictionary size");
    SwkrlsState s(window_m, static_cast<std::size_t>(dictionary.cols() / 2));
    s.size_ = n;
    s.points_.topRows(n) = dictionary;
    s.outputs_.head(n) = outputs;
    s.inv_.topLeftCorner(n, n) = inv_kernel;
    s.recompute_alpha();
    return s;
  }

  Eigen::Index size() const { return size_; }
  bool empty() const { return size_ == 0; }
  Eigen::Index capacity() const { return points_.rows(); }
  Eigen::Index input_size() const { return points_.cols(); }

  auto dictionary() const { return points_.topRows(size_); }
  auto outputs() const { return outputs_.head(size_); }
  auto inv_kernel() const { return inv_.topLeftCorner(size_, size_); }
  auto alpha() const { return alpha_.head(size_); }

  template <typename DQ>
  RealVector kernel_vector(const Eigen::MatrixBase<DQ>& query, Real sigma) const {
    if (empty()) throw StateError("kernel_vector: empty dictionary");
    if (query.size() != input_size()) throw ArgumentError("kernel_vector: query length mismatch");
    if (!(sigma > 0)) throw ArgumentError("kernel_vector: sigma must be > 0");
    const Real scale = Real(-1) / (Real(2) * sigma * sigma);
    return ((dictionary().rowwise() - query.transpose()).rowwise().squaredNorm() * scale)
        .array()
        .exp()
        .matrix();
  }

  template <typename DQ>
  Complex<Real> predict(const Eigen::MatrixBase<DQ>& query, Real sigma) const {
    const RealVector h = kernel_vector(query, sigma);
    return (alpha().transpose() * h).value();
  }

  // Appends (x, y). Strong guarantee: on NumericalError the state is
  // unchanged.
  template <typename DX>
  void grow_in_place(const Eigen::MatrixBase<DX>& x, Complex<Real> y,
                     const KernelParams<Real>& params) {
    check_input(x);
    if (size_ >= capacity()) throw StateError("grow: dictionary is at capacity");
    const Eigen::Index n = size_;
    const Real c = Real(1) + params.lambda;  // k(x, x) = 1
    Real schur = c;
    if (n > 0) {
      const RealVector b = kernel_vector(x, params.sigma);
      work_.head(n).noalias() = inv_.topLeftCorner(n, n) * b;
      schur = c - b.dot(work_.head(n));
    }
    check_schur(schur, c);
    append(x, y, schur);
  }

  // Drops the oldest pair. With the stored inverse partitioned as
  // [e f^T; f G], the inverse of the remaining kernel matrix is
  // G - f f^T / e.
  void prune_oldest_in_place() {
    if (size_ < 2) throw StateError("prune_oldest: need at least 2 dictionary entries");
    check_pivot(inv_(0, 0));
    drop_oldest();
    recompute_alpha();
  }

  // Window step: grow, or prune the oldest then grow when at capacity.
  // Both the downdate pivot and the new Schur complement are checked before
  // anything is modified.
  template <typename DX>
  void update_in_place(const Eigen::MatrixBase<DX>& x, Complex<Real> y,
                       const KernelParams<Real>& params) {
    check_input(x);
    if (size_ < capacity()) {
      grow_in_place(x, y, params);
      return;
    }
    const Real c = Real(1) + params.lambda;
    if (capacity() == 1) {
      check_schur(c, c);
      size_ = 0;
      append(x, y, c);
      return;
    }
    const Eigen::Index n = size_;
    const Eigen::Index m = n - 1;
    const Real e = inv_(0, 0);
    check_pivot(e);
    // b against the surviving points, and (G - f f^T / e) b without forming
    // the downdated inverse.
    const Real scale = Real(-1) / (Real(2) * params.sigma * params.sigma);
    const RealVector b =
        ((points_.middleRows(1, m).rowwise() - x.transpose()).rowwise().squaredNorm() * scale)
            .array()
            .exp()
            .matrix();
    const auto f = inv_.col(0).segment(1, m);
    RealVector kb = inv_.block(1, 1, m, m) * b;
    kb -= f * (f.dot(b) / e);
    const Real schur = c - b.dot(kb);
    check_schur(schur, c);

    drop_oldest();
    work_.head(m) = kb;
    append(x, y, schur);
  }

 private:
  void reserve(std::size_t window_m, std::size_t block_l) {
    if (window_m < 1 || block_l < 1) throw ArgumentError("SwkrlsState: window_m and block_l must be >= 1");
    const auto m = static_cast<Eigen::Index>(window_m);
    points_.setZero(m, static_cast<Eigen::Index>(2 * block_l));
    outputs_.setZero(m);
    inv_.setZero(m, m);
    alpha_.setZero(m);
    work_.setZero(m);
    size_ = 0;
  }

  template <typename DX>
  void check_input(const Eigen::MatrixBase<DX>& x) const {
    if (capacity() == 0) throw StateError("SwkrlsState: not initialised");
    if (x.size() != input_size())
      throw ArgumentError("SwkrlsState: composite input must have length " + std::to_string(input_size()));
  }

  static void check_schur(Real schur, Real c) {
    if (!(schur > Real(kSchurEpsilon) * c))
      throw NumericalError("grow: Schur complement below threshold (rank-deficient kernel matrix)");
  }

  // Exact SPD inverses have e >= 1 / (1 + lambda); the guard only catches
  // corrupted or degenerate states.
  static void check_pivot(Real e) {
    if (!(std::abs(e) > Real(kSchurEpsilon))) throw NumericalError("prune_oldest: e ~ 0 in stored inverse");
  }

  // Expects work_.head(size_) = K^{-1} b for the new point. Assembles
  // [K^{-1} + f kb kb^T, -f kb; -f kb^T, f] with f = 1 / schur.
  template <typename DX>
  void append(const Eigen::MatrixBase<DX>& x, Complex<Real> y, Real schur) {
    const Eigen::Index n = size_;
    const Real f = Real(1) / schur;
    if (n > 0) {
      inv_.topLeftCorner(n, n).noalias() += f * work_.head(n) * work_.head(n).transpose();
      inv_.col(n).head(n) = -f * work_.head(n);
      inv_.row(n).head(n) = inv_.col(n).head(n).transpose();
    }
    inv_(n, n) = f;
    points_.row(n) = x.transpose();
    outputs_(n) = y;
    size_ = n + 1;
    recompute_alpha();
  }

  // Downdate without the alpha refresh; pivot already checked.
  void drop_oldest() {
    const Eigen::Index n = size_;
    const Eigen::Index m = n - 1;
    const Real e = inv_(0, 0);
    work_.head(m) = inv_.col(0).segment(1, m);
    // Column-major forward sweep reads (i+1, j+1) before it is overwritten.
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < m; ++i) inv_(i, j) = inv_(i + 1, j + 1) - work_(i) * work_(j) / e;
    std::copy(points_.data() + points_.cols(), points_.data() + n * points_.cols(), points_.data());
    std::copy(outputs_.data() + 1, outputs_.data() + n, outputs_.data());
    size_ = m;
  }

  void recompute_alpha() {
    const Eigen::Index n = size_;
    alpha_.head(n).noalias() = inv_.topLeftCorner(n, n) * outputs_.head(n);
  }

  Points points_;
  ComplexVector outputs_;
  Matrix inv_;
  ComplexVector alpha_;
  RealVector work_;
  Eigen::Index size_ = 0;
};

// Functional interface. Each returns a new state and leaves the argument
// value the caller holds untouched.

template <typename Real, typename DQ>
VectorX<Real> kernel_vector(const SwkrlsState<Real>& state, const Eigen::MatrixBase<DQ>& query,
                            const KernelParams<Real>& params) {
  return state.kernel_vector(query, params.sigma);
}

template <typename Real, typename DQ>
Complex<Real> predict(const SwkrlsState<Real>& state, const Eigen::MatrixBase<DQ>& query,
                      const KernelParams<Real>& params) {
  if (state.empty()) throw StateError("predict: empty state");
  return state.predict(query, params.sigma);
}

template <typename Real, typename DX>
SwkrlsState<Real> grow(SwkrlsState<Real> state, const Eigen::MatrixBase<DX>& x, Complex<Real> y,
                       const KernelParams<Real>& params) {
  state.grow_in_place(x, y, params);
  return state;
}

template <typename Real>
SwkrlsState<Real> prune_oldest(SwkrlsState<Real> state) {
  state.prune_oldest_in_place();
  return state;
}

template <typename Real, typename DX>
SwkrlsState<Real> update(SwkrlsState<Real> state, const Eigen::MatrixBase<DX>& x, Complex<Real> y,
                         const KernelParams<Real>& params) {
  state.update_in_place(x, y, params);
  return state;
}

// K + lambda I rebuilt directly from the dictionary.
template <typename Real>
MatrixX<Real> regularized_kernel_matrix(const SwkrlsState<Real>& state, const KernelParams<Real>& params) {
  MatrixX<Real> k = kernel_matrix(state.dictionary(), params.sigma);
  k.diagonal().array() += params.lambda;
  return k;
}

// CSV dump: kind,i,j,re,im with kind in {dictionary, output, inv_kernel, alpha}.
template <typename Real>
void write_state_csv(std::ostream& os, const SwkrlsState<Real>& state) {
  const auto prec = os.precision(17);
  os << "kind,i,j,re,im\n";
  const auto dict = state.dictionary();
  for (Eigen::Index i = 0; i < dict.rows(); ++i)
    for (Eigen::Index j = 0; j < dict.cols(); ++j) os << "dictionary," << i << ',' << j << ',' << dict(i, j) << ",0\n";
  for (Eigen::Index i = 0; i < state.size(); ++i)
    os << "output," << i << ",0," << state.outputs()(i).real() << ',' << state.outputs()(i).imag() << '\n';
  const auto inv = state.inv_kernel();
  for (Eigen::Index i = 0; i < inv.rows(); ++i)
    for (Eigen::Index j = 0; j < inv.cols(); ++j) os << "inv_kernel," << i << ',' << j << ',' << inv(i, j) << ",0\n";
  for (Eigen::Index i = 0; i < state.size(); ++i)
    os << "alpha," << i << ",0," << state.alpha()(i).real() << ',' << state.alpha()(i).imag() << '\n';
  os.precision(prec);
}

}  // namespace fopaeq
