#pragma once

// Dense N-way tensors and the multilinear kernels the solvers are built on.
//
// Conventions shared by every module:
//   * storage is first-index-fastest;
//   * modes are 0-based;
//   * the mode-n unfolding is L_n x prod(L_k, k != n) and its columns enumerate
//     the remaining indices with lower modes varying fastest;
//   * Khatri-Rao chains run in descending mode order, U_{N-1} (.) ... (.) U_0
//     with the target mode skipped, so unfold(X, n) = U_n * KR^T for a CP model.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hyperntf/errors.hpp"

namespace hyperntf {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

namespace detail {

inline Index extent_product(std::span<const Index> dims) {
  return std::accumulate(dims.begin(), dims.end(), Index{1}, std::multiplies<>());
}

inline Index extent_product(std::span<const Index> dims, std::size_t begin, std::size_t end) {
  Index p = 1;
  for (std::size_t k = begin; k < end; ++k) p *= dims[k];
  return p;
}

inline void check_mode(Index mode, Index order, const char* where) {
  if (mode < 0 || mode >= order)
    throw InvalidArgument(std::string(where) + ": mode " + std::to_string(mode) +
                          " out of range for order " + std::to_string(order));
}

}  // namespace detail

/// Dense N-way array with explicit extents. An order-0 tensor holds one scalar.
template <typename Scalar_>
class Tensor {
 public:
  using Scalar = Scalar_;

  Tensor() = default;

  explicit Tensor(std::vector<Index> dims) : dims_(std::move(dims)) {
    check_dims();
    data_ = Vector<Scalar>::Zero(detail::extent_product(dims_));
  }

  Tensor(std::vector<Index> dims, Vector<Scalar> data)
      : dims_(std::move(dims)), data_(std::move(data)) {
    check_dims();
    if (data_.size() != detail::extent_product(dims_))
      throw InvalidArgument("Tensor: data length " + std::to_string(data_.size()) +
                            " does not match the product of dims");
  }

  static Tensor Zero(std::vector<Index> dims) { return Tensor(std::move(dims)); }

  static Tensor Constant(std::vector<Index> dims, Scalar value) {
    Tensor t(std::move(dims));
    t.data_.setConstant(value);
    return t;
  }

  Index order() const { return static_cast<Index>(dims_.size()); }
  Index size() const { return data_.size(); }
  const std::vector<Index>& dims() const { return dims_; }
  Index dim(Index mode) const { return dims_.at(static_cast<std::size_t>(mode)); }

  Vector<Scalar>& data() { return data_; }
  const Vector<Scalar>& data() const { return data_; }

  Index linear_index(std::span<const Index> idx) const {
    if (static_cast<std::size_t>(idx.size()) != dims_.size())
      throw InvalidArgument("Tensor: index arity does not match order");
    Index lin = 0;
    Index stride = 1;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      lin += idx[k] * stride;
      stride *= dims_[k];
    }
    return lin;
  }

  Scalar& operator()(std::span<const Index> idx) { return data_[linear_index(idx)]; }
  Scalar operator()(std::span<const Index> idx) const { return data_[linear_index(idx)]; }
  Scalar& operator()(std::initializer_list<Index> idx) {
    return (*this)(std::span<const Index>(idx.begin(), idx.size()));
  }
  Scalar operator()(std::initializer_list<Index> idx) const {
    return (*this)(std::span<const Index>(idx.begin(), idx.size()));
  }

  bool is_nonnegative() const { return (data_.array() >= Scalar(0)).all(); }

  /// Linear index of the first negative entry, or -1.
  Index first_negative() const {
    for (Index i = 0; i < data_.size(); ++i)
      if (data_[i] < Scalar(0)) return i;
    return -1;
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.dims_ == b.dims_ && a.data_ == b.data_;
  }

 private:
  void check_dims() const {
    for (Index d : dims_)
      if (d < 1) throw InvalidArgument("Tensor: extents must be positive");
  }

  std::vector<Index> dims_;
  Vector<Scalar> data_;
};

using DenseTensor = Tensor<double>;
using DenseMatrix = Matrix<double>;
using DenseVector = Vector<double>;

/// Mode-`mode` unfolding: L_mode x prod(other extents), lower modes fastest along columns.
template <typename Scalar>
Matrix<Scalar> unfold(const Tensor<Scalar>& t, Index mode) {
  detail::check_mode(mode, t.order(), "unfold");
  const auto& dims = t.dims();
  const auto m = static_cast<std::size_t>(mode);
  const Index left = detail::extent_product(dims, 0, m);
  const Index rows = dims[m];
  const Index right = detail::extent_product(dims, m + 1, dims.size());

  Matrix<Scalar> out(rows, left * right);
  const Scalar* src = t.data().data();
  for (Index b = 0; b < right; ++b)
    for (Index r = 0; r < rows; ++r)
      for (Index a = 0; a < left; ++a)
        out(r, a + left * b) = src[a + left * (r + rows * b)];
  return out;
}

/// Inverse of unfold for the same mode and extents.
template <typename Derived>
Tensor<typename Derived::Scalar> fold(const Eigen::MatrixBase<Derived>& m, Index mode,
                                      std::vector<Index> dims) {
  using Scalar = typename Derived::Scalar;
  detail::check_mode(mode, static_cast<Index>(dims.size()), "fold");
  const auto md = static_cast<std::size_t>(mode);
  const Index left = detail::extent_product(dims, 0, md);
  const Index rows = dims[md];
  const Index right = detail::extent_product(dims, md + 1, dims.size());
  if (m.rows() != rows || m.cols() != left * right)
    throw InvalidArgument("fold: matrix is " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()) + ", expected " + std::to_string(rows) +
                          "x" + std::to_string(left * right));

  Tensor<Scalar> out(std::move(dims));
  Scalar* dst = out.data().data();
  for (Index b = 0; b < right; ++b)
    for (Index r = 0; r < rows; ++r)
      for (Index a = 0; a < left; ++a)
        dst[a + left * (r + rows * b)] = m(r, a + left * b);
  return out;
}

/// Column-wise Kronecker product; row index is i_a * b.rows() + i_b.
template <typename DerivedA, typename DerivedB>
Matrix<typename DerivedA::Scalar> khatri_rao(const Eigen::MatrixBase<DerivedA>& a,
                                             const Eigen::MatrixBase<DerivedB>& b) {
  if (a.cols() != b.cols())
    throw InvalidArgument("khatri_rao: column counts differ (" + std::to_string(a.cols()) +
                          " vs " + std::to_string(b.cols()) + ")");
  Matrix<typename DerivedA::Scalar> out(a.rows() * b.rows(), a.cols());
  for (Index j = 0; j < a.cols(); ++j)
    for (Index ia = 0; ia < a.rows(); ++ia)
      out.col(j).segment(ia * b.rows(), b.rows()) = a(ia, j) * b.col(j);
  return out;
}

template <typename DerivedA, typename DerivedB>
Matrix<typename DerivedA::Scalar> kronecker(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b) {
  Matrix<typename DerivedA::Scalar> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index ja = 0; ja < a.cols(); ++ja)
    for (Index ia = 0; ia < a.rows(); ++ia)
      out.block(ia * b.rows(), ja * b.cols(), b.rows(), b.cols()) = a(ia, ja) * b;
  return out;
}

template <typename DerivedA, typename DerivedB>
Matrix<typename DerivedA::Scalar> hadamard(const Eigen::MatrixBase<DerivedA>& a,
                                           const Eigen::MatrixBase<DerivedB>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidArgument("hadamard: shapes differ");
  return a.cwiseProduct(b);
}

namespace detail {

// Contracts mode `mode` of the buffer `src` (extents `dims`) with `v`, writing
// prod(dims)/dims[mode] values to `out`. Summation order is fixed by Eigen's
// single-threaded gemv, so results do not depend on the caller.
template <typename Scalar, typename VecDerived>
void contract_mode(const Scalar* src, std::span<const Index> dims, std::size_t mode,
                   const Eigen::MatrixBase<VecDerived>& v, Vector<Scalar>& out) {
  const Index left = extent_product(dims, 0, mode);
  const Index len = dims[mode];
  const Index right = extent_product(dims, mode + 1, dims.size());
  out.resize(left * right);
  if (left == 1) {
    out.noalias() = Eigen::Map<const Matrix<Scalar>>(src, len, right).transpose() * v;
    return;
  }
  for (Index b = 0; b < right; ++b)
    out.segment(b * left, left).noalias() =
        Eigen::Map<const Matrix<Scalar>>(src + b * left * len, left, len) * v;
}

}  // namespace detail

/// Contracts mode `mode` with `v`; the result has one fewer mode.
template <typename Scalar, typename VecDerived>
Tensor<Scalar> mode_vec_product(const Tensor<Scalar>& t, const Eigen::MatrixBase<VecDerived>& v,
                                Index mode) {
  detail::check_mode(mode, t.order(), "mode_vec_product");
  const auto m = static_cast<std::size_t>(mode);
  if (v.size() != t.dims()[m])
    throw InvalidArgument("mode_vec_product: vector length " + std::to_string(v.size()) +
                          " does not match extent " + std::to_string(t.dims()[m]));
  Vector<Scalar> out;
  detail::contract_mode(t.data().data(), std::span<const Index>(t.dims()), m, v, out);
  std::vector<Index> dims = t.dims();
  dims.erase(dims.begin() + static_cast<std::ptrdiff_t>(m));
  return Tensor<Scalar>(std::move(dims), std::move(out));
}

/// Mode-n matrix product: replaces extent L_n by m.rows().
template <typename Scalar, typename Derived>
Tensor<Scalar> mode_product(const Tensor<Scalar>& t, const Eigen::MatrixBase<Derived>& m,
                            Index mode) {
  detail::check_mode(mode, t.order(), "mode_product");
  if (m.cols() != t.dim(mode))
    throw InvalidArgument("mode_product: matrix has " + std::to_string(m.cols()) +
                          " columns, extent is " + std::to_string(t.dim(mode)));
  std::vector<Index> dims = t.dims();
  dims[static_cast<std::size_t>(mode)] = m.rows();
  return fold(Matrix<Scalar>(m * unfold(t, mode)), mode, std::move(dims));
}

/// Matricized tensor times Khatri-Rao product for `mode`.
///
/// `factors` holds one matrix per mode; the entry at `mode` is ignored. Each
/// output column j is t contracted with column j of every other factor, taken in
/// descending mode order, so the Khatri-Rao matrix is never formed. The result
/// equals unfold(t, mode) * (U_{N-1} (.) ... (.) U_0, mode skipped).
template <typename Scalar>
Matrix<Scalar> mttkrp(const Tensor<Scalar>& t, std::span<const Matrix<Scalar>> factors,
                      Index mode) {
  const Index order = t.order();
  detail::check_mode(mode, order, "mttkrp");
  if (static_cast<Index>(factors.size()) != order)
    throw InvalidArgument("mttkrp: expected one factor per mode");
  if (order == 1)
    throw InvalidArgument("mttkrp: order-1 tensor has no modes to contract");

  Index rank = -1;
  for (Index k = 0; k < order; ++k) {
    if (k == mode) continue;
    const auto& f = factors[static_cast<std::size_t>(k)];
    if (f.rows() != t.dim(k))
      throw InvalidArgument("mttkrp: factor " + std::to_string(k) + " has " +
                            std::to_string(f.rows()) + " rows, extent is " +
                            std::to_string(t.dim(k)));
    if (rank < 0) rank = f.cols();
    if (f.cols() != rank) throw InvalidArgument("mttkrp: factors disagree on column count");
  }

  Matrix<Scalar> out(t.dim(mode), rank);
  Vector<Scalar> buf_a;
  Vector<Scalar> buf_b;
  for (Index j = 0; j < rank; ++j) {
    std::vector<Index> dims = t.dims();
    const Scalar* src = t.data().data();
    Vector<Scalar>* dst = &buf_a;
    for (Index k = order - 1; k >= 0; --k) {
      if (k == mode) continue;
      const auto ks = static_cast<std::size_t>(k);
      detail::contract_mode(src, std::span<const Index>(dims), ks,
                            factors[ks].col(j), *dst);
      dims.erase(dims.begin() + static_cast<std::ptrdiff_t>(ks));
      src = dst->data();
      dst = (dst == &buf_a) ? &buf_b : &buf_a;
    }
    out.col(j) = Eigen::Map<const Vector<Scalar>>(src, t.dim(mode));
  }
  return out;
}

/// Order-`order` tensor of extent `rank` per mode with ones on the super-diagonal.
template <typename Scalar = double>
Tensor<Scalar> superdiag(Index rank, Index order) {
  if (rank < 1 || order < 1) throw InvalidArgument("superdiag: rank and order must be positive");
  Tensor<Scalar> out(std::vector<Index>(static_cast<std::size_t>(order), rank));
  Index stride = 0;
  for (Index k = 0, s = 1; k < order; ++k, s *= rank) stride += s;
  for (Index j = 0; j < rank; ++j) out.data()[j * stride] = Scalar(1);
  return out;
}

/// Khatri-Rao product of factors[high] (.) ... (.) factors[low] with `skip` omitted.
template <typename Scalar>
Matrix<Scalar> khatri_rao_chain(std::span<const Matrix<Scalar>> factors, Index skip) {
  Matrix<Scalar> acc;
  bool first = true;
  for (Index k = static_cast<Index>(factors.size()) - 1; k >= 0; --k) {
    if (k == skip) continue;
    const auto& f = factors[static_cast<std::size_t>(k)];
    if (first) {
      acc = f;
      first = false;
    } else {
      acc = khatri_rao(acc, f);
    }
  }
  return acc;
}

/// CP model sum_j u_{0,j} o u_{1,j} o ... o u_{N-1,j}.
template <typename Scalar>
Tensor<Scalar> cp_reconstruct(std::span<const Matrix<Scalar>> factors) {
  if (factors.empty()) throw InvalidArgument("cp_reconstruct: no factors");
  const Index rank = factors.front().cols();
  std::vector<Index> dims;
  for (const auto& f : factors) {
    if (f.cols() != rank) throw InvalidArgument("cp_reconstruct: factors disagree on column count");
    dims.push_back(f.rows());
  }
  if (factors.size() == 1)
    return Tensor<Scalar>(std::move(dims), factors.front().rowwise().sum());
  const Matrix<Scalar> kr = khatri_rao_chain(factors, 0);
  return fold(Matrix<Scalar>(factors.front() * kr.transpose()), 0, std::move(dims));
}

template <typename Scalar>
Tensor<Scalar> cp_reconstruct(std::initializer_list<Matrix<Scalar>> factors) {
  return cp_reconstruct(std::span<const Matrix<Scalar>>(factors.begin(), factors.size()));
}

template <typename Scalar>
Scalar frobenius(const Tensor<Scalar>& t) {
  return t.data().norm();
}

/// Relative Frobenius error ||x - xhat|| / ||x||.
template <typename Scalar>
Scalar rse(const Tensor<Scalar>& x, const Tensor<Scalar>& xhat) {
  if (x.dims() != xhat.dims()) throw InvalidArgument("rse: dims differ");
  const Scalar nx = frobenius(x);
  if (!(nx > Scalar(0))) throw InvalidArgument("rse: reference tensor has zero norm");
  return (x.data() - xhat.data()).norm() / nx;
}

}  // namespace hyperntf
