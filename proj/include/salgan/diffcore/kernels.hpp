#pragma once

#include <cstddef>

#include <Eigen/Core>

#include "salgan/real.hpp"

SALGAN_NAMESPACE_BEGIN
namespace diff::kernels {

// Row-major dense kernels. All accumulate into the output (C += ...).

using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

/// C[m x n] += A[m x k] * B[k x n]
inline void gemm_acc(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k,
                     std::size_t n) {
  using I = Eigen::Index;
  MutMap(c, I(m), I(n)).noalias() += ConstMap(a, I(m), I(k)) * ConstMap(b, I(k), I(n));
}

/// C[m x k] += A[m x n] * B[k x n]^T
inline void gemm_bt_acc(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t n,
                        std::size_t k) {
  using I = Eigen::Index;
  MutMap(c, I(m), I(k)).noalias() +=
      ConstMap(a, I(m), I(n)) * ConstMap(b, I(k), I(n)).transpose();
}

/// C[k x n] += A[m x k]^T * B[m x n]
inline void gemm_at_acc(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k,
                        std::size_t n) {
  using I = Eigen::Index;
  MutMap(c, I(k), I(n)).noalias() +=
      ConstMap(a, I(m), I(k)).transpose() * ConstMap(b, I(m), I(n));
}

}  // namespace diff::kernels
SALGAN_NAMESPACE_END
