// Row-major GEMM wrappers over Eigen. Eigen's own threading is disabled;
// panforge parallelizes at the image level and needs each product to be
// sequential and deterministic.
#pragma once

#ifndef EIGEN_DONT_PARALLELIZE
#define EIGEN_DONT_PARALLELIZE
#endif
#include <Eigen/Core>

namespace panforge::detail {

template <typename Real>
using MatMap = Eigen::Map<Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename Real>
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

/// C[m x n] = A[m x k] * B[k x n], optionally accumulating into C.
template <typename Real>
inline void gemm_nn(int m, int k, int n, const Real* a, const Real* b, Real* c, bool accumulate) {
  ConstMatMap<Real> ma(a, m, k), mb(b, k, n);
  MatMap<Real> mc(c, m, n);
  if (accumulate)
    mc.noalias() += ma * mb;
  else
    mc.noalias() = ma * mb;
}

/// C[m x n] = A^T * B with A stored [k x m].
template <typename Real>
inline void gemm_tn(int m, int k, int n, const Real* a, const Real* b, Real* c, bool accumulate) {
  ConstMatMap<Real> ma(a, k, m), mb(b, k, n);
  MatMap<Real> mc(c, m, n);
  if (accumulate)
    mc.noalias() += ma.transpose() * mb;
  else
    mc.noalias() = ma.transpose() * mb;
}

/// C[m x n] = A * B^T with B stored [n x k].
template <typename Real>
inline void gemm_nt(int m, int k, int n, const Real* a, const Real* b, Real* c, bool accumulate) {
  ConstMatMap<Real> ma(a, m, k), mb(b, n, k);
  MatMap<Real> mc(c, m, n);
  if (accumulate)
    mc.noalias() += ma * mb.transpose();
  else
    mc.noalias() = ma * mb.transpose();
}

}  // namespace panforge::detail
