#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include <Eigen/Dense>

#include "deepssm/types.hpp"

namespace deepssm {

template <typename Derived>
auto symmetrize(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  return (Scalar(0.5) * (m + m.transpose())).eval();
}

/// Moore-Penrose pseudo-inverse. Singular values below `rel_cutoff * sigma_max`
/// are treated as zero; an all-zero input maps to the zero matrix.
template <typename Derived>
Matrix<typename Derived::Scalar> pseudo_inverse(const Eigen::MatrixBase<Derived>& m,
                                                double rel_cutoff = 1e-10) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> result = Matrix<Scalar>::Zero(m.cols(), m.rows());
  if (m.size() == 0) return result;
  Eigen::JacobiSVD<Matrix<Scalar>> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const Scalar smax = sv.size() > 0 ? sv(0) : Scalar(0);
  if (!(smax > Scalar(0))) return result;
  const Scalar cutoff = Scalar(rel_cutoff) * smax;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) {
      result.noalias() += (svd.matrixV().col(i) / sv(i)) * svd.matrixU().col(i).transpose();
    }
  }
  return result;
}

/// Cholesky factor of a symmetric positive definite matrix. On failure one retry
/// is made after adding `1e-9 * trace / n` to the diagonal; nullopt means both
/// attempts failed.
template <typename Scalar>
std::optional<Eigen::LLT<Matrix<Scalar>>> spd_factor(const Matrix<Scalar>& m) {
  Eigen::LLT<Matrix<Scalar>> llt(m);
  if (llt.info() == Eigen::Success) return llt;
  const Index n = m.rows();
  const Scalar jitter = Scalar(1e-9) * std::abs(m.trace()) / Scalar(n > 0 ? n : 1);
  if (!(jitter > Scalar(0))) return std::nullopt;
  Matrix<Scalar> bumped = m;
  bumped.diagonal().array() += jitter;
  llt.compute(bumped);
  if (llt.info() == Eigen::Success) return llt;
  return std::nullopt;
}

/// Clamps negative entries to zero in place. Returns true if any entry changed.
template <typename Derived>
bool relu_inplace(Eigen::MatrixBase<Derived>& m) {
  bool clamped = false;
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      if (m(i, j) < 0) {
        m(i, j) = 0;
        clamped = true;
      }
    }
  }
  return clamped;
}

template <typename Derived>
typename Derived::Scalar min_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

template <typename Derived>
bool is_symmetric_psd(const Eigen::MatrixBase<Derived>& m, double tol = 1e-9) {
  if (m.rows() != m.cols()) return false;
  if (!m.allFinite()) return false;
  const auto asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  const auto scale = std::max<typename Derived::Scalar>(1, m.cwiseAbs().maxCoeff());
  if (asym > tol * scale) return false;
  return min_eigenvalue(m) >= -tol * scale;
}

}  // namespace deepssm
