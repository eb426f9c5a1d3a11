// SPDX-License-Identifier: Apache-2.0

#ifndef PORO_LINEAR_SOLVER_HPP
#define PORO_LINEAR_SOLVER_HPP

#include <Eigen/SparseLU>

#include "poro/types.hpp"

namespace poro {

/// b - A*y evaluated with error-free product transformation (fma) and
/// two-sum compensated accumulation, so structural cancellations survive
/// far below working precision.
Vec compensated_residual(const SpMat& A, const Vec& y, const Vec& b);

/// Sparse LU with Ruiz equilibration and compensated-residual iterative
/// refinement. The system blocks span many orders of magnitude (mobilities
/// vs. elastic moduli), so the matrix is rescaled to roughly unit
/// row/column norms before factorization. Makes no symmetry assumption.
class ScaledLU {
 public:
  ScaledLU() = default;
  explicit ScaledLU(const SpMat& A) { compute(A); }

  void compute(const SpMat& A);
  Vec solve(const Vec& b) const;
  bool ok() const { return ok_; }

 private:
  SpMat scaled_, original_;
  Vec row_scale_, col_scale_;
  Eigen::SparseLU<SpMat> lu_;
  bool ok_ = false;
};

}  // namespace poro

#endif
