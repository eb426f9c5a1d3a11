// SPDX-License-Identifier: Apache-2.0

#include "poro/linear_solver.hpp"

#include <cmath>

namespace poro {

// The composed systems are extremely ill-conditioned (storage terms vs.
// elastic moduli span ~20 orders), and plain refinement stalls at
// kappa*eps forward error; a compensated residual lets the refinement
// contract to machine-level solutions.
Vec compensated_residual(const SpMat& A, const Vec& y, const Vec& b) {
  const int n = static_cast<int>(A.rows());
  Vec acc = Vec::Zero(n), comp = Vec::Zero(n);
  for (int k = 0; k < A.outerSize(); ++k) {
    const double yk = y[k];
    if (yk == 0.0) continue;
    for (SpMat::InnerIterator it(A, k); it; ++it) {
      const int r = static_cast<int>(it.row());
      const double p = it.value() * yk;
      const double e = std::fma(it.value(), yk, -p);
      const double s = acc[r] + p;
      const double z = s - acc[r];
      comp[r] += (acc[r] - (s - z)) + (p - z) + e;
      acc[r] = s;
    }
  }
  Vec res(n);
  for (int i = 0; i < n; ++i) res[i] = (b[i] - acc[i]) - comp[i];
  return res;
}

void ScaledLU::compute(const SpMat& A) {
  const int n = static_cast<int>(A.rows());
  original_ = A;
  original_.makeCompressed();
  row_scale_ = Vec::Ones(n);
  col_scale_ = Vec::Ones(n);
  scaled_ = original_;

  // Ruiz equilibration: a few sweeps of dividing rows and columns by the
  // square root of their max-magnitude entry.
  for (int sweep = 0; sweep < 3; ++sweep) {
    Vec rmax = Vec::Zero(n), cmax = Vec::Zero(n);
    for (int k = 0; k < scaled_.outerSize(); ++k) {
      for (SpMat::InnerIterator it(scaled_, k); it; ++it) {
        const double a = std::abs(it.value());
        rmax[it.row()] = std::max(rmax[it.row()], a);
        cmax[it.col()] = std::max(cmax[it.col()], a);
      }
    }
    Vec dr(n), dc(n);
    for (int i = 0; i < n; ++i) {
      dr[i] = rmax[i] > 0.0 ? 1.0 / std::sqrt(rmax[i]) : 1.0;
      dc[i] = cmax[i] > 0.0 ? 1.0 / std::sqrt(cmax[i]) : 1.0;
    }
    for (int k = 0; k < scaled_.outerSize(); ++k)
      for (SpMat::InnerIterator it(scaled_, k); it; ++it)
        it.valueRef() *= dr[it.row()] * dc[it.col()];
    row_scale_ = row_scale_.cwiseProduct(dr);
    col_scale_ = col_scale_.cwiseProduct(dc);
  }

  lu_.compute(scaled_);
  ok_ = (lu_.info() == Eigen::Success);
}

Vec ScaledLU::solve(const Vec& b) const {
  if (!ok_) throw SolverError("ScaledLU: factorization failed");
  auto base_solve = [this](const Vec& rhs) {
    return Vec(col_scale_.cwiseProduct(
        lu_.solve(row_scale_.cwiseProduct(rhs).eval())));
  };
  Vec y = base_solve(b);
  // fixed iteration count keeps trajectories bitwise reproducible
  for (int it = 0; it < 3; ++it)
    y += base_solve(compensated_residual(original_, y, b));
  return y;
}

}  // namespace poro
