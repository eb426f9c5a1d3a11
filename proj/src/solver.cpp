// SPDX-License-Identifier: Apache-2.0

#include "poro/solver.hpp"

#include <cmath>

namespace poro {

SimulationState initial_fine_state(const AssembledSystem& sys, double p0) {
  // uniform pressure with its stationary displacement response; this is
  // exactly p0 times the system's soft mode
  SimulationState st;
  st.step = 0;
  st.y = p0 * sys.soft_mode;
  return st;
}

SimulationState initial_coarse_state(const CoarseSystem& sys, double p0) {
  // uniform coarse pressures with the upscaled stationary displacement
  SimulationState st;
  st.step = 0;
  st.y = p0 * sys.soft_mode;
  return st;
}

Vec reconstruct(const ProjectionOperator& P, const Vec& coarse_y) {
  return P.R.transpose() * coarse_y;
}

CellAverages coarse_average(const FineMesh& mesh, const CoarseGrid& cg,
                            const FieldLayout& layout, const Vec& y) {
  const int nc = cg.num_cells();
  CellAverages avg;
  avg.p_m = Vec::Zero(nc);
  avg.u_x = Vec::Zero(nc);
  avg.u_y = Vec::Zero(nc);
  Vec vol = Vec::Zero(nc);

  for (int c = 0; c < mesh.num_cells(); ++c) {
    const int j = cg.fine_to_coarse[c];
    const double a = mesh.cell_area[c];
    vol[j] += a;
    avg.p_m[j] += a * y[layout.off_pm() + c];
    // exact integral of a P1 field over the triangle
    for (int v : mesh.cells[c]) {
      avg.u_x[j] += a / 3.0 * y[layout.off_ux() + v];
      avg.u_y[j] += a / 3.0 * y[layout.off_uy() + v];
    }
  }
  avg.p_m.array() /= vol.array();
  avg.u_x.array() /= vol.array();
  avg.u_y.array() /= vol.array();
  return avg;
}

CellAverages coarse_state_averages(const CoarseLayout& layout, const Vec& y) {
  CellAverages avg;
  avg.p_m = y.segment(layout.off_pm(), layout.n_cells);
  avg.u_x = y.segment(layout.off_ux(), layout.n_cells);
  avg.u_y = y.segment(layout.off_uy(), layout.n_cells);
  return avg;
}

namespace {

double relative_l2_percent(const Vec& ref, const Vec& sol, bool& absolute) {
  const double den = ref.squaredNorm();
  const double num = (ref - sol).squaredNorm();
  if (den == 0.0) {
    absolute = true;
    return std::sqrt(num) * 100.0;
  }
  absolute = false;
  return std::sqrt(num / den) * 100.0;
}

}  // namespace

ErrorMetrics error_metrics(const CellAverages& fine_avg,
                           const CellAverages& coarse_sol) {
  ErrorMetrics e;
  e.e_p = relative_l2_percent(fine_avg.p_m, coarse_sol.p_m, e.absolute_p);
  e.e_ux = relative_l2_percent(fine_avg.u_x, coarse_sol.u_x, e.absolute_ux);
  e.e_uy = relative_l2_percent(fine_avg.u_y, coarse_sol.u_y, e.absolute_uy);
  return e;
}

}  // namespace poro
