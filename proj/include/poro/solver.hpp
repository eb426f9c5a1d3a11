// SPDX-License-Identifier: Apache-2.0

#ifndef PORO_SOLVER_HPP
#define PORO_SOLVER_HPP

#include <concepts>
#include <stdexcept>
#include <vector>

#include "poro/fine_assembly.hpp"
#include "poro/linear_solver.hpp"
#include "poro/nlmc.hpp"
#include "poro/types.hpp"

namespace poro {

/// Anything steppable: a constant left-hand matrix plus a right-hand side
/// built from the previous state. Both the fine and the coarse systems
/// model this, as do the toy systems in the tests.
template <class S>
concept TransientSystem = requires(const S& s, const Vec& v) {
  { s.lhs } -> std::convertible_to<SpMat>;
  { s.rhs(v) } -> std::convertible_to<Vec>;
};

struct SimulationState {
  int step = 0;
  Vec y;
};

/// Implicit time stepping with the factorization reused across steps.
/// Systems may provide project_step(prev, y) to repair nearly neutral
/// directions after each solve (the fine system uses it for exact mass
/// balance); toy and coarse systems step plainly.
template <TransientSystem System>
class Stepper {
 public:
  explicit Stepper(const System& sys) : sys_(sys), lu_(sys.lhs) {
    if (!lu_.ok()) throw SolverError("Stepper: singular system matrix");
  }
  SimulationState step(const SimulationState& prev) const {
    // systems exposing an increment form are stepped through it: solver
    // round-off then scales with the change, not the state magnitude
    Vec y;
    if constexpr (requires(const System& s) { s.increment_rhs(prev.y); })
      y = prev.y + lu_.solve(sys_.increment_rhs(prev.y));
    else
      y = lu_.solve(sys_.rhs(prev.y));
    if constexpr (requires(const System& s) { s.project_step(prev.y, y); })
      y = sys_.project_step(prev.y, std::move(y));
    return {prev.step + 1, std::move(y)};
  }

 private:
  const System& sys_;
  ScaledLU lu_;
};

template <TransientSystem System>
SimulationState implicit_step(const System& sys, const SimulationState& prev) {
  return Stepper<System>(sys).step(prev);
}

/// Runs n_steps implicit steps and returns the full trajectory
/// (states 1..n_steps; the initial state is not included).
template <TransientSystem System>
std::vector<SimulationState> run(const System& sys,
                                 const SimulationState& initial, int n_steps) {
  if (n_steps < 1) throw std::invalid_argument("run: n_steps must be >= 1");
  Stepper<System> stepper(sys);
  std::vector<SimulationState> traj;
  traj.reserve(n_steps);
  SimulationState state = initial;
  for (int n = 0; n < n_steps; ++n) {
    state = stepper.step(state);
    traj.push_back(state);
  }
  return traj;
}

/// Initial fine state: p_m = p_f = p0 and the displacement solving the
/// stationary mechanics equations for that pressure.
SimulationState initial_fine_state(const AssembledSystem& sys, double p0);

/// Coarse counterpart: averages p0 plus the coarse stationary mechanics
/// solution from the upscaled operator.
SimulationState initial_coarse_state(const CoarseSystem& sys, double p0);

/// Downscaling: fine fields R^T * coarse vector.
Vec reconstruct(const ProjectionOperator& P, const Vec& coarse_y);

/// Per-coarse-cell averages of the compared fields.
struct CellAverages {
  Vec p_m, u_x, u_y;
};

/// Averages of a fine state: volume-weighted cell averages for the finite
/// volume pressure, exact linear-triangle integration for displacements.
CellAverages coarse_average(const FineMesh& mesh, const CoarseGrid& cg,
                            const FieldLayout& layout, const Vec& y);

/// Averages of a coarse state are its DOF values.
CellAverages coarse_state_averages(const CoarseLayout& layout, const Vec& y);

/// Relative L2 errors in percent between two sets of cell averages. When a
/// reference field is identically zero the root-sum-square of the
/// difference is reported instead and the corresponding flag is set.
struct ErrorMetrics {
  double e_p = 0.0, e_ux = 0.0, e_uy = 0.0;  // percent
  bool absolute_p = false, absolute_ux = false, absolute_uy = false;
};

ErrorMetrics error_metrics(const CellAverages& fine_avg,
                           const CellAverages& coarse_sol);

}  // namespace poro

#endif
