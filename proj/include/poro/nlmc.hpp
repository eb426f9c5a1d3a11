// SPDX-License-Identifier: Apache-2.0

#ifndef PORO_NLMC_HPP
#define PORO_NLMC_HPP

#include <utility>
#include <vector>

#include "poro/fine_assembly.hpp"
#include "poro/geometry.hpp"
#include "poro/linear_solver.hpp"
#include "poro/types.hpp"

namespace poro {

/// Restriction of the fine operators to an oversampled region around one
/// coarse cell, together with the integral constraint matrices used for
/// basis construction. Flow unknowns are ordered [cells, segments] in the
/// local index lists; displacement unknowns are [u_x, u_y] over the free
/// (non-boundary) vertices.
struct LocalProblem {
  int home_cell = -1;
  int layers = 0;
  std::vector<int> region;      // coarse cell ids, ascending
  std::vector<int> cells;       // global fine cell ids, ascending
  std::vector<int> segments;    // global segment ids, ascending
  // Displacement unknowns live on the region vertices. Vertices on the
  // artificial rim (incident to cells outside the region) take the zero
  // value in both components; vertices on the domain boundary keep the
  // physical roller constraints (fixed normal component only). Fixed
  // components stay in the local numbering as pinned unknowns.
  std::vector<int> vertices;    // active vertex ids, ascending
  std::vector<char> fixed_x, fixed_y;  // per active vertex

  SpMat A_flow;   // [[A_m+Q_mm, Q_mf],[Q_fm, A_f+Q_ff]] principal submatrix
  SpMat K_elast;  // elasticity principal submatrix, fixed dofs eliminated
  SpMat C_m;      // one row per coarse cell in the region (cell volumes)
  SpMat C_f;      // one row per (coarse cell, local continuum)
  SpMat S_x, S_y; // hat-function integral weights per coarse cell row

  std::vector<int> matrix_row_cell;              // coarse cell per C_m row
  std::vector<std::pair<int, int>> fracture_row; // (coarse cell, continuum)
  int home_matrix_row = -1;
  std::vector<int> home_fracture_rows;
  int home_disp_row = -1;

  int n_flow() const {
    return static_cast<int>(cells.size() + segments.size());
  }
  int n_vert() const { return static_cast<int>(vertices.size()); }
};

/// A constrained-minimization basis for the flow continua, stored over the
/// local index lists of the problem that produced it.
struct PressureBasis {
  Vec psi_m;  // over LocalProblem::cells
  Vec psi_f;  // over LocalProblem::segments
};

struct DisplacementBasis {
  Vec psi_x, psi_y;  // over LocalProblem::vertices
};

/// All bases owned by one coarse cell plus the support index lists needed
/// to scatter them to global vectors.
struct CellBases {
  int cell = -1;
  std::vector<int> cells, segments, vertices;
  PressureBasis matrix_basis;
  std::vector<PressureBasis> fracture_bases;  // one per local continuum
  DisplacementBasis x_basis, y_basis;
};

/// Coarse DOF bookkeeping: per coarse cell one matrix pressure, one
/// fracture pressure per local continuum, and the two displacement averages.
struct CoarseLayout {
  int n_cells = 0;
  std::vector<int> frac_offset;  // prefix sums of continuum counts
  int n_pf = 0;

  int off_pm() const { return 0; }
  int off_pf() const { return n_cells; }
  int off_ux() const { return n_cells + n_pf; }
  int off_uy() const { return n_cells + n_pf + n_cells; }
  int size() const { return 3 * n_cells + n_pf; }
  int pf_dof(int cell, int continuum) const {
    return off_pf() + frac_offset[cell] + continuum;
  }
};

CoarseLayout make_coarse_layout(const CoarseGrid& cg);

/// The multiscale projection. Row i of R is the i-th coarse DOF's basis
/// function over the fine unknowns, scaled by the measure of its home
/// continuum so that coarse DOFs act as cell averages; columns follow the
/// fine (p_m, p_f, u_x, u_y) layout.
struct ProjectionOperator {
  SpMat R;
  CoarseLayout layout;
  FieldLayout fine;
};

/// Builds local problems and basis functions for every coarse cell.
class NlmcBuilder {
 public:
  NlmcBuilder(const FineMesh& mesh, const FractureSet& fr,
              const CoarseGrid& cg, const BlockOperator& blocks, int layers);

  LocalProblem local_problem(int cell) const;
  CellBases build_cell(int cell) const;
  /// Basis construction for all cells; local solves run on n_threads
  /// (0 = hardware concurrency) and merge deterministically.
  std::vector<CellBases> build_all(int n_threads = 0) const;

 private:
  const FineMesh& mesh_;
  const FractureSet& fr_;
  const CoarseGrid& cg_;
  const BlockOperator& blocks_;
  int layers_;
  SpMat flow_;                    // global flow operator
  SpMat elast_;                   // global elasticity operator
  std::vector<std::vector<int>> cells_by_coarse_, segs_by_coarse_;
  std::vector<std::vector<int>> vertex_cells_;  // incident cells per vertex
  std::vector<char> roller_x_, roller_y_;       // global roller constraints
};

/// Solves the flow saddle system of a local problem for one target
/// continuum: 0 selects the matrix of the home cell, l >= 1 its l-th local
/// fracture network. One factorization serves all targets of the cell.
class LocalFlowSolver {
 public:
  explicit LocalFlowSolver(const LocalProblem& lp);
  PressureBasis solve(int target_continuum) const;

 private:
  const LocalProblem& lp_;
  ScaledLU lu_;
  int n_constraints_ = 0;
};

class LocalElasticitySolver {
 public:
  explicit LocalElasticitySolver(const LocalProblem& lp);
  DisplacementBasis solve(int component) const;  // 0 = X, 1 = Y

 private:
  const LocalProblem& lp_;
  ScaledLU lu_;
  int n_constraints_ = 0;
};

PressureBasis solve_pressure_basis(const LocalProblem& lp,
                                   int target_continuum);
DisplacementBasis solve_displacement_basis(const LocalProblem& lp,
                                           int component);

/// Total length of local fracture network (cell, continuum).
double continuum_length(const FractureSet& fr, const CoarseGrid& cg, int cell,
                        int continuum);

ProjectionOperator assemble_projection(const FineMesh& mesh,
                                       const FractureSet& fr,
                                       const CoarseGrid& cg,
                                       const std::vector<CellBases>& bases);

/// Upscaled transient system over the coarse DOFs: A_bar = R A R^T with the
/// fine composed operator, a directly assembled diagonal mass, and a
/// right-hand-side operator G = R P R^T matching the fine previous-state
/// dependence.
struct CoarseSystem {
  CoarseLayout layout;
  double tau = 0.0;
  SpMat A_bar;
  Vec M_bar;
  SpMat lhs;
  Vec F_src_bar;
  SpMat G;

  // Truncated bases leave the projected operator slightly non-conservative
  // on global constants; as in the fine stepper, the reconstructed fluid
  // content is restored along the coarse soft mode after every solve.
  Vec soft_mode;     // unit pressures and their static displacement response
  Vec cons_weights;  // projected fine mass-balance functional
  double soft_weight = 0.0;
  double source_rate = 0.0;

  Vec rhs(const Vec& prev) const { return F_src_bar + G * prev; }
  Vec project_step(const Vec& prev, Vec y) const;
};

CoarseSystem upscale(const AssembledSystem& fine, const ProjectionOperator& P,
                     const FractureSet& fr, const CoarseGrid& cg,
                     const MaterialParams& mp);

}  // namespace poro

#endif
