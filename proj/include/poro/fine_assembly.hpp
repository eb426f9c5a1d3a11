// SPDX-License-Identifier: Apache-2.0

#ifndef PORO_FINE_ASSEMBLY_HPP
#define PORO_FINE_ASSEMBLY_HPP

#include <vector>

#include "poro/coefficients.hpp"
#include "poro/geometry.hpp"
#include "poro/types.hpp"

namespace poro {

/// TPFA matrix over fine cells: T_ij = b_m |E_ij| / Delta_ij on every
/// interior face, with natural no-flow boundaries.
SpMat tpfa_matrix(const FineMesh& mesh, double b_m);

/// TPFA matrix over fracture segments: W_ln = b_f / Delta_ln per link.
SpMat fracture_tpfa(const FractureSet& fr, double b_f);

struct ExchangeBlocks {
  SpMat Q_mm, Q_mf, Q_fm, Q_ff;
};

/// Matrix-fracture transfer: each segment l hosted in cell i contributes
/// beta to both diagonals and -beta to the cross entries.
ExchangeBlocks exchange_matrix(const FineMesh& mesh, const FractureSet& fr,
                               double beta);

struct ElasticityBlocks {
  SpMat D_x, D_y, D_xy;  // full operator is [[D_x, D_xy], [D_xy^T, D_y]]
};

/// Linear-triangle stiffness of lambda*div(u)div(v) + 2*mu*eps(u):eps(v),
/// split into component blocks.
ElasticityBlocks elasticity_stiffness(const FineMesh& mesh, double mu,
                                      double lambda);

struct BiotBlocks {
  SpMat B_mx, B_my;  // cells x vertices
};

/// Biot coupling: entry (i, j) = alpha * integral over cell i of the x
/// (resp. y) derivative of hat function j.
BiotBlocks biot_coupling(const FineMesh& mesh, double alpha);

struct FractureForceBlocks {
  SpMat B_fx, B_fy;  // segments x vertices
};

/// Fracture pressure load on the displacement equations: entry (l, j) =
/// -integral over segment l of n_x psi_j (resp. n_y), by 2-point Gauss.
/// The segment normal is its direction rotated 90 degrees counterclockwise.
FractureForceBlocks fracture_force_coupling(const FineMesh& mesh,
                                            const FractureSet& fr);

/// All sparse blocks of the fine-grid operator over (p_m, p_f, u_x, u_y).
struct BlockOperator {
  SpMat A_m, A_f;
  SpMat Q_mm, Q_mf, Q_fm, Q_ff;
  SpMat D_x, D_y, D_xy;
  SpMat B_mx, B_my, B_fx, B_fy;
  Vec M_m, M_f;  // diagonal mass entries a_m|cell|, a_f|segment|
  int n_cells = 0, n_segments = 0, n_vertices = 0;
};

BlockOperator assemble_blocks(const FineMesh& mesh, const FractureSet& fr,
                              const MaterialParams& mp);

struct DisplacementConstraint {
  int vertex = -1;
  int component = 0;  // 0 = x, 1 = y
  double value = 0.0;
};

/// Roller conditions: u_x = 0 on left/right, u_y = 0 on bottom/top.
std::vector<DisplacementConstraint> roller_constraints(const FineMesh& mesh);

/// Stationary mechanics solve for given pressures: [[D_x,D_xy],[D_xy^T,D_y]]
/// u = B^T p with the displacement constraints eliminated; returns the
/// stacked (u_x, u_y) vector.
Vec steady_displacement(const BlockOperator& blocks,
                        const std::vector<DisplacementConstraint>& dirichlet,
                        const Vec& pm, const Vec& pf);

/// Index bookkeeping for the stacked unknown vector (p_m, p_f, u_x, u_y).
struct FieldLayout {
  int n_pm = 0, n_pf = 0, n_v = 0;
  int off_pm() const { return 0; }
  int off_pf() const { return n_pm; }
  int off_ux() const { return n_pm + n_pf; }
  int off_uy() const { return n_pm + n_pf + n_v; }
  int size() const { return n_pm + n_pf + 2 * n_v; }
};

/// The composed implicit-step system (1/tau M + A) y = F(prev) with the
/// displacement constraints eliminated symmetrically from the left side.
struct AssembledSystem {
  BlockOperator blocks;
  FieldLayout layout;
  double tau = 0.0;
  SpMat lhs;       // (1/tau) M + A, constraints applied
  SpMat A;         // composed operator without mass, unconstrained
  Vec F_src;       // stationary source part of the right-hand side
  std::vector<DisplacementConstraint> dirichlet;
  std::vector<int> constrained_dofs;  // global dof per constraint
  Vec bc_correction;                  // load correction from eliminated columns

  // The storage coefficients are tiny against the transmissibilities, so
  // the global constant-pressure mode (with its static displacement
  // response) is nearly neutral and collects round-off drift over the time
  // loop. soft_mode spans that direction; project_step restores the exact
  // discrete mass balance along it after each solve.
  Vec soft_mode;
  Vec cons_weights;        // mass-balance functional: C(y) = cons_weights . y
  double soft_weight = 0.0;
  double source_rate = 0.0;  // flow-row sum of F_src

  // Increment stepping: lhs*(y - prev) = F - G*prev, equivalent to
  // lhs*y = rhs(prev) but with the stationary residual of the flow rows
  // evaluated in flux form (pairwise differences), where constant states
  // cancel exactly instead of leaving matrix-rounding residues that the
  // weak matrix-fracture exchange would amplify. G_mech holds only the
  // displacement rows, applied as a compensated matvec.
  struct FluxEntry {
    int a = -1, b = -1;
    double coef = 0.0;
  };
  std::vector<FluxEntry> flux_faces;      // pm row pairs (T_ij)
  std::vector<FluxEntry> flux_links;      // pf row pairs (W_ln)
  std::vector<FluxEntry> flux_exchange;   // (pm cell, pf segment, beta)
  SpMat G_mech;

  /// Right-hand side before constraint application.
  Vec rhs_raw(const Vec& prev) const;
  /// Right-hand side with constrained entries pinned to their values.
  Vec rhs(const Vec& prev) const;
  /// Compensated right-hand side of the increment system.
  Vec increment_rhs(const Vec& prev) const;
  /// Post-solve mass-balance correction along the soft mode.
  Vec project_step(const Vec& prev, Vec y) const;
};

/// Builds the fine system. Sources inject mp.q per listed coarse cell,
/// distributed over its fine cells with volume weights.
AssembledSystem assemble_system(const FineMesh& mesh, const FractureSet& fr,
                                const CoarseGrid& cg, const MaterialParams& mp,
                                double tau,
                                std::vector<DisplacementConstraint> dirichlet,
                                const std::vector<int>& source_cells);

}  // namespace poro

#endif
