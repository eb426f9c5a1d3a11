// SPDX-License-Identifier: Apache-2.0

#include "poro/nlmc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <set>
#include <thread>

namespace poro {

namespace {

void append_block(std::vector<Triplet>& trip, const SpMat& block, int row0,
                  int col0, double scale = 1.0) {
  for (int k = 0; k < block.outerSize(); ++k)
    for (SpMat::InnerIterator it(block, k); it; ++it)
      trip.emplace_back(row0 + static_cast<int>(it.row()),
                        col0 + static_cast<int>(it.col()), scale * it.value());
}

void append_block_transposed(std::vector<Triplet>& trip, const SpMat& block,
                             int row0, int col0, double scale = 1.0) {
  for (int k = 0; k < block.outerSize(); ++k)
    for (SpMat::InnerIterator it(block, k); it; ++it)
      trip.emplace_back(row0 + static_cast<int>(it.col()),
                        col0 + static_cast<int>(it.row()), scale * it.value());
}

SpMat compose_flow_operator(const BlockOperator& b) {
  const int nc = b.n_cells, ns = b.n_segments;
  std::vector<Triplet> t;
  append_block(t, b.A_m, 0, 0);
  append_block(t, b.Q_mm, 0, 0);
  append_block(t, b.Q_mf, 0, nc);
  append_block(t, b.Q_fm, nc, 0);
  append_block(t, b.A_f, nc, nc);
  append_block(t, b.Q_ff, nc, nc);
  SpMat A(nc + ns, nc + ns);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

SpMat compose_elasticity_operator(const BlockOperator& b) {
  const int nv = b.n_vertices;
  std::vector<Triplet> t;
  append_block(t, b.D_x, 0, 0);
  append_block(t, b.D_xy, 0, nv);
  append_block_transposed(t, b.D_xy, nv, 0);
  append_block(t, b.D_y, nv, nv);
  SpMat K(2 * nv, 2 * nv);
  K.setFromTriplets(t.begin(), t.end());
  return K;
}

// Principal submatrix of A over the given global dofs (ascending); local
// index of global dof g is its position in dofs.
SpMat principal_submatrix(const SpMat& A, const std::vector<int>& dofs,
                          std::vector<int>& global_to_local) {
  global_to_local.assign(A.rows(), -1);
  for (std::size_t k = 0; k < dofs.size(); ++k)
    global_to_local[dofs[k]] = static_cast<int>(k);
  std::vector<Triplet> t;
  for (int g : dofs) {
    for (SpMat::InnerIterator it(A, g); it; ++it) {
      const int r = global_to_local[it.row()];
      if (r >= 0) t.emplace_back(r, global_to_local[g], it.value());
    }
  }
  SpMat S(static_cast<int>(dofs.size()), static_cast<int>(dofs.size()));
  S.setFromTriplets(t.begin(), t.end());
  return S;
}

}  // namespace

CoarseLayout make_coarse_layout(const CoarseGrid& cg) {
  CoarseLayout lay;
  lay.n_cells = cg.num_cells();
  lay.frac_offset.resize(lay.n_cells);
  int acc = 0;
  for (int j = 0; j < lay.n_cells; ++j) {
    lay.frac_offset[j] = acc;
    acc += cg.num_continua(j);
  }
  lay.n_pf = acc;
  return lay;
}

double continuum_length(const FractureSet& fr, const CoarseGrid& cg, int cell,
                        int continuum) {
  double len = 0.0;
  for (int l : cg.continua[cell][continuum]) len += fr.segments[l].length;
  return len;
}

NlmcBuilder::NlmcBuilder(const FineMesh& mesh, const FractureSet& fr,
                         const CoarseGrid& cg, const BlockOperator& blocks,
                         int layers)
    : mesh_(mesh), fr_(fr), cg_(cg), blocks_(blocks), layers_(layers) {
  if (layers < 0)
    throw std::invalid_argument("NlmcBuilder: layers must be >= 0");
  flow_ = compose_flow_operator(blocks);
  elast_ = compose_elasticity_operator(blocks);

  cells_by_coarse_.resize(cg.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c)
    cells_by_coarse_[cg.fine_to_coarse[c]].push_back(c);
  segs_by_coarse_.resize(cg.num_cells());
  for (int l = 0; l < fr.num_segments(); ++l)
    segs_by_coarse_[cg.segment_to_coarse[l]].push_back(l);

  vertex_cells_.resize(mesh.num_vertices());
  for (int c = 0; c < mesh.num_cells(); ++c)
    for (int v : mesh.cells[c]) vertex_cells_[v].push_back(c);

  roller_x_.assign(mesh.num_vertices(), 0);
  roller_y_.assign(mesh.num_vertices(), 0);
  for (int v : mesh.left) roller_x_[v] = 1;
  for (int v : mesh.right) roller_x_[v] = 1;
  for (int v : mesh.bottom) roller_y_[v] = 1;
  for (int v : mesh.top) roller_y_[v] = 1;
}

LocalProblem NlmcBuilder::local_problem(int cell) const {
  LocalProblem lp;
  lp.home_cell = cell;
  lp.layers = layers_;
  lp.region = oversample(cg_, cell, layers_);

  for (int j : lp.region) {
    lp.cells.insert(lp.cells.end(), cells_by_coarse_[j].begin(),
                    cells_by_coarse_[j].end());
    lp.segments.insert(lp.segments.end(), segs_by_coarse_[j].begin(),
                       segs_by_coarse_[j].end());
  }
  std::sort(lp.cells.begin(), lp.cells.end());
  std::sort(lp.segments.begin(), lp.segments.end());

  std::vector<char> in_region(mesh_.num_cells(), 0);
  for (int c : lp.cells) in_region[c] = 1;

  // Active vertices: everything touched by a region cell. Rim vertices
  // (incident to an exterior cell) are pinned to zero in both components;
  // domain-boundary vertices keep the roller pattern.
  std::set<int> touched;
  for (int c : lp.cells)
    for (int v : mesh_.cells[c]) touched.insert(v);
  for (int v : touched) {
    bool rim = false;
    for (int c : vertex_cells_[v])
      if (!in_region[c]) {
        rim = true;
        break;
      }
    lp.vertices.push_back(v);
    lp.fixed_x.push_back(rim || roller_x_[v]);
    lp.fixed_y.push_back(rim || roller_y_[v]);
  }

  // local flow operator over [cells, segments]
  const int ncg = blocks_.n_cells;
  std::vector<int> flow_dofs = lp.cells;
  for (int s : lp.segments) flow_dofs.push_back(ncg + s);
  std::vector<int> flow_map;
  lp.A_flow = principal_submatrix(flow_, flow_dofs, flow_map);

  const int nvg = blocks_.n_vertices;
  const int nvl = lp.n_vert();
  std::vector<int> elast_dofs;
  for (int v : lp.vertices) elast_dofs.push_back(v);
  for (int v : lp.vertices) elast_dofs.push_back(nvg + v);
  std::vector<int> elast_map;
  const SpMat K_full = principal_submatrix(elast_, elast_dofs, elast_map);
  std::vector<char> fixed_dof(2 * nvl, 0);
  for (int k = 0; k < nvl; ++k) {
    fixed_dof[k] = lp.fixed_x[k];
    fixed_dof[nvl + k] = lp.fixed_y[k];
  }
  std::vector<Triplet> tke;
  for (int k = 0; k < K_full.outerSize(); ++k)
    for (SpMat::InnerIterator it(K_full, k); it; ++it)
      if (!fixed_dof[it.row()] && !fixed_dof[it.col()])
        tke.emplace_back(it.row(), it.col(), it.value());
  for (int d = 0; d < 2 * nvl; ++d)
    if (fixed_dof[d]) tke.emplace_back(d, d, 1.0);
  lp.K_elast.resize(2 * nvl, 2 * nvl);
  lp.K_elast.setFromTriplets(tke.begin(), tke.end());

  // constraint rows
  const int ncl = static_cast<int>(lp.cells.size());
  const int nsl = static_cast<int>(lp.segments.size());
  std::vector<int> cell_local(mesh_.num_cells(), -1);
  for (int k = 0; k < ncl; ++k) cell_local[lp.cells[k]] = k;
  std::vector<int> seg_local(std::max(1, fr_.num_segments()), -1);
  for (int k = 0; k < nsl; ++k) seg_local[lp.segments[k]] = k;
  std::vector<int> vert_local(mesh_.num_vertices(), -1);
  for (int k = 0; k < nvl; ++k) vert_local[lp.vertices[k]] = k;

  std::vector<Triplet> cm, cf, sx, sy;
  for (std::size_t r = 0; r < lp.region.size(); ++r) {
    const int j = lp.region[r];
    lp.matrix_row_cell.push_back(j);
    if (j == cell) lp.home_matrix_row = static_cast<int>(r);
    for (int c : cells_by_coarse_[j]) {
      cm.emplace_back(static_cast<int>(r), cell_local[c], mesh_.cell_area[c]);
      for (int v : mesh_.cells[c]) {
        const int k = vert_local[v];
        const double w = mesh_.cell_area[c] / 3.0;
        if (!lp.fixed_x[k]) sx.emplace_back(static_cast<int>(r), k, w);
        if (!lp.fixed_y[k]) sy.emplace_back(static_cast<int>(r), k, w);
      }
    }
  }
  lp.home_disp_row = lp.home_matrix_row;

  for (std::size_t r = 0; r < lp.region.size(); ++r) {
    const int j = lp.region[r];
    for (int l = 0; l < cg_.num_continua(j); ++l) {
      const int row = static_cast<int>(lp.fracture_row.size());
      lp.fracture_row.emplace_back(j, l);
      if (j == cell) lp.home_fracture_rows.push_back(row);
      for (int s : cg_.continua[j][l])
        cf.emplace_back(row, ncl + seg_local[s], fr_.segments[s].length);
    }
  }

  const int nrows = static_cast<int>(lp.matrix_row_cell.size());
  lp.C_m.resize(nrows, ncl + nsl);
  lp.C_m.setFromTriplets(cm.begin(), cm.end());
  lp.C_f.resize(static_cast<int>(lp.fracture_row.size()), ncl + nsl);
  lp.C_f.setFromTriplets(cf.begin(), cf.end());
  lp.S_x.resize(nrows, nvl);
  lp.S_x.setFromTriplets(sx.begin(), sx.end());
  lp.S_y.resize(nrows, nvl);
  lp.S_y.setFromTriplets(sy.begin(), sy.end());
  return lp;
}

namespace {

// C_m acts on the matrix-cell part of the flow vector only; C_f rows hold
// segment lengths shifted past the cell block already (both were assembled
// over the combined [cells, segments] columns).
SpMat flow_saddle(const LocalProblem& lp) {
  const int n = lp.n_flow();
  const int nrows =
      static_cast<int>(lp.matrix_row_cell.size() + lp.fracture_row.size());
  std::vector<Triplet> t;
  append_block(t, lp.A_flow, 0, 0);
  append_block(t, lp.C_m, n, 0);
  append_block_transposed(t, lp.C_m, 0, n);
  const int off = n + static_cast<int>(lp.matrix_row_cell.size());
  append_block(t, lp.C_f, off, 0);
  append_block_transposed(t, lp.C_f, 0, off);
  SpMat S(n + nrows, n + nrows);
  S.setFromTriplets(t.begin(), t.end());
  return S;
}

SpMat elasticity_saddle(const LocalProblem& lp) {
  const int nv = lp.n_vert();
  const int nr = static_cast<int>(lp.matrix_row_cell.size());
  std::vector<Triplet> t;
  append_block(t, lp.K_elast, 0, 0);
  append_block(t, lp.S_x, 2 * nv, 0);
  append_block_transposed(t, lp.S_x, 0, 2 * nv);
  append_block(t, lp.S_y, 2 * nv + nr, nv);
  append_block_transposed(t, lp.S_y, nv, 2 * nv + nr);
  SpMat S(2 * nv + 2 * nr, 2 * nv + 2 * nr);
  S.setFromTriplets(t.begin(), t.end());
  return S;
}

}  // namespace

LocalFlowSolver::LocalFlowSolver(const LocalProblem& lp) : lp_(lp) {
  const SpMat saddle = flow_saddle(lp);
  n_constraints_ = static_cast<int>(saddle.rows()) - lp.n_flow();
  lu_.compute(saddle);
  if (!lu_.ok())
    throw SolverError("pressure basis: singular saddle system in cell " +
                      std::to_string(lp.home_cell));
}

PressureBasis LocalFlowSolver::solve(int target_continuum) const {
  const int n = lp_.n_flow();
  Vec rhs = Vec::Zero(n + n_constraints_);
  if (target_continuum == 0) {
    rhs[n + lp_.home_matrix_row] = 1.0;
  } else {
    const int idx = target_continuum - 1;
    if (idx < 0 || idx >= static_cast<int>(lp_.home_fracture_rows.size()))
      throw std::invalid_argument("solve_pressure_basis: bad continuum id");
    rhs[n + static_cast<int>(lp_.matrix_row_cell.size()) +
        lp_.home_fracture_rows[idx]] = 1.0;
  }
  const Vec sol = lu_.solve(rhs);
  PressureBasis basis;
  basis.psi_m = sol.head(static_cast<int>(lp_.cells.size()));
  basis.psi_f = sol.segment(static_cast<int>(lp_.cells.size()),
                            static_cast<int>(lp_.segments.size()));
  return basis;
}

LocalElasticitySolver::LocalElasticitySolver(const LocalProblem& lp)
    : lp_(lp) {
  const SpMat saddle = elasticity_saddle(lp);
  n_constraints_ = static_cast<int>(saddle.rows()) - 2 * lp.n_vert();
  lu_.compute(saddle);
  if (!lu_.ok())
    throw SolverError("displacement basis: singular saddle system in cell " +
                      std::to_string(lp.home_cell));
}

DisplacementBasis LocalElasticitySolver::solve(int component) const {
  const int nv = lp_.n_vert();
  const int nr = n_constraints_ / 2;
  Vec rhs = Vec::Zero(2 * nv + 2 * nr);
  rhs[2 * nv + component * nr + lp_.home_disp_row] = 1.0;
  const Vec sol = lu_.solve(rhs);
  DisplacementBasis basis;
  basis.psi_x = sol.head(nv);
  basis.psi_y = sol.segment(nv, nv);
  return basis;
}

PressureBasis solve_pressure_basis(const LocalProblem& lp,
                                   int target_continuum) {
  return LocalFlowSolver(lp).solve(target_continuum);
}

DisplacementBasis solve_displacement_basis(const LocalProblem& lp,
                                           int component) {
  return LocalElasticitySolver(lp).solve(component);
}

CellBases NlmcBuilder::build_cell(int cell) const {
  const LocalProblem lp = local_problem(cell);
  CellBases out;
  out.cell = cell;
  out.cells = lp.cells;
  out.segments = lp.segments;
  out.vertices = lp.vertices;

  LocalFlowSolver flow(lp);
  out.matrix_basis = flow.solve(0);
  const int mi = cg_.num_continua(cell);
  out.fracture_bases.reserve(mi);
  for (int l = 1; l <= mi; ++l) out.fracture_bases.push_back(flow.solve(l));

  LocalElasticitySolver elast(lp);
  out.x_basis = elast.solve(0);
  out.y_basis = elast.solve(1);
  return out;
}

std::vector<CellBases> NlmcBuilder::build_all(int n_threads) const {
  const int n = cg_.num_cells();
  std::vector<CellBases> bases(n);
  if (n_threads <= 0)
    n_threads = static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min(n_threads, n));

  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const int cell = next.fetch_add(1);
      if (cell >= n) return;
      try {
        bases[cell] = build_cell(cell);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  return bases;
}

ProjectionOperator assemble_projection(const FineMesh& mesh,
                                       const FractureSet& fr,
                                       const CoarseGrid& cg,
                                       const std::vector<CellBases>& bases) {
  if (static_cast<int>(bases.size()) != cg.num_cells())
    throw std::invalid_argument("assemble_projection: missing bases");

  ProjectionOperator P;
  P.layout = make_coarse_layout(cg);
  P.fine.n_pm = mesh.num_cells();
  P.fine.n_pf = fr.num_segments();
  P.fine.n_v = mesh.num_vertices();

  const int opm = P.fine.off_pm(), opf = P.fine.off_pf();
  const int oux = P.fine.off_ux(), ouy = P.fine.off_uy();
  const double area = cg.cell_area();

  std::vector<Triplet> t;
  for (int i = 0; i < cg.num_cells(); ++i) {
    const CellBases& cb = bases[i];
    if (cb.cell != i)
      throw std::invalid_argument("assemble_projection: bases out of order");
    if (static_cast<int>(cb.fracture_bases.size()) != cg.num_continua(i))
      throw std::invalid_argument(
          "assemble_projection: missing fracture basis");

    // Rows carry the basis scaled by its home-continuum measure; the coarse
    // unknowns are then cell averages and R^T reproduces them exactly.
    auto add_pressure = [&](int row, const PressureBasis& b, double scale) {
      for (std::size_t k = 0; k < cb.cells.size(); ++k)
        t.emplace_back(row, opm + cb.cells[k],
                       scale * b.psi_m[static_cast<int>(k)]);
      for (std::size_t k = 0; k < cb.segments.size(); ++k)
        t.emplace_back(row, opf + cb.segments[k],
                       scale * b.psi_f[static_cast<int>(k)]);
    };
    add_pressure(P.layout.off_pm() + i, cb.matrix_basis, area);
    for (int l = 0; l < cg.num_continua(i); ++l)
      add_pressure(P.layout.pf_dof(i, l), cb.fracture_bases[l],
                   continuum_length(fr, cg, i, l));

    auto add_disp = [&](int row, const DisplacementBasis& b) {
      for (std::size_t k = 0; k < cb.vertices.size(); ++k) {
        t.emplace_back(row, oux + cb.vertices[k],
                       area * b.psi_x[static_cast<int>(k)]);
        t.emplace_back(row, ouy + cb.vertices[k],
                       area * b.psi_y[static_cast<int>(k)]);
      }
    };
    add_disp(P.layout.off_ux() + i, cb.x_basis);
    add_disp(P.layout.off_uy() + i, cb.y_basis);
  }

  P.R.resize(P.layout.size(), P.fine.size());
  P.R.setFromTriplets(t.begin(), t.end());
  return P;
}

CoarseSystem upscale(const AssembledSystem& fine, const ProjectionOperator& P,
                     const FractureSet& fr, const CoarseGrid& cg,
                     const MaterialParams& mp) {
  CoarseSystem cs;
  cs.layout = P.layout;
  cs.tau = fine.tau;

  const SpMat Rt = SpMat(P.R.transpose());
  cs.A_bar = SpMat(P.R * fine.A) * Rt;
  cs.F_src_bar = P.R * fine.F_src;

  // The off-diagonal flow entries act as coarse transmissibilities between
  // continuum averages; rebuilding the flow diagonal as their negated sum
  // makes the coarse operator exactly conservative, which finite
  // oversampling alone only approximates.
  {
    const int np = cs.layout.off_ux();
    std::vector<double> diag(np, 0.0);
    std::vector<Triplet> rebuilt;
    rebuilt.reserve(cs.A_bar.nonZeros());
    for (int k = 0; k < cs.A_bar.outerSize(); ++k) {
      for (SpMat::InnerIterator it(cs.A_bar, k); it; ++it) {
        const int r = static_cast<int>(it.row());
        const int c = static_cast<int>(it.col());
        if (r < np && c < np) {
          if (r == c) continue;  // recomputed below
          diag[r] -= it.value();
        }
        rebuilt.emplace_back(r, c, it.value());
      }
    }
    for (int r = 0; r < np; ++r) rebuilt.emplace_back(r, r, diag[r]);
    SpMat A2(cs.layout.size(), cs.layout.size());
    A2.setFromTriplets(rebuilt.begin(), rebuilt.end());
    cs.A_bar = std::move(A2);
  }

  cs.M_bar = Vec::Zero(cs.layout.size());
  for (int i = 0; i < cg.num_cells(); ++i) {
    cs.M_bar[cs.layout.off_pm() + i] = mp.a_m * cg.cell_area();
    for (int l = 0; l < cg.num_continua(i); ++l)
      cs.M_bar[cs.layout.pf_dof(i, l)] = mp.a_f * continuum_length(fr, cg, i, l);
  }

  // Previous-state operator: the mass term uses the same directly
  // assembled diagonal as the left side (projecting the fine mass instead
  // would mismatch it and distort the growth rate), while the coupling to
  // the previous displacement passes through the projection.
  const FieldLayout& fl = fine.layout;
  std::vector<Triplet> tp;
  append_block(tp, fine.blocks.B_mx, fl.off_pm(), fl.off_ux(), 1.0 / fine.tau);
  append_block(tp, fine.blocks.B_my, fl.off_pm(), fl.off_uy(), 1.0 / fine.tau);
  SpMat prev_op(fl.size(), fl.size());
  prev_op.setFromTriplets(tp.begin(), tp.end());
  cs.G = SpMat(P.R * prev_op) * Rt;
  std::vector<Triplet> tgm;
  for (int i = 0; i < cs.layout.size(); ++i)
    if (cs.M_bar[i] != 0.0) tgm.emplace_back(i, i, cs.M_bar[i] / cs.tau);
  SpMat Gm(cs.layout.size(), cs.layout.size());
  Gm.setFromTriplets(tgm.begin(), tgm.end());
  cs.G = cs.G + Gm;

  std::vector<Triplet> tm;
  for (int i = 0; i < cs.layout.size(); ++i)
    if (cs.M_bar[i] != 0.0) tm.emplace_back(i, i, cs.M_bar[i] / cs.tau);
  SpMat Mtau(cs.layout.size(), cs.layout.size());
  Mtau.setFromTriplets(tm.begin(), tm.end());
  cs.lhs = cs.A_bar + Mtau;

  // coarse soft mode: unit pressures plus the static displacement they load
  const int np = cs.layout.off_ux();
  const int nu = cs.layout.size() - np;
  Eigen::MatrixXd Auu = Eigen::MatrixXd::Zero(nu, nu);
  Eigen::MatrixXd Aup = Eigen::MatrixXd::Zero(nu, np);
  for (int k = 0; k < cs.A_bar.outerSize(); ++k) {
    for (SpMat::InnerIterator it(cs.A_bar, k); it; ++it) {
      if (it.row() < np) continue;
      if (it.col() < np)
        Aup(it.row() - np, it.col()) = it.value();
      else
        Auu(it.row() - np, it.col() - np) = it.value();
    }
  }
  cs.soft_mode = Vec::Zero(cs.layout.size());
  cs.soft_mode.head(np).setConstant(1.0);
  Eigen::PartialPivLU<Eigen::MatrixXd> ulu(Auu);
  cs.soft_mode.tail(nu) = ulu.solve((-Aup * cs.soft_mode.head(np)).eval());

  cs.cons_weights = P.R * fine.cons_weights;
  cs.soft_weight = cs.cons_weights.dot(cs.soft_mode);
  cs.source_rate = fine.source_rate;
  return cs;
}

Vec CoarseSystem::project_step(const Vec& prev, Vec y) const {
  if (soft_weight == 0.0) return y;
  const double target = cons_weights.dot(prev) + tau * source_rate;
  const double defect = target - cons_weights.dot(y);
  y += (defect / soft_weight) * soft_mode;
  return y;
}

}  // namespace poro
