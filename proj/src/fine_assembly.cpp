// SPDX-License-Identifier: Apache-2.0

#include "poro/fine_assembly.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "poro/linear_solver.hpp"

namespace poro {

SpMat tpfa_matrix(const FineMesh& mesh, double b_m) {
  std::vector<Triplet> trip;
  trip.reserve(4 * mesh.faces.size());
  for (const Face& f : mesh.faces) {
    const double T = b_m * f.interface_length / f.center_distance;
    trip.emplace_back(f.cell_a, f.cell_a, T);
    trip.emplace_back(f.cell_b, f.cell_b, T);
    trip.emplace_back(f.cell_a, f.cell_b, -T);
    trip.emplace_back(f.cell_b, f.cell_a, -T);
  }
  SpMat A(mesh.num_cells(), mesh.num_cells());
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

SpMat fracture_tpfa(const FractureSet& fr, double b_f) {
  std::vector<Triplet> trip;
  trip.reserve(4 * fr.adjacency.size());
  for (const SegmentLink& link : fr.adjacency) {
    if (link.center_distance <= 0.0)
      throw std::runtime_error("fracture_tpfa: degenerate segment link");
    const double W = b_f / link.center_distance;
    trip.emplace_back(link.l, link.l, W);
    trip.emplace_back(link.n, link.n, W);
    trip.emplace_back(link.l, link.n, -W);
    trip.emplace_back(link.n, link.l, -W);
  }
  SpMat A(fr.num_segments(), fr.num_segments());
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

ExchangeBlocks exchange_matrix(const FineMesh& mesh, const FractureSet& fr,
                               double beta) {
  const int nc = mesh.num_cells();
  const int ns = fr.num_segments();
  std::vector<Triplet> mm, mf, fm, ff;
  for (int l = 0; l < ns; ++l) {
    const int i = fr.segments[l].host_cell;
    mm.emplace_back(i, i, beta);
    ff.emplace_back(l, l, beta);
    mf.emplace_back(i, l, -beta);
    fm.emplace_back(l, i, -beta);
  }
  ExchangeBlocks q;
  q.Q_mm.resize(nc, nc);
  q.Q_mf.resize(nc, ns);
  q.Q_fm.resize(ns, nc);
  q.Q_ff.resize(ns, ns);
  q.Q_mm.setFromTriplets(mm.begin(), mm.end());
  q.Q_mf.setFromTriplets(mf.begin(), mf.end());
  q.Q_fm.setFromTriplets(fm.begin(), fm.end());
  q.Q_ff.setFromTriplets(ff.begin(), ff.end());
  return q;
}

namespace {

// Constant hat-function gradients on a triangle: grad psi_k = (bx[k], by[k]).
struct P1Gradients {
  double area;
  std::array<double, 3> bx, by;
};

P1Gradients p1_gradients(const FineMesh& mesh, int cell) {
  const auto& c = mesh.cells[cell];
  const Vec2& p0 = mesh.vertices[c[0]];
  const Vec2& p1 = mesh.vertices[c[1]];
  const Vec2& p2 = mesh.vertices[c[2]];
  const double det = (p1.x() - p0.x()) * (p2.y() - p0.y()) -
                     (p2.x() - p0.x()) * (p1.y() - p0.y());
  if (det <= 0.0)
    throw std::runtime_error("degenerate triangle in elasticity assembly");
  P1Gradients g;
  g.area = 0.5 * det;
  g.bx = {(p1.y() - p2.y()) / det, (p2.y() - p0.y()) / det,
          (p0.y() - p1.y()) / det};
  g.by = {(p2.x() - p1.x()) / det, (p0.x() - p2.x()) / det,
          (p1.x() - p0.x()) / det};
  return g;
}

}  // namespace

ElasticityBlocks elasticity_stiffness(const FineMesh& mesh, double mu,
                                      double lambda) {
  const int nv = mesh.num_vertices();
  std::vector<Triplet> tx, ty, txy;
  tx.reserve(9 * mesh.num_cells());
  ty.reserve(9 * mesh.num_cells());
  txy.reserve(9 * mesh.num_cells());
  for (int cell = 0; cell < mesh.num_cells(); ++cell) {
    const P1Gradients g = p1_gradients(mesh, cell);
    const auto& c = mesh.cells[cell];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double dx = g.area * ((lambda + 2.0 * mu) * g.bx[i] * g.bx[j] +
                                    mu * g.by[i] * g.by[j]);
        const double dy = g.area * ((lambda + 2.0 * mu) * g.by[i] * g.by[j] +
                                    mu * g.bx[i] * g.bx[j]);
        const double dxy =
            g.area * (lambda * g.bx[i] * g.by[j] + mu * g.by[i] * g.bx[j]);
        tx.emplace_back(c[i], c[j], dx);
        ty.emplace_back(c[i], c[j], dy);
        txy.emplace_back(c[i], c[j], dxy);
      }
    }
  }
  ElasticityBlocks d;
  d.D_x.resize(nv, nv);
  d.D_y.resize(nv, nv);
  d.D_xy.resize(nv, nv);
  d.D_x.setFromTriplets(tx.begin(), tx.end());
  d.D_y.setFromTriplets(ty.begin(), ty.end());
  d.D_xy.setFromTriplets(txy.begin(), txy.end());
  return d;
}

BiotBlocks biot_coupling(const FineMesh& mesh, double alpha) {
  const int nv = mesh.num_vertices();
  std::vector<Triplet> bx, by;
  bx.reserve(3 * mesh.num_cells());
  by.reserve(3 * mesh.num_cells());
  for (int cell = 0; cell < mesh.num_cells(); ++cell) {
    const P1Gradients g = p1_gradients(mesh, cell);
    const auto& c = mesh.cells[cell];
    for (int j = 0; j < 3; ++j) {
      bx.emplace_back(cell, c[j], alpha * g.area * g.bx[j]);
      by.emplace_back(cell, c[j], alpha * g.area * g.by[j]);
    }
  }
  BiotBlocks b;
  b.B_mx.resize(mesh.num_cells(), nv);
  b.B_my.resize(mesh.num_cells(), nv);
  b.B_mx.setFromTriplets(bx.begin(), bx.end());
  b.B_my.setFromTriplets(by.begin(), by.end());
  return b;
}

FractureForceBlocks fracture_force_coupling(const FineMesh& mesh,
                                            const FractureSet& fr) {
  const int nv = mesh.num_vertices();
  std::vector<Triplet> fx, fy;
  const double gp = 0.5 / std::sqrt(3.0);
  for (int l = 0; l < fr.num_segments(); ++l) {
    const Segment& seg = fr.segments[l];
    const Vec2 dir = (seg.b - seg.a).normalized();
    const Vec2 n(-dir.y(), dir.x());
    const int cell = seg.host_cell;
    const P1Gradients g = p1_gradients(mesh, cell);
    const auto& c = mesh.cells[cell];
    const Vec2 gauss[2] = {seg.a + (0.5 - gp) * (seg.b - seg.a),
                           seg.a + (0.5 + gp) * (seg.b - seg.a)};
    for (int j = 0; j < 3; ++j) {
      // hat value psi_j(x) = psi_j(center) + grad psi_j . (x - center) with
      // the P1 representation psi_j = a_j + bx_j x + by_j y on the cell
      const Vec2& pj = mesh.vertices[c[j]];
      double w = 0.0;
      for (const Vec2& x : gauss) {
        const double psi =
            1.0 + g.bx[j] * (x.x() - pj.x()) + g.by[j] * (x.y() - pj.y());
        w += 0.5 * seg.length * psi;
      }
      if (n.x() * w != 0.0) fx.emplace_back(l, c[j], -n.x() * w);
      if (n.y() * w != 0.0) fy.emplace_back(l, c[j], -n.y() * w);
    }
  }
  FractureForceBlocks b;
  b.B_fx.resize(fr.num_segments(), nv);
  b.B_fy.resize(fr.num_segments(), nv);
  b.B_fx.setFromTriplets(fx.begin(), fx.end());
  b.B_fy.setFromTriplets(fy.begin(), fy.end());
  return b;
}

BlockOperator assemble_blocks(const FineMesh& mesh, const FractureSet& fr,
                              const MaterialParams& mp) {
  BlockOperator b;
  b.n_cells = mesh.num_cells();
  b.n_segments = fr.num_segments();
  b.n_vertices = mesh.num_vertices();

  b.A_m = tpfa_matrix(mesh, mp.b_m);
  b.A_f = fracture_tpfa(fr, mp.b_f);
  ExchangeBlocks q = exchange_matrix(mesh, fr, mp.beta);
  b.Q_mm = std::move(q.Q_mm);
  b.Q_mf = std::move(q.Q_mf);
  b.Q_fm = std::move(q.Q_fm);
  b.Q_ff = std::move(q.Q_ff);

  const auto [mu, lambda] = lame(mp.E, mp.nu);
  ElasticityBlocks d = elasticity_stiffness(mesh, mu, lambda);
  b.D_x = std::move(d.D_x);
  b.D_y = std::move(d.D_y);
  b.D_xy = std::move(d.D_xy);

  BiotBlocks bm = biot_coupling(mesh, mp.alpha);
  b.B_mx = std::move(bm.B_mx);
  b.B_my = std::move(bm.B_my);
  FractureForceBlocks bf = fracture_force_coupling(mesh, fr);
  b.B_fx = std::move(bf.B_fx);
  b.B_fy = std::move(bf.B_fy);

  b.M_m.resize(b.n_cells);
  for (int i = 0; i < b.n_cells; ++i) b.M_m[i] = mp.a_m * mesh.cell_area[i];
  b.M_f.resize(b.n_segments);
  for (int l = 0; l < b.n_segments; ++l)
    b.M_f[l] = mp.a_f * fr.segments[l].length;
  return b;
}

std::vector<DisplacementConstraint> roller_constraints(const FineMesh& mesh) {
  std::vector<DisplacementConstraint> out;
  for (int v : mesh.left) out.push_back({v, 0, 0.0});
  for (int v : mesh.right) out.push_back({v, 0, 0.0});
  for (int v : mesh.bottom) out.push_back({v, 1, 0.0});
  for (int v : mesh.top) out.push_back({v, 1, 0.0});
  return out;
}

namespace {

void append_block(std::vector<Triplet>& trip, const SpMat& block, int row0,
                  int col0, double scale = 1.0) {
  for (int k = 0; k < block.outerSize(); ++k)
    for (SpMat::InnerIterator it(block, k); it; ++it)
      trip.emplace_back(row0 + static_cast<int>(it.row()),
                        col0 + static_cast<int>(it.col()), scale * it.value());
}

void append_block_transposed(std::vector<Triplet>& trip, const SpMat& block,
                             int row0, int col0, double scale) {
  for (int k = 0; k < block.outerSize(); ++k)
    for (SpMat::InnerIterator it(block, k); it; ++it)
      trip.emplace_back(row0 + static_cast<int>(it.col()),
                        col0 + static_cast<int>(it.row()), scale * it.value());
}

}  // namespace

Vec steady_displacement(const BlockOperator& blocks,
                        const std::vector<DisplacementConstraint>& dirichlet,
                        const Vec& pm, const Vec& pf) {
  const int nv = blocks.n_vertices;
  std::vector<char> fixed(2 * nv, 0);
  std::vector<double> fixed_value(2 * nv, 0.0);
  for (const auto& d : dirichlet) {
    const int dof = d.component * nv + d.vertex;
    fixed[dof] = 1;
    fixed_value[dof] = d.value;
  }

  std::vector<Triplet> tk;
  append_block(tk, blocks.D_x, 0, 0);
  append_block(tk, blocks.D_xy, 0, nv);
  append_block_transposed(tk, blocks.D_xy, nv, 0, 1.0);
  append_block(tk, blocks.D_y, nv, nv);

  Vec f(2 * nv);
  f.head(nv) = blocks.B_mx.transpose() * pm + blocks.B_fx.transpose() * pf;
  f.tail(nv) = blocks.B_my.transpose() * pm + blocks.B_fy.transpose() * pf;

  std::vector<Triplet> tke;
  tke.reserve(tk.size());
  for (const Triplet& t : tk) {
    if (fixed[t.row()]) continue;
    if (fixed[t.col()]) {
      f[t.row()] -= t.value() * fixed_value[t.col()];
      continue;
    }
    tke.push_back(t);
  }
  for (int d = 0; d < 2 * nv; ++d)
    if (fixed[d]) {
      tke.emplace_back(d, d, 1.0);
      f[d] = fixed_value[d];
    }
  SpMat K(2 * nv, 2 * nv);
  K.setFromTriplets(tke.begin(), tke.end());

  ScaledLU lu(K);
  if (!lu.ok())
    throw SolverError("steady_displacement: singular mechanics system");
  return lu.solve(f);
}

Vec AssembledSystem::rhs_raw(const Vec& prev) const {
  const int opm = layout.off_pm(), opf = layout.off_pf();
  const int oux = layout.off_ux(), ouy = layout.off_uy();
  Vec f = F_src;
  f.segment(opm, layout.n_pm) +=
      (blocks.M_m.array() / tau * prev.segment(opm, layout.n_pm).array())
          .matrix() +
      (blocks.B_mx * prev.segment(oux, layout.n_v)) / tau +
      (blocks.B_my * prev.segment(ouy, layout.n_v)) / tau;
  if (layout.n_pf > 0)
    f.segment(opf, layout.n_pf) +=
        (blocks.M_f.array() / tau * prev.segment(opf, layout.n_pf).array())
            .matrix();
  return f;
}

Vec AssembledSystem::rhs(const Vec& prev) const {
  Vec f = rhs_raw(prev);
  f -= bc_correction;
  for (std::size_t k = 0; k < dirichlet.size(); ++k)
    f[constrained_dofs[k]] = dirichlet[k].value;
  return f;
}

Vec AssembledSystem::increment_rhs(const Vec& prev) const {
  Vec f = F_src - bc_correction;
  Vec r = compensated_residual(G_mech, prev, f);
  const int opm = layout.off_pm(), opf = layout.off_pf();
  for (const FluxEntry& e : flux_faces) {
    const double d = e.coef * (prev[opm + e.a] - prev[opm + e.b]);
    r[opm + e.a] -= d;
    r[opm + e.b] += d;
  }
  for (const FluxEntry& e : flux_links) {
    const double d = e.coef * (prev[opf + e.a] - prev[opf + e.b]);
    r[opf + e.a] -= d;
    r[opf + e.b] += d;
  }
  for (const FluxEntry& e : flux_exchange) {
    const double d = e.coef * (prev[opm + e.a] - prev[opf + e.b]);
    r[opm + e.a] -= d;
    r[opf + e.b] += d;
  }
  for (std::size_t k = 0; k < dirichlet.size(); ++k)
    r[constrained_dofs[k]] = dirichlet[k].value - prev[constrained_dofs[k]];
  return r;
}

Vec AssembledSystem::project_step(const Vec& prev, Vec y) const {
  // summing the flow rows of (1/tau M + A) y = F(prev) gives the exact
  // balance cons_weights . y = cons_weights . prev + tau * source_rate
  if (soft_weight == 0.0) return y;
  const double target = cons_weights.dot(prev) + tau * source_rate;
  const double defect = target - cons_weights.dot(y);
  y += (defect / soft_weight) * soft_mode;
  return y;
}

AssembledSystem assemble_system(const FineMesh& mesh, const FractureSet& fr,
                                const CoarseGrid& cg, const MaterialParams& mp,
                                double tau,
                                std::vector<DisplacementConstraint> dirichlet,
                                const std::vector<int>& source_cells) {
  AssembledSystem sys;
  sys.blocks = assemble_blocks(mesh, fr, mp);
  sys.layout.n_pm = sys.blocks.n_cells;
  sys.layout.n_pf = sys.blocks.n_segments;
  sys.layout.n_v = sys.blocks.n_vertices;
  sys.tau = tau;
  sys.dirichlet = std::move(dirichlet);

  const int n = sys.layout.size();
  const int opm = sys.layout.off_pm(), opf = sys.layout.off_pf();
  const int oux = sys.layout.off_ux(), ouy = sys.layout.off_uy();
  const BlockOperator& b = sys.blocks;

  // Composed operator A: pressure rows carry the (1/tau)-scaled Biot blocks,
  // displacement rows the plain transposes.
  std::vector<Triplet> ta;
  append_block(ta, b.A_m, opm, opm);
  append_block(ta, b.Q_mm, opm, opm);
  append_block(ta, b.Q_mf, opm, opf);
  append_block(ta, b.B_mx, opm, oux, 1.0 / tau);
  append_block(ta, b.B_my, opm, ouy, 1.0 / tau);
  append_block(ta, b.Q_fm, opf, opm);
  append_block(ta, b.A_f, opf, opf);
  append_block(ta, b.Q_ff, opf, opf);
  append_block_transposed(ta, b.B_mx, oux, opm, -1.0);
  append_block_transposed(ta, b.B_fx, oux, opf, -1.0);
  append_block(ta, b.D_x, oux, oux);
  append_block(ta, b.D_xy, oux, ouy);
  append_block_transposed(ta, b.B_my, ouy, opm, -1.0);
  append_block_transposed(ta, b.B_fy, ouy, opf, -1.0);
  append_block_transposed(ta, b.D_xy, ouy, oux, 1.0);
  append_block(ta, b.D_y, ouy, ouy);
  sys.A.resize(n, n);
  sys.A.setFromTriplets(ta.begin(), ta.end());

  sys.F_src = Vec::Zero(n);
  const double coarse_area = cg.cell_area();
  for (int src : source_cells) {
    if (src < 0 || src >= cg.num_cells())
      throw std::invalid_argument("assemble_system: source cell out of range");
    for (int c = 0; c < mesh.num_cells(); ++c)
      if (cg.fine_to_coarse[c] == src)
        sys.F_src[opm + c] += mp.q * mesh.cell_area[c] / coarse_area;
  }

  // lhs = (1/tau) M + A with row/column elimination of the constraints.
  sys.constrained_dofs.reserve(sys.dirichlet.size());
  std::unordered_set<int> fixed;
  for (const auto& d : sys.dirichlet) {
    const int dof = (d.component == 0 ? oux : ouy) + d.vertex;
    sys.constrained_dofs.push_back(dof);
    fixed.insert(dof);
  }

  std::vector<double> fixed_value(n, 0.0);
  for (std::size_t k = 0; k < sys.dirichlet.size(); ++k)
    fixed_value[sys.constrained_dofs[k]] = sys.dirichlet[k].value;

  sys.bc_correction = Vec::Zero(n);
  std::vector<Triplet> tl;
  tl.reserve(ta.size() + n);
  for (const Triplet& t : ta) {
    const bool row_fixed = fixed.count(t.row()) > 0;
    const bool col_fixed = fixed.count(t.col()) > 0;
    if (!row_fixed && col_fixed)
      sys.bc_correction[t.row()] += t.value() * fixed_value[t.col()];
    if (row_fixed || col_fixed) continue;
    tl.push_back(t);
  }
  for (int i = 0; i < sys.layout.n_pm; ++i)
    tl.emplace_back(opm + i, opm + i, b.M_m[i] / tau);
  for (int l = 0; l < sys.layout.n_pf; ++l)
    tl.emplace_back(opf + l, opf + l, b.M_f[l] / tau);
  for (int dof : sys.constrained_dofs) tl.emplace_back(dof, dof, 1.0);
  sys.lhs.resize(n, n);
  sys.lhs.setFromTriplets(tl.begin(), tl.end());

  // stationary parts for the increment right-hand side: displacement rows
  // as a matrix, flow rows as flux stencils
  std::vector<Triplet> ts;
  append_block_transposed(ts, b.B_mx, oux, opm, -1.0);
  append_block_transposed(ts, b.B_fx, oux, opf, -1.0);
  append_block(ts, b.D_x, oux, oux);
  append_block(ts, b.D_xy, oux, ouy);
  append_block_transposed(ts, b.B_my, ouy, opm, -1.0);
  append_block_transposed(ts, b.B_fy, ouy, opf, -1.0);
  append_block_transposed(ts, b.D_xy, ouy, oux, 1.0);
  append_block(ts, b.D_y, ouy, ouy);
  std::vector<Triplet> tse;
  tse.reserve(ts.size());
  for (const Triplet& t : ts)
    if (!fixed.count(t.row()) && !fixed.count(t.col())) tse.push_back(t);
  sys.G_mech.resize(n, n);
  sys.G_mech.setFromTriplets(tse.begin(), tse.end());

  for (const Face& f : mesh.faces)
    sys.flux_faces.push_back(
        {f.cell_a, f.cell_b, mp.b_m * f.interface_length / f.center_distance});
  for (const SegmentLink& link : fr.adjacency)
    sys.flux_links.push_back({link.l, link.n, mp.b_f / link.center_distance});
  for (int l = 0; l < fr.num_segments(); ++l)
    sys.flux_exchange.push_back({fr.segments[l].host_cell, l, mp.beta});

  // soft mode: unit pressure on both continua plus its static displacement
  const Vec ones_pm = Vec::Ones(sys.layout.n_pm);
  const Vec ones_pf = Vec::Ones(sys.layout.n_pf);
  const Vec u_unit = steady_displacement(b, sys.dirichlet, ones_pm, ones_pf);
  sys.soft_mode = Vec::Zero(n);
  sys.soft_mode.segment(opm, sys.layout.n_pm) = ones_pm;
  sys.soft_mode.segment(opf, sys.layout.n_pf) = ones_pf;
  sys.soft_mode.segment(oux, sys.layout.n_v) = u_unit.head(sys.layout.n_v);
  sys.soft_mode.segment(ouy, sys.layout.n_v) = u_unit.tail(sys.layout.n_v);

  sys.cons_weights = Vec::Zero(n);
  sys.cons_weights.segment(opm, sys.layout.n_pm) = b.M_m;
  sys.cons_weights.segment(opf, sys.layout.n_pf) = b.M_f;
  sys.cons_weights.segment(oux, sys.layout.n_v) =
      b.B_mx.transpose() * ones_pm;
  sys.cons_weights.segment(ouy, sys.layout.n_v) =
      b.B_my.transpose() * ones_pm;
  sys.soft_weight = sys.cons_weights.dot(sys.soft_mode);
  sys.source_rate =
      sys.F_src.segment(opm, sys.layout.n_pm).sum() +
      sys.F_src.segment(opf, sys.layout.n_pf).sum();
  return sys;
}

}  // namespace poro
