// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "poro/driver.hpp"
#include "poro/solver.hpp"

using namespace poro;

namespace {

// Minimal transient system for closed-form checks.
struct ToySystem {
  SpMat lhs;
  Vec F;
  Vec M_diag;
  double tau = 1.0;
  Vec rhs(const Vec& prev) const {
    return F + (M_diag.array() / tau * prev.array()).matrix();
  }
};

ToySystem toy_flow(const Vec& M, const SpMat& A, const Vec& F, double tau) {
  ToySystem sys;
  sys.M_diag = M;
  sys.F = F;
  sys.tau = tau;
  std::vector<Triplet> t;
  for (int i = 0; i < M.size(); ++i) t.emplace_back(i, i, M[i] / tau);
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it)
      t.emplace_back(it.row(), it.col(), it.value());
  sys.lhs.resize(M.size(), M.size());
  sys.lhs.setFromTriplets(t.begin(), t.end());
  return sys;
}

Problem tiny_plain_problem(double q) {
  RunConfig cfg;
  cfg.nx = cfg.ny = 24;
  cfg.Nx = cfg.Ny = 4;
  cfg.material.q = q;
  cfg.material.n_steps = 20;
  cfg.snapshots = {5, 15, 20};
  cfg.fracture_file = "";
  Problem p = build_problem(cfg);
  return p;
}

Problem tiny_with_fractures(double q) {
  RunConfig cfg;
  cfg.nx = cfg.ny = 24;
  cfg.Nx = cfg.Ny = 4;
  cfg.material.q = q;
  cfg.material.n_steps = 20;
  Problem p;
  p.mesh = build_fine_mesh(cfg.nx, cfg.ny, 1.0, 1.0);
  p.fr = embed_fractures(p.mesh, {{Vec2(0.12, 0.2), Vec2(0.8, 0.65)},
                                  {Vec2(0.3, 0.85), Vec2(0.7, 0.2)}});
  p.cg = build_coarse_grid(p.mesh, p.fr, cfg.Nx, cfg.Ny);
  p.mp = cfg.material;
  p.sources = cfg.resolved_sources();
  p.sys = assemble_system(p.mesh, p.fr, p.cg, p.mp, p.mp.tau(),
                          roller_constraints(p.mesh), p.sources);
  return p;
}

}  // namespace

TEST_CASE("single unknown closed form") {
  // a (p - p_prev)/tau = f  =>  p = p_prev + tau f / a
  const double a = 2.5, tau = 3.0, f = 0.7, p_prev = 1.2;
  SpMat A(1, 1);
  const ToySystem sys =
      toy_flow(Vec::Constant(1, a), A, Vec::Constant(1, f), tau);
  const SimulationState out =
      implicit_step(sys, {0, Vec::Constant(1, p_prev)});
  CHECK(out.step == 1);
  CHECK(out.y[0] == doctest::Approx(p_prev + tau * f / a).epsilon(1e-14));
}

TEST_CASE("two-cell closed form") {
  Vec M = Vec::Ones(2);
  std::vector<Triplet> t = {{0, 0, 1.0}, {1, 1, 1.0}, {0, 1, -1.0}, {1, 0, -1.0}};
  SpMat A(2, 2);
  A.setFromTriplets(t.begin(), t.end());
  const ToySystem sys = toy_flow(M, A, Vec::Zero(2), 1.0);
  Vec prev(2);
  prev << 1.0, 0.0;
  const SimulationState out = implicit_step(sys, {0, prev});
  CHECK(out.y[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(out.y[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("run of one step equals implicit_step") {
  Vec M = Vec::Ones(2);
  SpMat A(2, 2);
  const ToySystem sys = toy_flow(M, A, Vec::Constant(2, 0.3), 2.0);
  Vec prev = Vec::Zero(2);
  const auto traj = run(sys, {0, prev}, 1);
  const auto single = implicit_step(sys, {0, prev});
  REQUIRE(traj.size() == 1);
  CHECK((traj[0].y - single.y).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK_THROWS_AS(run(sys, {0, prev}, 0), std::invalid_argument);
}

TEST_CASE("steady state is a machine-level fixed point") {
  Problem p = tiny_with_fractures(0.0);
  const SimulationState init = initial_fine_state(p.sys, p.mp.p0);
  const auto traj = run(p.sys, init, 20);
  const FieldLayout& fl = p.sys.layout;

  auto rel_change = [&](int off, int n) {
    const double base = init.y.segment(off, n).lpNorm<Eigen::Infinity>();
    return (traj.back().y.segment(off, n) - init.y.segment(off, n))
               .lpNorm<Eigen::Infinity>() /
           base;
  };
  CHECK(rel_change(fl.off_pm(), fl.n_pm) <= 1e-10);
  CHECK(rel_change(fl.off_pf(), fl.n_pf) <= 1e-10);
  // displacement is nonzero initially (fracture loading), use its own scale
  CHECK(rel_change(fl.off_ux(), fl.n_v) <= 1e-10);
  CHECK(rel_change(fl.off_uy(), fl.n_v) <= 1e-10);
}

TEST_CASE("no-source run conserves the discrete fluid content") {
  Problem p = tiny_with_fractures(0.0);
  const FieldLayout& fl = p.sys.layout;

  // start away from equilibrium: perturbed pressures
  SimulationState st = initial_fine_state(p.sys, p.mp.p0);
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> uni(-0.1, 0.1);
  for (int i = 0; i < fl.n_pm; ++i)
    st.y[fl.off_pm() + i] *= 1.0 + uni(rng);

  auto content = [&](const Vec& y) {
    const auto& b = p.sys.blocks;
    double c = b.M_m.dot(y.segment(fl.off_pm(), fl.n_pm));
    c += b.M_f.dot(y.segment(fl.off_pf(), fl.n_pf));
    c += (b.B_mx * y.segment(fl.off_ux(), fl.n_v)).sum();
    c += (b.B_my * y.segment(fl.off_uy(), fl.n_v)).sum();
    return c;
  };

  const double c0 = content(st.y);
  const auto traj = run(p.sys, st, 10);
  for (const auto& s : traj)
    CHECK(content(s.y) == doctest::Approx(c0).epsilon(1e-8));
}

TEST_CASE("doubling the source doubles the deviation") {
  Problem p1 = tiny_with_fractures(0.01);
  Problem p2 = tiny_with_fractures(0.02);

  const SimulationState init = initial_fine_state(p1.sys, p1.mp.p0);
  const auto t1 = run(p1.sys, init, 5);
  const auto t2 = run(p2.sys, init, 5);
  for (std::size_t n = 0; n < t1.size(); ++n) {
    const Vec d1 = t1[n].y - init.y;
    const Vec d2 = t2[n].y - init.y;
    CHECK((d2 - 2.0 * d1).lpNorm<Eigen::Infinity>() <=
          1e-10 * d1.lpNorm<Eigen::Infinity>());
  }
}

TEST_CASE("factorization reuse is bitwise reproducible") {
  Problem p = tiny_with_fractures(0.01);
  const SimulationState init = initial_fine_state(p.sys, p.mp.p0);

  Stepper stepper(p.sys);
  SimulationState a = init;
  for (int n = 0; n < 3; ++n) a = stepper.step(a);

  SimulationState b = init;
  for (int n = 0; n < 3; ++n) b = implicit_step(p.sys, b);

  REQUIRE(a.y.size() == b.y.size());
  for (int i = 0; i < a.y.size(); ++i) CHECK(a.y[i] == b.y[i]);
}

TEST_CASE("coarse averages of linear fields") {
  const FineMesh m = build_fine_mesh(4, 4, 1.0, 1.0);
  const FractureSet fr = embed_fractures(m, {});
  const CoarseGrid cg = build_coarse_grid(m, fr, 2, 2);
  FieldLayout fl;
  fl.n_pm = m.num_cells();
  fl.n_pf = 0;
  fl.n_v = m.num_vertices();

  Vec y = Vec::Zero(fl.size());
  for (int c = 0; c < m.num_cells(); ++c)
    y[fl.off_pm() + c] = m.cell_center[c].x();
  for (int v = 0; v < m.num_vertices(); ++v) {
    y[fl.off_ux() + v] = m.vertices[v].x();
    y[fl.off_uy() + v] = 7.0;  // constant
  }

  const CellAverages avg = coarse_average(m, cg, fl, y);
  // columns of the 2x2 coarse grid have centers 0.25 and 0.75
  CHECK(avg.p_m[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(avg.p_m[1] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(avg.p_m[2] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(avg.p_m[3] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(avg.u_x[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(avg.u_x[1] == doctest::Approx(0.75).epsilon(1e-12));
  for (int j = 0; j < 4; ++j)
    CHECK(avg.u_y[j] == doctest::Approx(7.0).epsilon(1e-14));
}

TEST_CASE("coarse averaging is linear") {
  const FineMesh m = build_fine_mesh(6, 6, 1.0, 1.0);
  const FractureSet fr = embed_fractures(m, {});
  const CoarseGrid cg = build_coarse_grid(m, fr, 3, 3);
  FieldLayout fl;
  fl.n_pm = m.num_cells();
  fl.n_pf = 0;
  fl.n_v = m.num_vertices();

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Vec f(fl.size()), g(fl.size());
  for (int i = 0; i < fl.size(); ++i) {
    f[i] = uni(rng);
    g[i] = uni(rng);
  }
  const double a = 2.25, b = -0.5;
  const CellAverages af = coarse_average(m, cg, fl, f);
  const CellAverages ag = coarse_average(m, cg, fl, g);
  const CellAverages combo = coarse_average(m, cg, fl, a * f + b * g);
  CHECK((combo.p_m - a * af.p_m - b * ag.p_m).lpNorm<Eigen::Infinity>() <=
        1e-14);
  CHECK((combo.u_x - a * af.u_x - b * ag.u_x).lpNorm<Eigen::Infinity>() <=
        1e-14);
}

TEST_CASE("error metrics") {
  CellAverages ref, sol;
  ref.p_m = Vec::Ones(2);
  ref.u_x = Vec::Ones(2);
  ref.u_y = Vec::Ones(2);
  sol = ref;
  ErrorMetrics zero = error_metrics(ref, sol);
  CHECK(zero.e_p == 0.0);
  CHECK(zero.e_ux == 0.0);
  CHECK(zero.e_uy == 0.0);

  sol.p_m << 1.0, 0.0;
  ErrorMetrics e = error_metrics(ref, sol);
  CHECK(e.e_p == doctest::Approx(100.0 * std::sqrt(0.5)).epsilon(1e-12));
  CHECK_FALSE(e.absolute_p);

  // relabeling invariance
  CellAverages ref2, sol2;
  ref2 = ref;
  sol2 = sol;
  std::swap(ref2.p_m[0], ref2.p_m[1]);
  std::swap(sol2.p_m[0], sol2.p_m[1]);
  CHECK(error_metrics(ref2, sol2).e_p == doctest::Approx(e.e_p));

  // zero reference triggers the absolute fallback flag
  ref.u_x.setZero();
  sol.u_x << 0.3, 0.4;
  ErrorMetrics abs = error_metrics(ref, sol);
  CHECK(abs.absolute_ux);
  CHECK(abs.e_ux == doctest::Approx(50.0));  // sqrt(0.25) * 100
}

TEST_CASE("tiny fracture-free problem has sane dynamics") {
  Problem p = tiny_plain_problem(0.01);
  const SimulationState init = initial_fine_state(p.sys, p.mp.p0);
  const auto traj = run(p.sys, init, 5);
  const FieldLayout& fl = p.sys.layout;
  // pressure rises at the sources
  const Vec dp = traj.back().y.segment(fl.off_pm(), fl.n_pm) -
                 init.y.segment(fl.off_pm(), fl.n_pm);
  CHECK(dp.maxCoeff() > 0.0);
  for (int i = 0; i < dp.size(); ++i) CHECK(std::isfinite(dp[i]));
}
