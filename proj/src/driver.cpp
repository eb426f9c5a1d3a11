// SPDX-License-Identifier: Apache-2.0

#include "poro/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>

#include "poro/io.hpp"
#include "poro/nlmc.hpp"

namespace poro {

namespace fs = std::filesystem;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  return os;
}

Vec pressure_snapshot(const FieldLayout& fl, const Vec& y, double p0) {
  // normalized pressure (p - p0)/p0
  return (y.segment(fl.off_pm(), fl.n_pm).array() - p0) / p0;
}

void write_fine_snapshot(const std::string& stem, const Problem& p,
                         const Vec& y, double p0) {
  const FieldLayout& fl = p.sys.layout;
  const Vec pstar = pressure_snapshot(fl, y, p0);
  const Vec ux = y.segment(fl.off_ux(), fl.n_v);
  const Vec uy = y.segment(fl.off_uy(), fl.n_v);
  write_vtk_mesh(stem + ".vtk", p.mesh, {{"p_star", pstar}}, {}, &ux, &uy);
  if (p.fr.num_segments() > 0) {
    const Vec pf_star =
        (y.segment(fl.off_pf(), fl.n_pf).array() - p0) / p0;
    write_vtk_fracture(stem + "_frac.vtk", p.fr, {{"p_star", pf_star}});
  }
}

void dump_blocks(const std::string& dir, const BlockOperator& b) {
  auto diag_matrix = [](const Vec& d) {
    std::vector<Triplet> t;
    for (int i = 0; i < d.size(); ++i) t.emplace_back(i, i, d[i]);
    SpMat m(d.size(), d.size());
    m.setFromTriplets(t.begin(), t.end());
    return m;
  };
  write_matrix_market(dir + "/A_m.mtx", b.A_m);
  write_matrix_market(dir + "/A_f.mtx", b.A_f);
  write_matrix_market(dir + "/Q_mm.mtx", b.Q_mm);
  write_matrix_market(dir + "/Q_mf.mtx", b.Q_mf);
  write_matrix_market(dir + "/Q_fm.mtx", b.Q_fm);
  write_matrix_market(dir + "/Q_ff.mtx", b.Q_ff);
  write_matrix_market(dir + "/D_x.mtx", b.D_x);
  write_matrix_market(dir + "/D_y.mtx", b.D_y);
  write_matrix_market(dir + "/D_xy.mtx", b.D_xy);
  write_matrix_market(dir + "/B_mx.mtx", b.B_mx);
  write_matrix_market(dir + "/B_my.mtx", b.B_my);
  write_matrix_market(dir + "/B_fx.mtx", b.B_fx);
  write_matrix_market(dir + "/B_fy.mtx", b.B_fy);
  write_matrix_market(dir + "/M_m.mtx", diag_matrix(b.M_m));
  write_matrix_market(dir + "/M_f.mtx", diag_matrix(b.M_f));
}

int guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

Problem build_problem(const RunConfig& cfg) {
  cfg.validate();
  Problem p;
  p.mesh = build_fine_mesh(cfg.nx, cfg.ny, cfg.width, cfg.height);
  std::vector<std::vector<Vec2>> polylines;
  if (!cfg.fracture_file.empty())
    polylines = read_fracture_file(cfg.fracture_file);
  p.fr = embed_fractures(p.mesh, polylines);
  for (int net : p.fr.dropped_networks)
    std::cerr << "warning: fracture " << net << " lies outside the domain\n";
  p.cg = build_coarse_grid(p.mesh, p.fr, cfg.Nx, cfg.Ny);
  p.mp = cfg.material;
  p.sources = cfg.resolved_sources();
  p.sys = assemble_system(p.mesh, p.fr, p.cg, p.mp, p.mp.tau(),
                          roller_constraints(p.mesh), p.sources);
  return p;
}

ComparisonReport run_comparison(const RunConfig& cfg) {
  Problem p = build_problem(cfg);
  const double p0 = p.mp.p0;
  const int n_steps = p.mp.n_steps;

  ComparisonReport report;
  report.dof_f = p.sys.layout.size();

  auto t0 = std::chrono::steady_clock::now();
  const SimulationState fine0 = initial_fine_state(p.sys, p0);
  const auto fine_traj = run(p.sys, fine0, n_steps);
  report.fine_time_s = seconds_since(t0);

  std::vector<CellAverages> fine_avg;
  fine_avg.reserve(n_steps);
  for (const auto& st : fine_traj)
    fine_avg.push_back(coarse_average(p.mesh, p.cg, p.sys.layout, st.y));

  for (int s : cfg.resolved_s_list()) {
    ComparisonRow row;
    row.s = s;
    row.dof_f = report.dof_f;

    t0 = std::chrono::steady_clock::now();
    NlmcBuilder builder(p.mesh, p.fr, p.cg, p.sys.blocks, s);
    const auto bases = builder.build_all(cfg.threads);
    const ProjectionOperator R = assemble_projection(p.mesh, p.fr, p.cg, bases);
    const CoarseSystem cs = upscale(p.sys, R, p.fr, p.cg, p.mp);
    row.basis_time_s = seconds_since(t0);
    row.dof_c = cs.layout.size();

    t0 = std::chrono::steady_clock::now();
    const SimulationState coarse0 = initial_coarse_state(cs, p0);
    const auto coarse_traj = run(cs, coarse0, n_steps);
    row.coarse_time_s = seconds_since(t0);

    std::vector<ErrorMetrics> by_time;
    by_time.reserve(n_steps);
    for (int n = 0; n < n_steps; ++n)
      by_time.push_back(error_metrics(
          fine_avg[n], coarse_state_averages(cs.layout, coarse_traj[n].y)));
    row.err = by_time.back();
    report.rows.push_back(row);
    report.by_time.push_back(std::move(by_time));
  }
  return report;
}

int cmd_fine(const RunConfig& cfg) {
  return guarded([&] {
    Problem p = build_problem(cfg);
    fs::create_directories(cfg.output_dir);
    if (cfg.dump_blocks) {
      fs::create_directories(cfg.output_dir + "/blocks");
      dump_blocks(cfg.output_dir + "/blocks", p.sys.blocks);
    }

    const auto t0 = std::chrono::steady_clock::now();
    const SimulationState init = initial_fine_state(p.sys, p.mp.p0);
    const auto traj = run(p.sys, init, p.mp.n_steps);
    const double wall = seconds_since(t0);

    for (int n : cfg.snapshots)
      write_fine_snapshot(cfg.output_dir + "/fine_" + std::to_string(n), p,
                          traj[n - 1].y, p.mp.p0);
    write_vtk_mesh(cfg.output_dir + "/mesh.vtk", p.mesh);
    if (p.fr.num_segments() > 0)
      write_vtk_fracture(cfg.output_dir + "/fracture_mesh.vtk", p.fr);

    auto os = open_out(cfg.output_dir + "/summary.txt");
    os << "mode fine\n";
    os << "DOF_f " << p.sys.layout.size() << "\n";
    os << "cells " << p.mesh.num_cells() << "\n";
    os << "segments " << p.fr.num_segments() << "\n";
    os << "vertices " << p.mesh.num_vertices() << "\n";
    os << "steps " << p.mp.n_steps << "\n";
    os << "wall_time_s " << format_double(wall) << "\n";
    std::cout << "fine run: DOF_f = " << p.sys.layout.size() << ", "
              << format_double(wall) << " s\n";
  });
}

namespace {

void export_cell_bases(const RunConfig& cfg, const Problem& p,
                       const CellBases& cb) {
  const int nc = p.mesh.num_cells();
  const int ns = p.fr.num_segments();
  const int nv = p.mesh.num_vertices();
  const std::string stem =
      cfg.output_dir + "/basis_cell" + std::to_string(cb.cell);

  auto dense_cells = [&](const Vec& local) {
    Vec g = Vec::Zero(nc);
    for (std::size_t k = 0; k < cb.cells.size(); ++k)
      g[cb.cells[k]] = local[static_cast<int>(k)];
    return g;
  };
  auto dense_segs = [&](const Vec& local) {
    Vec g = Vec::Zero(std::max(1, ns));
    for (std::size_t k = 0; k < cb.segments.size(); ++k)
      g[cb.segments[k]] = local[static_cast<int>(k)];
    return g;
  };
  auto dense_verts = [&](const Vec& local) {
    Vec g = Vec::Zero(nv);
    for (std::size_t k = 0; k < cb.vertices.size(); ++k)
      g[cb.vertices[k]] = local[static_cast<int>(k)];
    return g;
  };

  write_vtk_mesh(stem + "_pm.vtk", p.mesh,
                 {{"psi_m", dense_cells(cb.matrix_basis.psi_m)}});
  if (ns > 0)
    write_vtk_fracture(stem + "_pm_frac.vtk", p.fr,
                       {{"psi_f", dense_segs(cb.matrix_basis.psi_f)}});
  for (std::size_t l = 0; l < cb.fracture_bases.size(); ++l) {
    const std::string fstem = stem + "_net" + std::to_string(l);
    write_vtk_mesh(fstem + ".vtk", p.mesh,
                   {{"psi_m", dense_cells(cb.fracture_bases[l].psi_m)}});
    write_vtk_fracture(fstem + "_frac.vtk", p.fr,
                       {{"psi_f", dense_segs(cb.fracture_bases[l].psi_f)}});
  }
  const Vec xx = dense_verts(cb.x_basis.psi_x), xy = dense_verts(cb.x_basis.psi_y);
  const Vec yx = dense_verts(cb.y_basis.psi_x), yy = dense_verts(cb.y_basis.psi_y);
  write_vtk_mesh(stem + "_ux.vtk", p.mesh, {}, {}, &xx, &xy);
  write_vtk_mesh(stem + "_uy.vtk", p.mesh, {}, {}, &yx, &yy);
}

}  // namespace

int cmd_basis(const RunConfig& cfg) {
  return guarded([&] {
    Problem p = build_problem(cfg);
    fs::create_directories(cfg.output_dir);

    const auto t0 = std::chrono::steady_clock::now();
    NlmcBuilder builder(p.mesh, p.fr, p.cg, p.sys.blocks, cfg.s);
    const auto bases = builder.build_all(cfg.threads);
    const ProjectionOperator R = assemble_projection(p.mesh, p.fr, p.cg, bases);
    const double wall = seconds_since(t0);

    const int cell = cfg.basis_export_cell >= 0
                         ? cfg.basis_export_cell
                         : (p.cg.Ny / 2) * p.cg.Nx + p.cg.Nx / 2;
    export_cell_bases(cfg, p, bases[cell]);

    auto os = open_out(cfg.output_dir + "/summary.txt");
    os << "mode basis\n";
    os << "DOF_c " << R.layout.size() << "\n";
    os << "DOF_f " << p.sys.layout.size() << "\n";
    os << "continua " << p.cg.total_continua() << "\n";
    os << "s " << cfg.s << "\n";
    os << "wall_time_s " << format_double(wall) << "\n";
    std::cout << "basis build: DOF_c = " << R.layout.size() << ", "
              << format_double(wall) << " s\n";
  });
}

int cmd_coarse(const RunConfig& cfg) {
  return guarded([&] {
    Problem p = build_problem(cfg);
    fs::create_directories(cfg.output_dir);

    auto t0 = std::chrono::steady_clock::now();
    NlmcBuilder builder(p.mesh, p.fr, p.cg, p.sys.blocks, cfg.s);
    const auto bases = builder.build_all(cfg.threads);
    const ProjectionOperator R = assemble_projection(p.mesh, p.fr, p.cg, bases);
    const CoarseSystem cs = upscale(p.sys, R, p.fr, p.cg, p.mp);
    const double basis_wall = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const SimulationState init = initial_coarse_state(cs, p.mp.p0);
    const auto traj = run(cs, init, p.mp.n_steps);
    const double solve_wall = seconds_since(t0);

    for (int n : cfg.snapshots) {
      const Vec fine_y = reconstruct(R, traj[n - 1].y);
      write_fine_snapshot(cfg.output_dir + "/coarse_" + std::to_string(n), p,
                          fine_y, p.mp.p0);
    }

    auto os = open_out(cfg.output_dir + "/summary.txt");
    os << "mode coarse\n";
    os << "DOF_c " << cs.layout.size() << "\n";
    os << "DOF_f " << p.sys.layout.size() << "\n";
    os << "s " << cfg.s << "\n";
    os << "basis_time_s " << format_double(basis_wall) << "\n";
    os << "wall_time_s " << format_double(solve_wall) << "\n";
    std::cout << "coarse run: DOF_c = " << cs.layout.size() << ", "
              << format_double(solve_wall) << " s\n";
  });
}

int cmd_compare(const RunConfig& cfg) {
  return guarded([&] {
    RunConfig local = cfg;
    local.validate();
    fs::create_directories(local.output_dir);

    const ComparisonReport report = run_comparison(local);
    const double tau = local.material.tau();

    auto table = open_out(local.output_dir + "/errors.csv");
    table << "s,e_p,e_ux,e_uy,DOF_f,DOF_c,wall_time_s\n";
    for (const auto& row : report.rows)
      table << row.s << "," << format_double(row.err.e_p) << ","
            << format_double(row.err.e_ux) << ","
            << format_double(row.err.e_uy) << "," << row.dof_f << ","
            << row.dof_c << "," << format_double(row.coarse_time_s) << "\n";

    auto by_time = open_out(local.output_dir + "/errors_by_time.csv");
    by_time << "s,step,time_s,e_p,e_ux,e_uy\n";
    for (std::size_t k = 0; k < report.rows.size(); ++k)
      for (std::size_t n = 0; n < report.by_time[k].size(); ++n) {
        const ErrorMetrics& e = report.by_time[k][n];
        by_time << report.rows[k].s << "," << n + 1 << ","
                << format_double((n + 1) * tau) << ","
                << format_double(e.e_p) << "," << format_double(e.e_ux) << ","
                << format_double(e.e_uy) << "\n";
      }

    auto os = open_out(local.output_dir + "/summary.txt");
    os << "mode compare\n";
    os << "DOF_f " << report.dof_f << "\n";
    os << "fine_time_s " << format_double(report.fine_time_s) << "\n";
    for (const auto& row : report.rows)
      os << "s" << row.s << " DOF_c " << row.dof_c << " basis_time_s "
         << format_double(row.basis_time_s) << " coarse_time_s "
         << format_double(row.coarse_time_s) << "\n";

    for (const auto& row : report.rows)
      std::cout << "s=" << row.s << ": e_p=" << format_double(row.err.e_p)
                << "% e_ux=" << format_double(row.err.e_ux)
                << "% e_uy=" << format_double(row.err.e_uy) << "%\n";
  });
}

std::vector<std::vector<Vec2>> generate_fractures(const GenFracOptions& opt) {
  if (opt.count < 0)
    throw std::invalid_argument("generate_fractures: count must be >= 0");
  if (opt.length_min <= 0.0 || opt.length_max < opt.length_min)
    throw std::invalid_argument("generate_fractures: bad length range");

  std::mt19937_64 rng(opt.seed);
  // uniform doubles straight from the generator for cross-platform
  // reproducibility (distributions are implementation-defined)
  auto u01 = [&rng]() {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  };

  std::vector<std::vector<Vec2>> lines;
  lines.reserve(opt.count);
  for (int k = 0; k < opt.count; ++k) {
    const double cx = opt.width * u01();
    const double cy = opt.height * u01();
    const double theta = std::numbers::pi * u01();
    const double len =
        opt.length_min + (opt.length_max - opt.length_min) * u01();
    const Vec2 half = 0.5 * len * Vec2(std::cos(theta), std::sin(theta));
    lines.push_back({Vec2(cx, cy) - half, Vec2(cx, cy) + half});
  }
  return lines;
}

int cmd_genfrac(const GenFracOptions& opt) {
  return guarded([&] {
    const auto lines = generate_fractures(opt);
    const fs::path out(opt.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_fracture_file(opt.out, lines,
                        "fracture lines: seed=" + std::to_string(opt.seed) +
                            " count=" + std::to_string(opt.count));
    std::cout << "wrote " << lines.size() << " fractures to " << opt.out
              << "\n";
  });
}

}  // namespace poro
