// SPDX-License-Identifier: Apache-2.0

// Command line front end: fine / basis / coarse / compare / genfrac.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "poro/config.hpp"
#include "poro/driver.hpp"

namespace {

struct Overrides {
  std::optional<std::string> config_file;
  std::optional<int> nx, ny, Nx, Ny, s, n_steps, threads, basis_cell;
  std::optional<double> width, height, t_max, q, p0;
  std::optional<std::string> s_list, fracture_file, output, sources, snapshots;
  std::optional<unsigned long long> seed;
  bool dump_blocks = false;
};

void add_common_options(CLI::App* sub, Overrides& ov) {
  sub->add_option("--config", ov.config_file, "run configuration file");
  sub->add_option("--nx", ov.nx, "fine cells in x");
  sub->add_option("--ny", ov.ny, "fine cells in y");
  sub->add_option("--Nx", ov.Nx, "coarse cells in x");
  sub->add_option("--Ny", ov.Ny, "coarse cells in y");
  sub->add_option("--width", ov.width, "domain width [m]");
  sub->add_option("--height", ov.height, "domain height [m]");
  sub->add_option("--s", ov.s, "oversampling layers");
  sub->add_option("--s-list", ov.s_list, "comma separated layer counts");
  sub->add_option("--fracture-file", ov.fracture_file, "fracture geometry");
  sub->add_option("--output", ov.output, "output directory");
  sub->add_option("--steps", ov.n_steps, "number of time steps");
  sub->add_option("--tmax", ov.t_max, "simulated time [s]");
  sub->add_option("--q", ov.q, "source rate per cell");
  sub->add_option("--p0", ov.p0, "initial pressure [Pa]");
  sub->add_option("--sources", ov.sources,
                  "comma separated coarse source cells, or 'auto'");
  sub->add_option("--snapshots", ov.snapshots, "comma separated step indices");
  sub->add_option("--seed", ov.seed, "rng seed");
  sub->add_option("--threads", ov.threads, "basis build threads (0 = auto)");
  sub->add_option("--basis-cell", ov.basis_cell, "cell whose bases to export");
  sub->add_flag("--dump-blocks", ov.dump_blocks,
                "write matrix-market dumps of every block");
}

poro::RunConfig resolve(const Overrides& ov, const std::string& mode) {
  poro::RunConfig cfg;
  if (ov.config_file) cfg = poro::parse_config_file(*ov.config_file);
  cfg.mode = mode;
  if (ov.nx) cfg.nx = *ov.nx;
  if (ov.ny) cfg.ny = *ov.ny;
  if (ov.Nx) cfg.Nx = *ov.Nx;
  if (ov.Ny) cfg.Ny = *ov.Ny;
  if (ov.width) cfg.width = *ov.width;
  if (ov.height) cfg.height = *ov.height;
  if (ov.s) cfg.s = *ov.s;
  if (ov.s_list) cfg.s_list = poro::parse_int_list(*ov.s_list);
  if (ov.fracture_file) cfg.fracture_file = *ov.fracture_file;
  if (ov.output) cfg.output_dir = *ov.output;
  if (ov.n_steps) cfg.material.n_steps = *ov.n_steps;
  if (ov.t_max) cfg.material.t_max = *ov.t_max;
  if (ov.q) cfg.material.q = *ov.q;
  if (ov.p0) cfg.material.p0 = *ov.p0;
  if (ov.sources && *ov.sources != "auto")
    cfg.source_cells = poro::parse_int_list(*ov.sources);
  if (ov.snapshots) cfg.snapshots = poro::parse_int_list(*ov.snapshots);
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.threads) cfg.threads = *ov.threads;
  if (ov.basis_cell) cfg.basis_export_cell = *ov.basis_cell;
  if (ov.dump_blocks) cfg.dump_blocks = true;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D coupled flow/mechanics simulator for fractured "
               "poroelastic media with nonlocal multicontinuum upscaling"};
  app.require_subcommand(1);

  Overrides ov_fine, ov_basis, ov_coarse, ov_compare;
  auto* sub_fine = app.add_subcommand("fine", "run the fine-grid model");
  add_common_options(sub_fine, ov_fine);
  auto* sub_basis =
      app.add_subcommand("basis", "build multiscale bases and export them");
  add_common_options(sub_basis, ov_basis);
  auto* sub_coarse =
      app.add_subcommand("coarse", "build bases and run the upscaled model");
  add_common_options(sub_coarse, ov_coarse);
  auto* sub_compare = app.add_subcommand(
      "compare", "fine reference vs. upscaled runs over an s-list");
  add_common_options(sub_compare, ov_compare);

  poro::GenFracOptions gf;
  auto* sub_gen =
      app.add_subcommand("genfrac", "generate a random fracture geometry");
  sub_gen->add_option("--seed", gf.seed, "rng seed");
  sub_gen->add_option("--count", gf.count, "number of fractures");
  sub_gen->add_option("--length-min", gf.length_min, "minimum length [m]");
  sub_gen->add_option("--length-max", gf.length_max, "maximum length [m]");
  sub_gen->add_option("--width", gf.width, "domain width [m]");
  sub_gen->add_option("--height", gf.height, "domain height [m]");
  sub_gen->add_option("--out", gf.out, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sub_fine->parsed()) return poro::cmd_fine(resolve(ov_fine, "fine"));
    if (sub_basis->parsed()) return poro::cmd_basis(resolve(ov_basis, "basis"));
    if (sub_coarse->parsed())
      return poro::cmd_coarse(resolve(ov_coarse, "coarse"));
    if (sub_compare->parsed())
      return poro::cmd_compare(resolve(ov_compare, "compare"));
    if (sub_gen->parsed()) return poro::cmd_genfrac(gf);
  } catch (const poro::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
