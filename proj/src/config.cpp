// SPDX-License-Identifier: Apache-2.0

#include "poro/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace poro {

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(std::stoi(item));
  }
  return out;
}

std::vector<int> RunConfig::resolved_sources() const {
  if (!source_cells.empty()) return source_cells;
  const int ix1 = Nx / 4, iy1 = Ny / 4;
  const int ix2 = (3 * Nx) / 4, iy2 = (3 * Ny) / 4;
  std::vector<int> cells = {iy1 * Nx + ix1, iy2 * Nx + ix2};
  if (cells[0] == cells[1]) cells.pop_back();
  return cells;
}

std::vector<int> RunConfig::resolved_s_list() const {
  return s_list.empty() ? std::vector<int>{s} : s_list;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (nx < 1 || ny < 1) fail("mesh: nx and ny must be >= 1");
  if (width <= 0.0 || height <= 0.0) fail("mesh: domain must be positive");
  if (Nx < 1 || Ny < 1) fail("mesh: Nx and Ny must be >= 1");
  if (nx % Nx != 0 || ny % Ny != 0)
    fail("mesh: fine resolution must be divisible by the coarse one");
  if (s < 0) fail("upscaling: s must be >= 0");
  for (int v : s_list)
    if (v < 0) fail("upscaling: s_list entries must be >= 0");
  if (material.E <= 0.0) fail("material: E must be positive");
  if (material.nu < 0.0 || material.nu >= 0.5)
    fail("material: nu must lie in [0, 0.5)");
  if (material.alpha < 0.0 || material.alpha > 1.0)
    fail("material: alpha must lie in [0, 1]");
  if (material.a_m < 0.0 || material.a_f < 0.0 || material.b_m < 0.0 ||
      material.b_f < 0.0 || material.beta < 0.0)
    fail("material: flow coefficients must be non-negative");
  if (material.t_max <= 0.0) fail("material: t_max must be positive");
  if (material.n_steps < 1) fail("material: n_steps must be >= 1");
  if (!fracture_file.empty() && !std::filesystem::exists(fracture_file))
    fail("fractures: file not found: " + fracture_file);
  for (int c : source_cells)
    if (c < 0 || c >= Nx * Ny) fail("sources: cell id out of range");
  for (int n : snapshots)
    if (n < 1 || n > material.n_steps)
      fail("run: snapshot indices must lie in [1, n_steps]");
  if (mode != "fine" && mode != "basis" && mode != "coarse" &&
      mode != "compare")
    fail("run: mode must be fine | basis | coarse | compare");
  if (basis_export_cell >= Nx * Ny)
    fail("run: basis_export_cell out of range");
}

void set_config_value(RunConfig& cfg, const std::string& key,
                      const std::string& value) {
  auto as_int = [&] { return std::stoi(value); };
  auto as_double = [&] { return std::stod(value); };
  auto as_bool = [&] {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("config: boolean expected for " + key);
  };

  if (key == "mesh.nx") cfg.nx = as_int();
  else if (key == "mesh.ny") cfg.ny = as_int();
  else if (key == "mesh.width") cfg.width = as_double();
  else if (key == "mesh.height") cfg.height = as_double();
  else if (key == "mesh.Nx") cfg.Nx = as_int();
  else if (key == "mesh.Ny") cfg.Ny = as_int();
  else if (key == "material.E") cfg.material.E = as_double();
  else if (key == "material.nu") cfg.material.nu = as_double();
  else if (key == "material.alpha") cfg.material.alpha = as_double();
  else if (key == "material.a_m") cfg.material.a_m = as_double();
  else if (key == "material.a_f") cfg.material.a_f = as_double();
  else if (key == "material.b_m") cfg.material.b_m = as_double();
  else if (key == "material.b_f") cfg.material.b_f = as_double();
  else if (key == "material.beta") cfg.material.beta = as_double();
  else if (key == "material.p0") cfg.material.p0 = as_double();
  else if (key == "material.q") cfg.material.q = as_double();
  else if (key == "material.t_max") cfg.material.t_max = as_double();
  else if (key == "material.n_steps") cfg.material.n_steps = as_int();
  else if (key == "fractures.file") cfg.fracture_file = value;
  else if (key == "upscaling.s") cfg.s = as_int();
  else if (key == "upscaling.s_list") cfg.s_list = parse_int_list(value);
  else if (key == "sources.cells") {
    if (value != "auto") cfg.source_cells = parse_int_list(value);
  } else if (key == "run.mode") cfg.mode = value;
  else if (key == "run.output") cfg.output_dir = value;
  else if (key == "run.snapshots") cfg.snapshots = parse_int_list(value);
  else if (key == "run.seed") cfg.seed = std::stoull(value);
  else if (key == "run.dump_blocks") cfg.dump_blocks = as_bool();
  else if (key == "run.threads") cfg.threads = as_int();
  else if (key == "run.basis_export_cell") cfg.basis_export_cell = as_int();
  else throw ConfigError("config: unknown key " + key);
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path);
  RunConfig cfg;
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected key = value at " + path + ":" +
                        std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      set_config_value(cfg, section.empty() ? key : section + "." + key,
                       value);
    } catch (const std::invalid_argument&) {
      throw ConfigError("config: bad value for " + key + " at " + path + ":" +
                        std::to_string(lineno));
    }
  }
  return cfg;
}

}  // namespace poro
