// SPDX-License-Identifier: Apache-2.0

#ifndef PORO_CONFIG_HPP
#define PORO_CONFIG_HPP

#include <string>
#include <vector>

#include "poro/coefficients.hpp"
#include "poro/types.hpp"

namespace poro {

/// A full run description. Defaults reproduce the reference setup: unit
/// square, 120x120 fine grid, 20x20 coarse grid, 50 implicit steps over ten
/// 365-day years, roller boundaries and two injection cells.
struct RunConfig {
  int nx = 120, ny = 120;
  double width = 1.0, height = 1.0;
  int Nx = 20, Ny = 20;
  int s = 4;
  std::vector<int> s_list;  // compare mode; falls back to {s} when empty

  MaterialParams material;

  std::string fracture_file;       // empty = no fractures
  std::vector<int> source_cells;   // coarse cell ids; empty = auto placement
  std::string output_dir = "out";
  std::string mode = "fine";       // fine | basis | coarse | compare
  std::vector<int> snapshots = {5, 15, 50};
  unsigned long long seed = 7;
  bool dump_blocks = false;
  int threads = 0;                 // 0 = hardware concurrency
  int basis_export_cell = -1;      // -1 = center cell

  /// Source cells, defaulting to the cells at 25% and 75% along the
  /// coarse-grid diagonal.
  std::vector<int> resolved_sources() const;
  std::vector<int> resolved_s_list() const;

  /// Throws ConfigError on any inconsistency (ranges, divisibility,
  /// missing fracture file).
  void validate() const;
};

/// Parses the flat key-value format with [section] headers and '#'
/// comments. Unknown keys are rejected.
RunConfig parse_config_file(const std::string& path);

/// Applies one "section.key" override; shared by file parser and CLI.
void set_config_value(RunConfig& cfg, const std::string& key,
                      const std::string& value);

std::vector<int> parse_int_list(const std::string& text);

}  // namespace poro

#endif
