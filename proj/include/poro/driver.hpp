// SPDX-License-Identifier: Apache-2.0

#ifndef PORO_DRIVER_HPP
#define PORO_DRIVER_HPP

#include <string>
#include <vector>

#include "poro/config.hpp"
#include "poro/fine_assembly.hpp"
#include "poro/geometry.hpp"
#include "poro/solver.hpp"
#include "poro/types.hpp"

namespace poro {

/// Everything needed to time-step the fine model for one configuration.
struct Problem {
  FineMesh mesh;
  FractureSet fr;
  CoarseGrid cg;
  MaterialParams mp;
  std::vector<int> sources;
  AssembledSystem sys;
};

Problem build_problem(const RunConfig& cfg);

struct ComparisonRow {
  int s = 0;
  ErrorMetrics err;
  int dof_f = 0;
  int dof_c = 0;
  double basis_time_s = 0.0;
  double coarse_time_s = 0.0;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  std::vector<std::vector<ErrorMetrics>> by_time;  // [s index][step]
  double fine_time_s = 0.0;
  int dof_f = 0;
};

/// One fine reference run plus a basis build, coarse run and error
/// evaluation per oversampling width in the configured list.
ComparisonReport run_comparison(const RunConfig& cfg);

int cmd_fine(const RunConfig& cfg);
int cmd_basis(const RunConfig& cfg);
int cmd_coarse(const RunConfig& cfg);
int cmd_compare(const RunConfig& cfg);

struct GenFracOptions {
  unsigned long long seed = 7;
  int count = 30;
  double length_min = 0.08;
  double length_max = 0.22;
  double width = 1.0;
  double height = 1.0;
  std::string out = "fractures.txt";
};

/// Uniformly random straight fractures (center, angle, length), identical
/// across platforms for a fixed seed.
std::vector<std::vector<Vec2>> generate_fractures(const GenFracOptions& opt);

int cmd_genfrac(const GenFracOptions& opt);

}  // namespace poro

#endif
