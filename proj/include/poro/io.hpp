// SPDX-License-Identifier: Apache-2.0

#ifndef PORO_IO_HPP
#define PORO_IO_HPP

#include <string>
#include <utility>
#include <vector>

#include "poro/geometry.hpp"
#include "poro/types.hpp"

namespace poro {

using NamedField = std::pair<std::string, Vec>;

/// Legacy-VTK ASCII unstructured grid of the triangulation with optional
/// per-cell scalars and a per-vertex displacement vector field.
void write_vtk_mesh(const std::string& path, const FineMesh& mesh,
                    const std::vector<NamedField>& cell_fields = {},
                    const std::vector<NamedField>& point_fields = {},
                    const Vec* u_x = nullptr, const Vec* u_y = nullptr);

/// Same format for the fracture mesh, segments as VTK line cells.
void write_vtk_fracture(const std::string& path, const FractureSet& fr,
                        const std::vector<NamedField>& cell_fields = {});

/// Matrix-market coordinate text export.
void write_matrix_market(const std::string& path, const SpMat& A);

/// Fracture geometry files: one polyline per line as x1 y1 x2 y2 [x3 y3 ...],
/// '#' starts a comment.
std::vector<std::vector<Vec2>> read_fracture_file(const std::string& path);
void write_fracture_file(const std::string& path,
                         const std::vector<std::vector<Vec2>>& polylines,
                         const std::string& header_comment = "");

/// Deterministic shortest-roundtrip double formatting used in all text
/// outputs.
std::string format_double(double v);

}  // namespace poro

#endif
