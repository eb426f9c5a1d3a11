// SPDX-License-Identifier: Apache-2.0

#ifndef PORO_GEOMETRY_HPP
#define PORO_GEOMETRY_HPP

#include <array>
#include <vector>

#include "poro/types.hpp"

namespace poro {

/// Interior face between two fine cells, carrying the TPFA geometry:
/// interface length |E_ij| and distance between the two cell centers.
struct Face {
  int cell_a = -1;
  int cell_b = -1;
  double interface_length = 0.0;
  double center_distance = 0.0;
};

/// Structured triangulation of the rectangle [0,width] x [0,height].
/// Each of the nx*ny grid rectangles is split along its lower-left to
/// upper-right diagonal into two triangles.
struct FineMesh {
  int nx = 0;
  int ny = 0;
  double width = 0.0;
  double height = 0.0;
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> cells;
  std::vector<Face> faces;
  std::vector<double> cell_area;
  std::vector<Vec2> cell_center;
  // boundary vertex ids by side
  std::vector<int> left, right, bottom, top;

  int num_cells() const { return static_cast<int>(cells.size()); }
  int num_vertices() const { return static_cast<int>(vertices.size()); }
  double hx() const { return width / nx; }
  double hy() const { return height / ny; }
};

FineMesh build_fine_mesh(int nx, int ny, double width, double height);

/// Index of the triangle whose closure contains p. Points on shared edges
/// resolve to the smallest containing cell index.
int locate_cell(const FineMesh& mesh, const Vec2& p);

/// One fracture mesh cell: a straight piece of a fracture polyline that
/// lies inside a single fine cell.
struct Segment {
  int network = -1;
  Vec2 a, b;
  double length = 0.0;
  int host_cell = -1;
  Vec2 midpoint() const { return 0.5 * (a + b); }
};

/// Connectivity link between two segments of the same network that share
/// an endpoint; center_distance is the distance between their midpoints.
struct SegmentLink {
  int l = -1;
  int n = -1;
  double center_distance = 0.0;
};

/// Lower-dimensional fracture mesh overlaid on a FineMesh.
struct FractureSet {
  std::vector<std::vector<Vec2>> networks;  // input polylines as given
  std::vector<Segment> segments;
  std::vector<SegmentLink> adjacency;
  std::vector<int> dropped_networks;  // polylines entirely outside the domain

  int num_networks() const { return static_cast<int>(networks.size()); }
  int num_segments() const { return static_cast<int>(segments.size()); }
};

FractureSet embed_fractures(const FineMesh& mesh,
                            const std::vector<std::vector<Vec2>>& polylines);

/// Uniform Nx x Ny partition of the domain into rectangular coarse cells.
/// continua[j] lists, for coarse cell K_j, the local fracture networks as
/// connected components of the segments hosted in K_j; each component is a
/// sorted list of segment ids.
struct CoarseGrid {
  int Nx = 0;
  int Ny = 0;
  double width = 0.0;
  double height = 0.0;
  std::vector<int> fine_to_coarse;                  // per fine cell
  std::vector<int> segment_to_coarse;               // per segment
  std::vector<std::vector<std::vector<int>>> continua;

  int num_cells() const { return Nx * Ny; }
  int num_continua(int j) const {
    return static_cast<int>(continua[j].size());
  }
  int total_continua() const;
  /// Coarse DOF count: 3 per cell (p_m, u_x, u_y) plus one per continuum.
  int dof_c() const { return 3 * num_cells() + total_continua(); }
  double cell_area() const { return width / Nx * (height / Ny); }
  int cell_ix(int j) const { return j % Nx; }
  int cell_iy(int j) const { return j / Nx; }
};

CoarseGrid build_coarse_grid(const FineMesh& mesh, const FractureSet& fr,
                             int Nx, int Ny);

/// Coarse cells within Chebyshev distance s of cell i, clipped to the grid.
std::vector<int> oversample(const CoarseGrid& cg, int i, int s);

}  // namespace poro

#endif
