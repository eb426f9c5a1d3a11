// SPDX-License-Identifier: Apache-2.0

#include "poro/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace poro {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  return os;
}

void write_vtk_header(std::ofstream& os, const std::string& title) {
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\n"
     << "DATASET UNSTRUCTURED_GRID\n";
}

void write_cell_scalars(std::ofstream& os, const std::vector<NamedField>& fields,
                        int n) {
  if (fields.empty()) return;
  os << "CELL_DATA " << n << "\n";
  for (const auto& [name, v] : fields) {
    os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < v.size(); ++i) os << format_double(v[i]) << "\n";
  }
}

}  // namespace

void write_vtk_mesh(const std::string& path, const FineMesh& mesh,
                    const std::vector<NamedField>& cell_fields,
                    const std::vector<NamedField>& point_fields,
                    const Vec* u_x, const Vec* u_y) {
  auto os = open_out(path);
  write_vtk_header(os, "poro2d mesh");
  os << "POINTS " << mesh.num_vertices() << " double\n";
  for (const Vec2& p : mesh.vertices)
    os << format_double(p.x()) << " " << format_double(p.y()) << " 0\n";
  os << "CELLS " << mesh.num_cells() << " " << 4 * mesh.num_cells() << "\n";
  for (const auto& c : mesh.cells)
    os << "3 " << c[0] << " " << c[1] << " " << c[2] << "\n";
  os << "CELL_TYPES " << mesh.num_cells() << "\n";
  for (int i = 0; i < mesh.num_cells(); ++i) os << "5\n";

  write_cell_scalars(os, cell_fields, mesh.num_cells());

  if (!point_fields.empty() || u_x) {
    os << "POINT_DATA " << mesh.num_vertices() << "\n";
    for (const auto& [name, v] : point_fields) {
      os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (int i = 0; i < v.size(); ++i) os << format_double(v[i]) << "\n";
    }
    if (u_x && u_y) {
      os << "VECTORS u double\n";
      for (int i = 0; i < mesh.num_vertices(); ++i)
        os << format_double((*u_x)[i]) << " " << format_double((*u_y)[i])
           << " 0\n";
    }
  }
}

void write_vtk_fracture(const std::string& path, const FractureSet& fr,
                        const std::vector<NamedField>& cell_fields) {
  auto os = open_out(path);
  write_vtk_header(os, "poro2d fracture mesh");
  const int ns = fr.num_segments();
  os << "POINTS " << 2 * ns << " double\n";
  for (const Segment& s : fr.segments) {
    os << format_double(s.a.x()) << " " << format_double(s.a.y()) << " 0\n";
    os << format_double(s.b.x()) << " " << format_double(s.b.y()) << " 0\n";
  }
  os << "CELLS " << ns << " " << 3 * ns << "\n";
  for (int l = 0; l < ns; ++l) os << "2 " << 2 * l << " " << 2 * l + 1 << "\n";
  os << "CELL_TYPES " << ns << "\n";
  for (int l = 0; l < ns; ++l) os << "3\n";
  write_cell_scalars(os, cell_fields, ns);
}

void write_matrix_market(const std::string& path, const SpMat& A) {
  auto os = open_out(path);
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << A.rows() << " " << A.cols() << " " << A.nonZeros() << "\n";
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it)
      os << it.row() + 1 << " " << it.col() + 1 << " "
         << format_double(it.value()) << "\n";
}

std::vector<std::vector<Vec2>> read_fracture_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open fracture file: " + path);
  std::vector<std::vector<Vec2>> polylines;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::vector<double> vals;
    double v;
    while (ss >> v) vals.push_back(v);
    if (vals.empty()) continue;
    if (vals.size() % 2 != 0 || vals.size() < 4)
      throw std::runtime_error("fracture file " + path + ": line " +
                               std::to_string(lineno) +
                               " needs an even number (>= 4) of coordinates");
    std::vector<Vec2> poly;
    for (std::size_t k = 0; k + 1 < vals.size(); k += 2)
      poly.emplace_back(vals[k], vals[k + 1]);
    polylines.push_back(std::move(poly));
  }
  return polylines;
}

void write_fracture_file(const std::string& path,
                         const std::vector<std::vector<Vec2>>& polylines,
                         const std::string& header_comment) {
  auto os = open_out(path);
  if (!header_comment.empty()) os << "# " << header_comment << "\n";
  for (const auto& poly : polylines) {
    for (std::size_t k = 0; k < poly.size(); ++k) {
      if (k) os << " ";
      os << format_double(poly[k].x()) << " " << format_double(poly[k].y());
    }
    os << "\n";
  }
}

}  // namespace poro
