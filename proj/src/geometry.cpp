// SPDX-License-Identifier: Apache-2.0

#include "poro/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <tuple>
#include <utility>

namespace poro {

FineMesh build_fine_mesh(int nx, int ny, double width, double height) {
  if (nx < 1 || ny < 1)
    throw std::invalid_argument("build_fine_mesh: nx and ny must be >= 1");
  if (width <= 0.0 || height <= 0.0)
    throw std::invalid_argument("build_fine_mesh: domain dimensions must be positive");

  FineMesh m;
  m.nx = nx;
  m.ny = ny;
  m.width = width;
  m.height = height;
  const double hx = width / nx;
  const double hy = height / ny;

  m.vertices.reserve((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      m.vertices.emplace_back(i == nx ? width : i * hx,
                              j == ny ? height : j * hy);

  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };

  // Two triangles per rectangle, split along the lower-left to upper-right
  // diagonal: lower cell (v00, v10, v11), upper cell (v00, v11, v01).
  m.cells.reserve(2 * nx * ny);
  m.cell_area.reserve(2 * nx * ny);
  m.cell_center.reserve(2 * nx * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j);
      const int v11 = vid(i + 1, j + 1), v01 = vid(i, j + 1);
      m.cells.push_back({v00, v10, v11});
      m.cells.push_back({v00, v11, v01});
    }
  }
  for (const auto& c : m.cells) {
    const Vec2& a = m.vertices[c[0]];
    const Vec2& b = m.vertices[c[1]];
    const Vec2& d = m.vertices[c[2]];
    m.cell_area.push_back(0.5 * std::abs((b.x() - a.x()) * (d.y() - a.y()) -
                                         (d.x() - a.x()) * (b.y() - a.y())));
    m.cell_center.push_back((a + b + d) / 3.0);
  }

  auto lower = [nx](int i, int j) { return 2 * (j * nx + i); };
  auto upper = [nx](int i, int j) { return 2 * (j * nx + i) + 1; };
  auto add_face = [&](int ca, int cb, double len) {
    Face f;
    f.cell_a = ca;
    f.cell_b = cb;
    f.interface_length = len;
    f.center_distance = (m.cell_center[ca] - m.cell_center[cb]).norm();
    m.faces.push_back(f);
  };

  const double diag = std::hypot(hx, hy);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      add_face(lower(i, j), upper(i, j), diag);
      if (i + 1 < nx) add_face(lower(i, j), upper(i + 1, j), hy);
      if (j + 1 < ny) add_face(upper(i, j), lower(i, j + 1), hx);
    }
  }

  for (int j = 0; j <= ny; ++j) {
    m.left.push_back(vid(0, j));
    m.right.push_back(vid(nx, j));
  }
  for (int i = 0; i <= nx; ++i) {
    m.bottom.push_back(vid(i, 0));
    m.top.push_back(vid(i, ny));
  }
  return m;
}

namespace {

bool in_triangle_closed(const FineMesh& mesh, int cell, const Vec2& p,
                        double eps) {
  const auto& c = mesh.cells[cell];
  for (int e = 0; e < 3; ++e) {
    const Vec2& a = mesh.vertices[c[e]];
    const Vec2& b = mesh.vertices[c[(e + 1) % 3]];
    const double cross = (b.x() - a.x()) * (p.y() - a.y()) -
                         (b.y() - a.y()) * (p.x() - a.x());
    if (cross < -eps) return false;  // cells are CCW
  }
  return true;
}

}  // namespace

int locate_cell(const FineMesh& mesh, const Vec2& p) {
  const double hx = mesh.hx(), hy = mesh.hy();
  const double x = std::clamp(p.x(), 0.0, mesh.width);
  const double y = std::clamp(p.y(), 0.0, mesh.height);
  const int ix = std::clamp(static_cast<int>(std::floor(x / hx)), 0, mesh.nx - 1);
  const int iy = std::clamp(static_cast<int>(std::floor(y / hy)), 0, mesh.ny - 1);
  const double eps = 1e-12 * hx * hy;

  int best = -1;
  const Vec2 q(x, y);
  for (int j = std::max(0, iy - 1); j <= std::min(mesh.ny - 1, iy + 1); ++j) {
    for (int i = std::max(0, ix - 1); i <= std::min(mesh.nx - 1, ix + 1); ++i) {
      for (int t = 0; t < 2; ++t) {
        const int cell = 2 * (j * mesh.nx + i) + t;
        if (in_triangle_closed(mesh, cell, q, eps))
          best = (best < 0) ? cell : std::min(best, cell);
      }
    }
  }
  return best;
}

namespace {

// Liang-Barsky clip of p + t*(q-p), t in [0,1], against [0,W]x[0,H].
bool clip_to_box(const Vec2& p, const Vec2& q, double W, double H, double& t0,
                 double& t1) {
  t0 = 0.0;
  t1 = 1.0;
  const double d[2] = {q.x() - p.x(), q.y() - p.y()};
  const double lo[2] = {0.0, 0.0}, hi[2] = {W, H};
  const double s[2] = {p.x(), p.y()};
  for (int k = 0; k < 2; ++k) {
    if (d[k] == 0.0) {
      if (s[k] < lo[k] || s[k] > hi[k]) return false;
      continue;
    }
    double ta = (lo[k] - s[k]) / d[k];
    double tb = (hi[k] - s[k]) / d[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

// Parameters in (0,1) where the segment crosses any mesh line of the three
// families (vertical, horizontal, diagonal).
void crossing_params(const FineMesh& mesh, const Vec2& a, const Vec2& b,
                     std::vector<double>& out) {
  const double hx = mesh.hx(), hy = mesh.hy();
  const double guard = 1e-14;
  auto push = [&](double t) {
    if (t > guard && t < 1.0 - guard) out.push_back(t);
  };

  auto family = [&](double va, double vb) {
    // crossings of v(t) = va + t*(vb - va) with integers strictly between
    if (va == vb) return;
    const int k0 = static_cast<int>(std::ceil(std::min(va, vb)));
    const int k1 = static_cast<int>(std::floor(std::max(va, vb)));
    for (int k = k0; k <= k1; ++k) push((k - va) / (vb - va));
  };

  family(a.x() / hx, b.x() / hx);
  family(a.y() / hy, b.y() / hy);
  // diagonals lie on x/hx - y/hy = const integer
  family(a.x() / hx - a.y() / hy, b.x() / hx - b.y() / hy);
}

}  // namespace

FractureSet embed_fractures(const FineMesh& mesh,
                            const std::vector<std::vector<Vec2>>& polylines) {
  FractureSet fr;
  const double min_len = 1e-12 * std::min(mesh.hx(), mesh.hy());

  for (std::size_t pl = 0; pl < polylines.size(); ++pl) {
    const auto& poly = polylines[pl];
    std::vector<Segment> pieces;

    for (std::size_t e = 0; e + 1 < poly.size(); ++e) {
      const Vec2& p = poly[e];
      const Vec2& q = poly[e + 1];
      double c0, c1;
      if (!clip_to_box(p, q, mesh.width, mesh.height, c0, c1)) continue;
      const Vec2 P0 = (c0 == 0.0) ? p : Vec2(p + c0 * (q - p));
      const Vec2 P1 = (c1 == 1.0) ? q : Vec2(p + c1 * (q - p));
      const Vec2 D = P1 - P0;
      const double edge_len = D.norm();
      if (edge_len < min_len) continue;

      std::vector<double> ts;
      crossing_params(mesh, P0, P1, ts);
      std::sort(ts.begin(), ts.end());
      ts.erase(std::unique(ts.begin(), ts.end(),
                           [](double a, double b) { return b - a < 1e-13; }),
               ts.end());
      ts.push_back(1.0);

      // Form pieces, merging parameter slivers into their neighbor.
      std::vector<std::pair<double, double>> spans;
      double s = 0.0;
      for (std::size_t k = 0; k < ts.size(); ++k) {
        const double t = ts[k];
        const bool last = (k + 1 == ts.size());
        if ((t - s) * edge_len >= min_len) {
          spans.emplace_back(s, t);
          s = t;
        } else if (last) {
          if (!spans.empty())
            spans.back().second = t;  // absorb trailing sliver
          else
            spans.emplace_back(s, t);
          s = t;
        }
        // otherwise skip breakpoint: the sliver merges into the next piece
      }

      for (const auto& [ta, tb] : spans) {
        Segment seg;
        seg.a = (ta == 0.0) ? P0 : Vec2(P0 + ta * D);
        seg.b = (tb == 1.0) ? P1 : Vec2(P0 + tb * D);
        seg.length = (tb - ta) * edge_len;
        seg.host_cell = locate_cell(mesh, P0 + 0.5 * (ta + tb) * D);
        if (seg.host_cell < 0 || seg.length < min_len) continue;
        pieces.push_back(seg);
      }
    }

    if (pieces.empty()) {
      fr.dropped_networks.push_back(static_cast<int>(pl));
      continue;
    }
    const int net = fr.num_networks();
    fr.networks.push_back(poly);
    for (auto& seg : pieces) {
      seg.network = net;
      fr.segments.push_back(seg);
    }
  }

  // Same-network segments sharing an endpoint become adjacent.
  const double qtol = 1e-9 * std::min(mesh.hx(), mesh.hy());
  std::map<std::tuple<int, long long, long long>, std::vector<int>> buckets;
  auto key = [&](int net, const Vec2& v) {
    return std::make_tuple(net, static_cast<long long>(std::llround(v.x() / qtol)),
                           static_cast<long long>(std::llround(v.y() / qtol)));
  };
  for (int l = 0; l < fr.num_segments(); ++l) {
    buckets[key(fr.segments[l].network, fr.segments[l].a)].push_back(l);
    buckets[key(fr.segments[l].network, fr.segments[l].b)].push_back(l);
  }
  std::set<std::pair<int, int>> links;
  for (const auto& [k, segs] : buckets) {
    for (std::size_t i = 0; i < segs.size(); ++i)
      for (std::size_t j = i + 1; j < segs.size(); ++j) {
        const int l = std::min(segs[i], segs[j]);
        const int n = std::max(segs[i], segs[j]);
        if (l != n) links.insert({l, n});
      }
  }
  for (const auto& [l, n] : links) {
    SegmentLink link;
    link.l = l;
    link.n = n;
    link.center_distance =
        (fr.segments[l].midpoint() - fr.segments[n].midpoint()).norm();
    fr.adjacency.push_back(link);
  }
  return fr;
}

int CoarseGrid::total_continua() const {
  int total = 0;
  for (const auto& c : continua) total += static_cast<int>(c.size());
  return total;
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

CoarseGrid build_coarse_grid(const FineMesh& mesh, const FractureSet& fr,
                             int Nx, int Ny) {
  if (Nx < 1 || Ny < 1)
    throw std::invalid_argument("build_coarse_grid: Nx and Ny must be >= 1");
  if (mesh.nx % Nx != 0 || mesh.ny % Ny != 0)
    throw std::invalid_argument(
        "build_coarse_grid: fine resolution must be divisible by coarse");

  CoarseGrid cg;
  cg.Nx = Nx;
  cg.Ny = Ny;
  cg.width = mesh.width;
  cg.height = mesh.height;

  const double Hx = mesh.width / Nx, Hy = mesh.height / Ny;
  cg.fine_to_coarse.resize(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const Vec2& ctr = mesh.cell_center[c];
    const int ix = std::clamp(static_cast<int>(std::floor(ctr.x() / Hx)), 0, Nx - 1);
    const int iy = std::clamp(static_cast<int>(std::floor(ctr.y() / Hy)), 0, Ny - 1);
    cg.fine_to_coarse[c] = iy * Nx + ix;
  }

  cg.segment_to_coarse.resize(fr.num_segments());
  std::vector<std::vector<int>> segs_in(Nx * Ny);
  for (int l = 0; l < fr.num_segments(); ++l) {
    const int j = cg.fine_to_coarse[fr.segments[l].host_cell];
    cg.segment_to_coarse[l] = j;
    segs_in[j].push_back(l);
  }

  // Local fracture networks: connected components of the adjacency graph
  // restricted to the segments hosted in each coarse cell.
  UnionFind uf(fr.num_segments());
  for (const auto& link : fr.adjacency)
    if (cg.segment_to_coarse[link.l] == cg.segment_to_coarse[link.n])
      uf.unite(link.l, link.n);

  cg.continua.resize(Nx * Ny);
  for (int j = 0; j < Nx * Ny; ++j) {
    std::map<int, std::vector<int>> comps;  // root -> members, ordered
    for (int l : segs_in[j]) comps[uf.find(l)].push_back(l);
    for (auto& [root, members] : comps) {
      std::sort(members.begin(), members.end());
      cg.continua[j].push_back(std::move(members));
    }
  }
  return cg;
}

std::vector<int> oversample(const CoarseGrid& cg, int i, int s) {
  if (s < 0) throw std::invalid_argument("oversample: s must be >= 0");
  const int ix = cg.cell_ix(i), iy = cg.cell_iy(i);
  std::vector<int> out;
  for (int j = std::max(0, iy - s); j <= std::min(cg.Ny - 1, iy + s); ++j)
    for (int k = std::max(0, ix - s); k <= std::min(cg.Nx - 1, ix + s); ++k)
      out.push_back(j * cg.Nx + k);
  return out;
}

}  // namespace poro
