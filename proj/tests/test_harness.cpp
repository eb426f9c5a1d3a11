// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "poro/config.hpp"
#include "poro/driver.hpp"
#include "poro/io.hpp"

using namespace poro;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("poro2d_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  REQUIRE(is.good());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// tiny, fast run description
RunConfig tiny_config(const fs::path& out) {
  RunConfig cfg;
  cfg.nx = cfg.ny = 16;
  cfg.Nx = cfg.Ny = 4;
  cfg.material.n_steps = 6;
  cfg.snapshots = {2, 6};
  cfg.s = 1;
  cfg.output_dir = out.string();
  return cfg;
}

}  // namespace

TEST_CASE("config file parsing and overrides") {
  const fs::path dir = temp_dir("config");
  const fs::path file = dir / "run.cfg";
  {
    std::ofstream os(file);
    os << "# comment line\n"
       << "[mesh]\n"
       << "nx = 48\n"
       << "ny = 48\n"
       << "Nx = 8\n"
       << "Ny = 8   # trailing comment\n"
       << "[material]\n"
       << "E = 2.0e10\n"
       << "n_steps = 10\n"
       << "[upscaling]\n"
       << "s_list = 1,2,4\n"
       << "[run]\n"
       << "snapshots = 2, 5\n"
       << "output = somewhere\n";
  }
  RunConfig cfg = parse_config_file(file.string());
  CHECK(cfg.nx == 48);
  CHECK(cfg.Nx == 8);
  CHECK(cfg.material.E == 2.0e10);
  CHECK(cfg.material.n_steps == 10);
  CHECK(cfg.s_list == std::vector<int>{1, 2, 4});
  CHECK(cfg.snapshots == std::vector<int>{2, 5});
  CHECK(cfg.output_dir == "somewhere");

  set_config_value(cfg, "mesh.nx", "32");
  CHECK(cfg.nx == 32);
  CHECK_THROWS_AS(set_config_value(cfg, "mesh.bogus", "1"), ConfigError);
  CHECK_THROWS_AS(parse_config_file("/no/such/file.cfg"), ConfigError);

  {
    std::ofstream os(file);
    os << "nx 48\n";  // missing '='
  }
  CHECK_THROWS_AS(parse_config_file(file.string()), ConfigError);
}

TEST_CASE("config validation") {
  RunConfig cfg = tiny_config("out");
  CHECK_NOTHROW(cfg.validate());

  RunConfig bad = cfg;
  bad.Nx = 5;  // 16 % 5 != 0
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.fracture_file = "/no/such/fractures.txt";
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.snapshots = {99};
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.mode = "turbo";
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.material.nu = 0.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.source_cells = {4 * 4};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("default sources sit on the grid diagonal") {
  RunConfig cfg;
  cfg.Nx = cfg.Ny = 20;
  CHECK(cfg.resolved_sources() == std::vector<int>{5 * 20 + 5, 15 * 20 + 15});
  cfg.Nx = cfg.Ny = 1;
  CHECK(cfg.resolved_sources() == std::vector<int>{0});
  cfg.Nx = cfg.Ny = 4;
  cfg.source_cells = {3, 7};
  CHECK(cfg.resolved_sources() == std::vector<int>{3, 7});
}

TEST_CASE("fracture generation is deterministic per seed") {
  const fs::path dir = temp_dir("genfrac");
  GenFracOptions opt;
  opt.seed = 7;
  opt.count = 30;
  opt.out = (dir / "a.txt").string();
  CHECK(cmd_genfrac(opt) == 0);
  opt.out = (dir / "b.txt").string();
  CHECK(cmd_genfrac(opt) == 0);
  CHECK(slurp(dir / "a.txt") == slurp(dir / "b.txt"));

  // a different seed gives different bytes
  opt.seed = 8;
  opt.out = (dir / "c.txt").string();
  CHECK(cmd_genfrac(opt) == 0);
  CHECK(slurp(dir / "a.txt") != slurp(dir / "c.txt"));

  // count = 0 writes only the comment header
  opt.count = 0;
  opt.out = (dir / "empty.txt").string();
  CHECK(cmd_genfrac(opt) == 0);
  CHECK(read_fracture_file(opt.out).empty());

  const auto lines = generate_fractures({7, 30, 0.08, 0.22, 1.0, 1.0, ""});
  CHECK(lines.size() == 30);
  for (const auto& poly : lines) {
    REQUIRE(poly.size() == 2);
    const double len = (poly[1] - poly[0]).norm();
    CHECK(len >= 0.08);
    CHECK(len <= 0.22);
  }
}

TEST_CASE("fracture file round trip") {
  const fs::path dir = temp_dir("fracio");
  const std::vector<std::vector<Vec2>> polys = {
      {Vec2(0.1, 0.2), Vec2(0.3, 0.4)},
      {Vec2(0.0, 0.5), Vec2(0.5, 0.5), Vec2(0.9, 0.8)}};
  write_fracture_file((dir / "f.txt").string(), polys, "test");
  const auto back = read_fracture_file((dir / "f.txt").string());
  REQUIRE(back.size() == 2);
  REQUIRE(back[1].size() == 3);
  for (std::size_t i = 0; i < polys.size(); ++i)
    for (std::size_t k = 0; k < polys[i].size(); ++k)
      CHECK((back[i][k] - polys[i][k]).norm() == 0.0);

  {
    std::ofstream os(dir / "bad.txt");
    os << "0.1 0.2 0.3\n";  // odd coordinate count
  }
  CHECK_THROWS(read_fracture_file((dir / "bad.txt").string()));
}

TEST_CASE("cmd_fine writes snapshots and a summary with the DOF formula") {
  const fs::path dir = temp_dir("fine");
  RunConfig cfg = tiny_config(dir / "out");
  cfg.dump_blocks = true;
  CHECK(cmd_fine(cfg) == 0);

  const std::string summary = slurp(dir / "out/summary.txt");
  // fracture-free: DOF_f = cells + 2 * vertices
  const int expect = 2 * 16 * 16 + 2 * 17 * 17;
  CHECK(summary.find("DOF_f " + std::to_string(expect)) != std::string::npos);
  CHECK(fs::exists(dir / "out/fine_2.vtk"));
  CHECK(fs::exists(dir / "out/fine_6.vtk"));
  CHECK(fs::exists(dir / "out/mesh.vtk"));
  CHECK(fs::exists(dir / "out/blocks/A_m.mtx"));
  CHECK(fs::exists(dir / "out/blocks/D_xy.mtx"));

  const std::string vtk = slurp(dir / "out/fine_2.vtk");
  CHECK(vtk.find("# vtk DataFile Version 3.0") == 0);
  CHECK(vtk.find("SCALARS p_star double 1") != std::string::npos);
  CHECK(vtk.find("VECTORS u double") != std::string::npos);
  const std::string mm = slurp(dir / "out/blocks/A_m.mtx");
  CHECK(mm.find("%%MatrixMarket matrix coordinate real general") == 0);
}

TEST_CASE("cmd_fine rejects a missing fracture file with exit code 2") {
  const fs::path dir = temp_dir("fine_bad");
  RunConfig cfg = tiny_config(dir / "out");
  cfg.fracture_file = (dir / "missing.txt").string();
  CHECK(cmd_fine(cfg) == 2);
  CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("cmd_basis and cmd_coarse produce their artifacts") {
  const fs::path dir = temp_dir("basis");
  GenFracOptions gf;
  gf.seed = 5;
  gf.count = 4;
  gf.out = (dir / "fr.txt").string();
  REQUIRE(cmd_genfrac(gf) == 0);

  RunConfig cfg = tiny_config(dir / "out");
  cfg.fracture_file = gf.out;
  CHECK(cmd_basis(cfg) == 0);
  CHECK(fs::exists(dir / "out/summary.txt"));
  const std::string summary = slurp(dir / "out/summary.txt");
  CHECK(summary.find("DOF_c ") != std::string::npos);
  bool found_basis_vtk = false;
  for (const auto& e : fs::directory_iterator(dir / "out"))
    if (e.path().filename().string().rfind("basis_cell", 0) == 0)
      found_basis_vtk = true;
  CHECK(found_basis_vtk);

  RunConfig ccfg = tiny_config(dir / "out2");
  ccfg.fracture_file = gf.out;
  CHECK(cmd_coarse(ccfg) == 0);
  CHECK(fs::exists(dir / "out2/coarse_2.vtk"));
  CHECK(fs::exists(dir / "out2/summary.txt"));
}

namespace {

// strips the trailing wall-time column so timing noise does not enter the
// determinism comparison
std::string strip_last_column(const std::string& csv) {
  std::stringstream in(csv), out;
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.rfind(',');
    out << line.substr(0, pos) << "\n";
  }
  return out.str();
}

}  // namespace

TEST_CASE("cmd_compare emits consistent deterministic tables") {
  const fs::path dir = temp_dir("compare");
  GenFracOptions gf;
  gf.seed = 3;
  gf.count = 3;
  gf.out = (dir / "fr.txt").string();
  REQUIRE(cmd_genfrac(gf) == 0);

  RunConfig cfg = tiny_config(dir / "out");
  cfg.fracture_file = gf.out;
  cfg.s_list = {1, 2};
  REQUIRE(cmd_compare(cfg) == 0);

  const std::string table = slurp(dir / "out/errors.csv");
  std::stringstream ss(table);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "s,e_p,e_ux,e_uy,DOF_f,DOF_c,wall_time_s");

  Problem p = build_problem(cfg);
  const int dof_f = p.mesh.num_cells() + p.fr.num_segments() +
                    2 * p.mesh.num_vertices();
  const int dof_c = p.cg.dof_c();
  int rows = 0;
  std::string line;
  while (std::getline(ss, line)) {
    ++rows;
    std::stringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    REQUIRE(fields.size() == 7);
    CHECK(std::stoi(fields[4]) == dof_f);
    CHECK(std::stoi(fields[5]) == dof_c);
  }
  CHECK(rows == 2);

  const std::string by_time = slurp(dir / "out/errors_by_time.csv");
  CHECK(std::count(by_time.begin(), by_time.end(), '\n') ==
        1 + 2 * cfg.material.n_steps);

  // a second identical run reproduces everything except wall times
  RunConfig cfg2 = cfg;
  cfg2.output_dir = (dir / "out_again").string();
  REQUIRE(cmd_compare(cfg2) == 0);
  CHECK(strip_last_column(slurp(dir / "out/errors.csv")) ==
        strip_last_column(slurp(dir / "out_again/errors.csv")));
  CHECK(slurp(dir / "out/errors_by_time.csv") ==
        slurp(dir / "out_again/errors_by_time.csv"));

  // single-entry list degenerates to one comparison row
  RunConfig cfg3 = cfg;
  cfg3.s_list = {1};
  cfg3.output_dir = (dir / "out_single").string();
  REQUIRE(cmd_compare(cfg3) == 0);
  const std::string single = slurp(dir / "out_single/errors.csv");
  CHECK(std::count(single.begin(), single.end(), '\n') == 2);
}

TEST_CASE("stored reference geometries load and match their DOF accounting") {
  const std::string path30 = std::string(PORO2D_DATA_DIR) + "/fractures_30.txt";
  const std::string path60 = std::string(PORO2D_DATA_DIR) + "/fractures_60.txt";
  const auto lines30 = read_fracture_file(path30);
  const auto lines60 = read_fracture_file(path60);
  CHECK(lines30.size() == 30);
  CHECK(lines60.size() == 60);

  // regression on the stored geometry: the fracture mesh has the same
  // order of magnitude as the reference setup (about a thousand cells)
  const FineMesh mesh = build_fine_mesh(120, 120, 1.0, 1.0);
  const FractureSet fr = embed_fractures(mesh, lines30);
  CHECK(fr.num_segments() == 1123);
  const CoarseGrid cg = build_coarse_grid(mesh, fr, 20, 20);
  CHECK(cg.dof_c() == 3 * 400 + cg.total_continua());
  CHECK(cg.total_continua() == 131);
}
