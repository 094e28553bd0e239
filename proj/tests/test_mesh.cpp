#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "emsim/mesh.hpp"

using namespace emsim;

TEST_CASE("square grid: smallest grid") {
  const Mesh m = generate_square_grid(1.0, 1);
  CHECK(m.node_count() == 4);
  CHECK(m.triangle_count() == 2);
  CHECK(m.total_area() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("square grid: 2N^2 triangles, (N+1)^2 nodes") {
  const Mesh m5 = generate_square_grid(1.0, 5);
  CHECK(m5.triangle_count() == 50);
  CHECK(m5.node_count() == 36);
  for (int n = 1; n <= 64; n *= 2) {
    const Mesh m = generate_square_grid(2.5, n);
    CHECK(m.node_count() == static_cast<std::size_t>((n + 1) * (n + 1)));
    CHECK(m.triangle_count() == static_cast<std::size_t>(2 * n * n));
    CHECK(m.total_area() == doctest::Approx(6.25).epsilon(1e-10));
    CHECK(m.h == doctest::Approx(2.5 / n * std::sqrt(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("square grid: 80x80 with ~5000 triangles") {
  const Mesh m = generate_square_grid(80.0, 50);
  CHECK(m.triangle_count() == 5000);
  CHECK(m.node_count() == 2601);
  CHECK(m.h == doctest::Approx(1.6 * std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("import: unit reference triangle") {
  std::istringstream in("3 1 3\n0 0 1\n1 0 1\n0 1 1\n1 2 3 0\n1 2 1\n2 3 1\n3 1 1\n");
  const Mesh m = import_mesh(in);
  CHECK(m.node_count() == 3);
  CHECK(m.triangle_count() == 1);
  CHECK(m.total_area() == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("import: collinear triangle rejected") {
  std::istringstream in("3 1 0\n0 0 1\n1 1 1\n2 2 1\n1 2 3 0\n");
  CHECK_THROWS_AS(import_mesh(in), MeshError);
}

TEST_CASE("import: clockwise triangle rejected with its index") {
  std::istringstream in("3 1 0\n0 0 1\n0 1 1\n1 0 1\n1 2 3 0\n");
  try {
    import_mesh(in);
    FAIL("expected MeshError");
  } catch (const MeshError& e) {
    CHECK(std::string(e.what()).find("triangle") != std::string::npos);
  }
}

TEST_CASE("import: parse error carries line number") {
  std::istringstream in("3 1 0\n0 0 1\nnot-a-number 0 1\n0 1 1\n1 2 3 0\n");
  try {
    import_mesh(in);
    FAIL("expected MeshError");
  } catch (const MeshError& e) {
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
}

TEST_CASE("export/import round trip is the identity") {
  const Mesh m = generate_square_grid(1.0, 5);
  std::ostringstream out;
  export_mesh(m, out);
  std::istringstream in(out.str());
  const Mesh back = import_mesh(in);
  REQUIRE(back.node_count() == m.node_count());
  REQUIRE(back.triangle_count() == m.triangle_count());
  for (std::size_t i = 0; i < m.node_count(); ++i) {
    CHECK(back.nodes[i][0] == m.nodes[i][0]);
    CHECK(back.nodes[i][1] == m.nodes[i][1]);
  }
  for (std::size_t t = 0; t < m.triangle_count(); ++t)
    CHECK(back.triangles[t] == m.triangles[t]);
}

TEST_CASE("barycenters") {
  std::istringstream in("3 1 0\n0 0 1\n1 0 1\n0 1 1\n1 2 3 0\n");
  const Mesh ref = import_mesh(in);
  const auto g = barycenters(ref);
  CHECK(g[0][0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(g[0][1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  std::istringstream in2("3 1 0\n2 3 1\n3 3 1\n2 4 1\n1 2 3 0\n");
  const auto g2 = barycenters(import_mesh(in2));
  CHECK(g2[0][0] == doctest::Approx(1.0 / 3.0 + 2.0).epsilon(1e-15));
  CHECK(g2[0][1] == doctest::Approx(1.0 / 3.0 + 3.0).epsilon(1e-15));

  const Mesh grid = generate_square_grid(1.0, 5);
  for (const auto& p : barycenters(grid)) {
    CHECK(p[0] > 0.0);
    CHECK(p[0] < 1.0);
    CHECK(p[1] > 0.0);
    CHECK(p[1] < 1.0);
  }
}

TEST_CASE("regularity check") {
  const Mesh grid = generate_square_grid(1.0, 5);
  CHECK(check_regularity(grid, 1.0));
  CHECK_FALSE(check_regularity(grid, 0.01));

  std::istringstream in("3 1 0\n0 0 1\n1 0 1\n0 1 1\n1 2 3 0\n");
  const Mesh ref = import_mesh(in);
  // max vertex-barycenter distance sqrt(5)/3 < h = sqrt(2)
  CHECK(check_regularity(ref, 1.0));
  CHECK(ref.rho == doctest::Approx(std::sqrt(5.0) / 3.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("periodic map: N=1 collapses corners") {
  const Mesh m = generate_square_grid(1.0, 1);
  const PeriodicMap pm = periodic_node_map(m, 1.0);
  CHECK(pm.reduced_dof_count == 1);
  for (int i = 0; i < 4; ++i) CHECK(pm.master(i) == pm.master(0));
}

TEST_CASE("periodic map: N=2 lattice by hand") {
  const Mesh m = generate_square_grid(1.0, 2);
  CHECK(m.node_count() == 9);
  const PeriodicMap pm = periodic_node_map(m, 1.0);
  CHECK(pm.reduced_dof_count == 4);
  // idempotence of master lookup
  for (std::size_t i = 0; i < m.node_count(); ++i)
    CHECK(pm.master(pm.master(static_cast<int>(i))) == pm.master(static_cast<int>(i)));
  // reduced count formula (N+1)^2 - (2N+1)
  for (int n : {3, 4, 8}) {
    const Mesh g = generate_square_grid(2.0, n);
    CHECK(periodic_node_map(g, 2.0).reduced_dof_count == (n + 1) * (n + 1) - (2 * n + 1));
  }
}

TEST_CASE("periodic map: perturbed boundary node has no partner") {
  Mesh m = generate_square_grid(1.0, 2);
  // shift a non-corner boundary node off the lattice
  for (std::size_t i = 0; i < m.node_count(); ++i) {
    auto& p = m.nodes[i];
    if (p[1] == 0.0 && p[0] == 0.5) {
      p[0] = 0.43;
      break;
    }
  }
  CHECK_THROWS_AS(periodic_node_map(m, 1.0), MeshError);
}
