#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "ionshape/io.hpp"
#include "ionshape/mesh.hpp"
#include "test_support.hpp"

using namespace ionshape;
using testsupport::unit_square_two;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = std::string("/tmp/") + name;
  std::ofstream out(path);
  out << content;
  return path;
}

// Shoelace area of the (single) boundary loop.
double shoelace_area(const Mesh& mesh) {
  std::map<int, int> next;
  for (const auto& e : mesh.boundary_edges) next[e.v[0]] = e.v[1];
  const int start = mesh.boundary_edges.front().v[0];
  double acc = 0.0;
  int v = start;
  do {
    const int w = next.at(v);
    acc += mesh.vertices[v][0] * mesh.vertices[w][1] -
           mesh.vertices[w][0] * mesh.vertices[v][1];
    v = w;
  } while (v != start);
  return 0.5 * acc;
}

}  // namespace

TEST_CASE("load_mesh reads the smallest valid square") {
  const std::string path = write_temp(
      "mesh_ok.msh",
      "4 2 4\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n3 0 IN\n1 2 G2\n0 1 G1\n2 3 G1\n");
  const Mesh m = load_mesh(path);
  CHECK(m.vertex_count() == 4);
  CHECK(m.triangle_count() == 2);
  CHECK(m.boundary_nodes(BoundaryLabel::GammaIn) == std::vector<int>{0, 3});
  CHECK(m.boundary_nodes(BoundaryLabel::Gamma2) == std::vector<int>{1, 2});
}

TEST_CASE("load_mesh rejects reversed orientation with a located error") {
  const std::string path = write_temp(
      "mesh_bad.msh",
      "4 2 4\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 3 2\n3 0 IN\n1 2 G2\n0 1 G1\n2 3 G1\n");
  try {
    load_mesh(path);
    FAIL("expected an error");
  } catch (const MeshError& e) {
    CHECK(std::string(e.what()).find("inverted triangle") != std::string::npos);
    CHECK(e.element() == 1);
  }
}

TEST_CASE("load_mesh rejects an unlabeled boundary edge") {
  const std::string path = write_temp(
      "mesh_unlabeled.msh",
      "4 2 3\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n3 0 IN\n1 2 G2\n0 1 G1\n");
  CHECK_THROWS_WITH_AS(load_mesh(path),
                       doctest::Contains("unlabeled boundary edge"), MeshError);
}

TEST_CASE("generated square near the reference element count is accepted") {
  const Mesh m = io::generate_square(55);
  CHECK(std::abs(m.triangle_count() - 5938) <= 0.1 * 5938);
  CHECK(quality(m).min_angle > 0.0);
}

TEST_CASE("mesh file round trip") {
  const Mesh m = io::generate_comb(14);
  save_mesh("/tmp/comb_roundtrip.msh", m);
  const Mesh r = load_mesh("/tmp/comb_roundtrip.msh");
  REQUIRE(r.vertex_count() == m.vertex_count());
  REQUIRE(r.triangle_count() == m.triangle_count());
  CHECK(r.design_region == m.design_region);
  for (int i = 0; i < m.vertex_count(); ++i) {
    CHECK(r.vertices[i][0] == m.vertices[i][0]);
    CHECK(r.vertices[i][1] == m.vertices[i][1]);
  }
}

TEST_CASE("domain_volume on squares") {
  Mesh m = unit_square_two();
  CHECK(domain_volume(m) == doctest::Approx(1.0).epsilon(1e-14));
  for (auto& v : m.vertices) {
    v[0] *= 2.0;
    v[1] *= 2.0;
  }
  CHECK(domain_volume(m) == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("comb area matches the shoelace oracle") {
  const Mesh m = io::generate_comb(14);
  CHECK(domain_volume(m) == doctest::Approx(shoelace_area(m)).epsilon(1e-12));
}

TEST_CASE("boundary measures of the unit square") {
  const Mesh m = unit_square_two();
  CHECK(boundary_measure(m, std::nullopt) == doctest::Approx(4.0));
  CHECK(boundary_measure(m, BoundaryLabel::Gamma2) == doctest::Approx(1.0));
}

TEST_CASE("wavy Gamma_2 length matches the arc-length quadrature oracle") {
  const Mesh m = io::generate_wavy(15);
  const double measured = boundary_measure(m, BoundaryLabel::Gamma2);

  // Composite Simpson of sqrt(1 + x'(t)^2) over [0, 1.4].
  auto integrand = [](double t) {
    const double d = 0.05 * (55.0 / 7.0) * M_PI * std::cos(55.0 / 7.0 * M_PI * t);
    return std::sqrt(1.0 + d * d);
  };
  const int n = 20000;
  const double h = 1.4 / n;
  double arc = integrand(0.0) + integrand(1.4);
  for (int i = 1; i < n; ++i) arc += (i % 2 ? 4.0 : 2.0) * integrand(i * h);
  arc *= h / 3.0;

  CHECK(std::abs(measured - arc) / arc < 0.01);
}

TEST_CASE("quality of the criss-cross unit square") {
  const Mesh m = io::generate_square(9);
  const QualityReport q = quality(m, 0.0);
  CHECK(q.min_angle == doctest::Approx(M_PI / 4).epsilon(1e-12));
  CHECK(q.max_angle == doctest::Approx(M_PI / 2).epsilon(1e-12));
  CHECK(q.is_weakly_acute);
}

TEST_CASE("quality of a single equilateral triangle") {
  Mesh m;
  m.vertices = {{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2.0}};
  m.triangles = {{0, 1, 2}};
  m.boundary_edges = {{{0, 1}, BoundaryLabel::Gamma1},
                      {{1, 2}, BoundaryLabel::Gamma2},
                      {{2, 0}, BoundaryLabel::GammaIn}};
  m.validate_and_canonicalize();
  const QualityReport q = quality(m);
  CHECK(q.min_angle == doctest::Approx(M_PI / 3).epsilon(1e-12));
  CHECK(q.max_angle == doctest::Approx(M_PI / 3).epsilon(1e-12));
}

TEST_CASE("quality matches a trigonometric oracle on a jittered mesh") {
  Mesh m = io::generate_square(7);
  auto rng = testsupport::seeded_rng(42);
  std::uniform_real_distribution<double> dist(-0.04, 0.04);
  std::vector<char> fixed(m.vertex_count(), 0);
  for (const int v : m.all_boundary_nodes()) fixed[v] = 1;
  for (int v = 0; v < m.vertex_count(); ++v)
    if (!fixed[v]) {
      m.vertices[v][0] += dist(rng);
      m.vertices[v][1] += dist(rng);
    }
  m.validate_and_canonicalize();

  // Law-of-cosines recomputation, independent of the atan2 path.
  double min_angle = 10.0, max_angle = 0.0;
  for (const Tri& tr : m.triangles) {
    double side[3];
    for (int k = 0; k < 3; ++k) {
      const Vec2 a = m.vertices[tr[(k + 1) % 3]];
      const Vec2 b = m.vertices[tr[(k + 2) % 3]];
      side[k] = std::hypot(a[0] - b[0], a[1] - b[1]);
    }
    for (int k = 0; k < 3; ++k) {
      const double opposite = side[k], u = side[(k + 1) % 3], v = side[(k + 2) % 3];
      const double ang =
          std::acos((u * u + v * v - opposite * opposite) / (2.0 * u * v));
      min_angle = std::min(min_angle, ang);
      max_angle = std::max(max_angle, ang);
    }
  }
  const QualityReport q = quality(m);
  CHECK(q.min_angle == doctest::Approx(min_angle).epsilon(1e-10));
  CHECK(q.max_angle == doctest::Approx(max_angle).epsilon(1e-10));
}

TEST_CASE("characteristic length") {
  // Arithmetic of the formula at the reference element count.
  CHECK(std::sqrt(4.0 / (std::sqrt(3.0) * 5938)) ==
        doctest::Approx(0.01972).epsilon(1e-3));

  const Mesh m = io::generate_square(25);
  const double len = characteristic_length(m);
  // Edge of the equilateral triangle with the mean element area.
  const double mean_area = domain_volume(m) / m.triangle_count();
  CHECK(std::sqrt(3.0) / 4.0 * len * len == doctest::Approx(mean_area).epsilon(1e-12));

  Mesh scaled = m;
  for (auto& v : scaled.vertices) {
    v[0] *= 3.0;
    v[1] *= 3.0;
  }
  CHECK(characteristic_length(scaled) == doctest::Approx(3.0 * len).epsilon(1e-12));
}

TEST_CASE("deform with zero step is the identity") {
  const Mesh m = io::generate_square(6);
  const std::vector<Vec2> zeta = testsupport::nodal_field(
      m, [](double x, double y) { return Vec2{y, -x}; });
  const Mesh d = deform(m, zeta, 0.0);
  CHECK(d.vertices == m.vertices);
  CHECK(d.triangles == m.triangles);
  for (std::size_t i = 0; i < m.boundary_edges.size(); ++i) {
    CHECK(d.boundary_edges[i].v == m.boundary_edges[i].v);
    CHECK(d.boundary_edges[i].label == m.boundary_edges[i].label);
  }
}

TEST_CASE("rigid translation preserves area and connectivity") {
  const Mesh m = io::generate_square(6);
  const std::vector<Vec2> ones(m.vertex_count(), Vec2{1.0, 0.0});
  const Mesh d = deform(m, ones, 0.5);
  CHECK(d.triangles == m.triangles);
  for (int i = 0; i < m.vertex_count(); ++i) {
    CHECK(d.vertices[i][0] == doctest::Approx(m.vertices[i][0] + 0.5).epsilon(1e-15));
    CHECK(d.vertices[i][1] == m.vertices[i][1]);
  }
  CHECK(domain_volume(d) == doctest::Approx(domain_volume(m)).epsilon(1e-12));
}

TEST_CASE("first-order area expansion under an outward field") {
  const Mesh m = io::generate_square(9);
  const std::vector<Vec2> radial = testsupport::nodal_field(
      m, [](double x, double y) { return Vec2{x - 0.5, y - 0.5}; });
  const double delta = 1e-3;
  const Mesh d = deform(m, radial, delta);
  // d(vol) = int div(zeta) = 2*area for this field.
  const double grown = domain_volume(d) - domain_volume(m);
  CHECK(std::abs(grown - delta * 2.0) <= 1.5 * delta * delta);
}

TEST_CASE("deformation that inverts a triangle reports the element") {
  const Mesh m = unit_square_two();
  std::vector<Vec2> zeta(m.vertex_count(), Vec2{0, 0});
  zeta[0] = {2.0, 2.0};  // drives vertex 0 across the diagonal
  try {
    deform(m, zeta, 1.0);
    FAIL("expected inversion");
  } catch (const MeshError& e) {
    CHECK(e.element() >= 0);
  }
}

TEST_CASE("sigmoid filter formula values") {
  Mesh m;
  m.vertices = {{0, 0}, {1, 0}, {1, 0.5}, {0, 1}};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  m.boundary_edges = {{{3, 0}, BoundaryLabel::GammaIn},
                      {{1, 2}, BoundaryLabel::Gamma2},
                      {{0, 1}, BoundaryLabel::Gamma1},
                      {{2, 3}, BoundaryLabel::Gamma1}};
  m.validate_and_canonicalize();
  const std::vector<Vec2> ones(m.vertex_count(), Vec2{1.0, 1.0});

  const std::vector<Vec2> filtered = sigmoid_filter(m, ones, 100.0, 0.0, 1.0);
  CHECK(filtered[0][1] == doctest::Approx(0.5).epsilon(1e-14));  // y = y_min
  CHECK(filtered[2][1] ==
        doctest::Approx(1.0 / (1.0 + std::exp(-50.0))).epsilon(1e-15));  // midheight
  for (const auto& v : filtered) CHECK(v[0] == 1.0);  // first component untouched

  const std::vector<Vec2> zeros(m.vertex_count(), Vec2{0.7, 0.0});
  const std::vector<Vec2> same = sigmoid_filter(m, zeros, 100.0, 0.0, 1.0);
  for (int i = 0; i < m.vertex_count(); ++i) {
    CHECK(same[i][0] == zeros[i][0]);
    CHECK(same[i][1] == 0.0);
  }
}

TEST_CASE("sigmoid filter approaches identity in the interior for large M") {
  const Mesh m = io::generate_square(9);
  const std::vector<Vec2> field = testsupport::nodal_field(
      m, [](double x, double y) { return Vec2{x, 1.0 + y}; });
  const std::vector<Vec2> filtered = sigmoid_filter(m, field, 1e6, 0.0, 1.0);
  for (int i = 0; i < m.vertex_count(); ++i) {
    const double y = m.vertices[i][1];
    if (y > 0.05 && y < 0.95) {
      CHECK(filtered[i][1] == doctest::Approx(field[i][1]).epsilon(1e-12));
    }
    CHECK(filtered[i][0] == field[i][0]);
  }
}

TEST_CASE("smoothing is a fixed point on the structured mesh") {
  const Mesh m = io::generate_square(8);
  const Mesh s = smooth_interior(m, 3);
  for (int i = 0; i < m.vertex_count(); ++i) {
    CHECK(std::abs(s.vertices[i][0] - m.vertices[i][0]) < 1e-12);
    CHECK(std::abs(s.vertices[i][1] - m.vertices[i][1]) < 1e-12);
  }
}

TEST_CASE("smoothing improves a perturbed interior vertex and pins the boundary") {
  Mesh m = io::generate_square(8);
  std::vector<char> fixed(m.vertex_count(), 0);
  for (const int v : m.all_boundary_nodes()) fixed[v] = 1;
  int victim = -1;
  for (int v = 0; v < m.vertex_count() && victim < 0; ++v)
    if (!fixed[v]) victim = v;
  REQUIRE(victim >= 0);
  m.vertices[victim][0] += 0.09;
  m.vertices[victim][1] += 0.05;
  m.validate_and_canonicalize();

  const double before = quality(m).min_angle;
  const Mesh s = smooth_interior(m, 2);
  CHECK(quality(s).min_angle > before);
  for (const int v : m.all_boundary_nodes()) {
    CHECK(s.vertices[v][0] == m.vertices[v][0]);
    CHECK(s.vertices[v][1] == m.vertices[v][1]);
  }
}
