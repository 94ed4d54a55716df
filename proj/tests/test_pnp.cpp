#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ionshape/io.hpp"
#include "ionshape/pnp.hpp"
#include "test_support.hpp"

using namespace ionshape;
using fem::ScalarField;
using testsupport::unit_square_two;

namespace {

// Oracle for the inverse harmonic average on one element: Duffy-quadrature
// mean of exp(-(s*phi)), inverted.
double harmonic_oracle(const Mesh& mesh, int t, const ScalarField& phi, double s) {
  const Tri& tr = mesh.triangles[t];
  const double mean = testsupport::triangle_mean_duffy(
      [&](double l0, double l1, double l2) {
        const double p = l0 * phi[tr[0]] + l1 * phi[tr[1]] + l2 * phi[tr[2]];
        return std::exp(-(s * p));
      },
      20);
  return 1.0 / mean;
}

}  // namespace

TEST_CASE("harmonic average of a zero potential is one") {
  const Mesh m = io::generate_square(5);
  for (const double v : pnp::harmonic_average(m, ScalarField(m.vertex_count(), 0.0), 1.0))
    CHECK(v == 1.0);
}

TEST_CASE("harmonic average of a constant potential is exact") {
  const Mesh m = io::generate_square(5);
  const double a = 0.6;
  for (const double v : pnp::harmonic_average(m, ScalarField(m.vertex_count(), a), 1.0))
    CHECK(v == doctest::Approx(std::exp(a)).epsilon(1e-14));
}

TEST_CASE("harmonic average of a steep linear potential matches the quadrature oracle") {
  Mesh m;
  m.vertices = {{0, 0}, {1, 0}, {0, 1}};
  m.triangles = {{0, 1, 2}};
  m.boundary_edges = {{{0, 1}, BoundaryLabel::Gamma1},
                      {{1, 2}, BoundaryLabel::Gamma2},
                      {{2, 0}, BoundaryLabel::GammaIn}};
  m.validate_and_canonicalize();
  const ScalarField phi = {0.0, 1.0, 2.0};
  const std::vector<double> got = pnp::harmonic_average(m, phi, 1.0);
  const double oracle = harmonic_oracle(m, 0, phi, 1.0);
  CHECK(std::abs(got[0] - oracle) / oracle < 1e-8);
}

TEST_CASE("harmonic average on random smooth fields matches the oracle") {
  const Mesh m = io::generate_square(6);
  const ScalarField phi = testsupport::nodal(
      m, [](double x, double y) { return 0.8 * std::sin(3 * x) - 0.5 * y * y; });
  for (const double s : {1.0, -2.0}) {
    const std::vector<double> got = pnp::harmonic_average(m, phi, s);
    for (int t = 0; t < m.triangle_count(); ++t) {
      const double oracle = harmonic_oracle(m, t, phi, s);
      CHECK(std::abs(got[t] - oracle) / oracle < 1e-9);
    }
  }
}

TEST_CASE("harmonic average shift property") {
  const Mesh m = io::generate_square(5);
  const ScalarField phi =
      testsupport::nodal(m, [](double x, double y) { return x - 0.4 * y; });
  const double s = 1.3, shift = 0.77;
  ScalarField shifted = phi;
  for (double& v : shifted) v += shift;
  const std::vector<double> base = pnp::harmonic_average(m, phi, s);
  const std::vector<double> moved = pnp::harmonic_average(m, shifted, s);
  for (int t = 0; t < m.triangle_count(); ++t)
    CHECK(moved[t] ==
          doctest::Approx(base[t] * std::exp(s * shift)).epsilon(1e-10));
}

TEST_CASE("continuity assembly limits") {
  const Mesh m = io::generate_square(6);
  const fem::SparseMatrix plain = fem::assemble_stiffness(m);

  const fem::SparseMatrix k0 =
      pnp::assemble_continuity(m, ScalarField(m.vertex_count(), 0.0), 1);
  REQUIRE(k0.vals.size() == plain.vals.size());
  for (std::size_t k = 0; k < plain.vals.size(); ++k)
    CHECK(k0.vals[k] == doctest::Approx(plain.vals[k]).epsilon(1e-14));

  const ScalarField phi =
      testsupport::nodal(m, [](double x, double y) { return std::cos(x + y); });
  const fem::SparseMatrix kz =
      pnp::assemble_continuity(m, phi, 0);
  for (std::size_t k = 0; k < plain.vals.size(); ++k)
    CHECK(kz.vals[k] == doctest::Approx(plain.vals[k]).epsilon(1e-14));
}

TEST_CASE("continuity matrix is an M-matrix on the criss-cross mesh") {
  const Mesh m = io::generate_square(9);
  auto rng = testsupport::seeded_rng(13);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const double a = amp(rng), b = amp(rng), c = amp(rng);
    const ScalarField phi = testsupport::nodal(m, [&](double x, double y) {
      return a * std::sin(2 * x + c) + b * y * y;
    });
    const fem::SparseMatrix k = pnp::assemble_continuity(m, phi, 1);
    for (int r = 0; r < k.rows; ++r)
      for (int idx = k.row_ptr[r]; idx < k.row_ptr[r + 1]; ++idx)
        if (k.col_idx[idx] != r) CHECK(k.vals[idx] <= 1e-14);
  }
}

TEST_CASE("discrete maximum principle smoke test for constant data") {
  const Mesh m = io::generate_square(8);
  const ScalarField phi = testsupport::nodal(
      m, [](double x, double y) { return 0.7 * std::sin(2 * x) * y; });
  fem::SparseMatrix k = pnp::assemble_continuity(m, phi, 1);
  std::vector<double> rhs(m.vertex_count(), 0.0);
  const std::vector<int> gin = m.boundary_nodes(BoundaryLabel::GammaIn);
  const double cstar = 0.37;
  fem::apply_dirichlet(k, rhs, gin, std::vector<double>(gin.size(), cstar));
  const std::vector<double> sol = fem::solve_spd(k, rhs, {1e-13, 0, nullptr});
  for (const double v : sol) CHECK(v == doctest::Approx(cstar).epsilon(1e-10));
}

TEST_CASE("newton solve with zero valence reproduces the datum in one pass") {
  const Mesh m = io::generate_square(7);
  pnp::Problem prob{{0}, {1.0}, 0.5, 1.0};
  pnp::GummelParams params;
  const ScalarField phi0(m.vertex_count(), prob.g);
  const ScalarField phi = pnp::newton_poisson(
      m, prob, {ScalarField(m.vertex_count(), 1.0)}, phi0, params);
  for (const double v : phi) CHECK(v == doctest::Approx(prob.g).epsilon(1e-12));
}

TEST_CASE("symmetric electrolyte has the zero potential as exact solution") {
  const Mesh m = io::generate_square(7);
  pnp::Problem prob{{1, -1}, {0.3, 0.3}, 0.0, 1.0};
  pnp::GummelParams params;
  const std::vector<ScalarField> rho(2, ScalarField(m.vertex_count(), 0.3));
  const ScalarField phi =
      pnp::newton_poisson(m, prob, rho, ScalarField(m.vertex_count(), 0.0), params);
  for (const double v : phi) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("newton matches a damped Picard oracle") {
  const Mesh m = io::generate_square(11);
  pnp::Problem prob{{1}, {1.0}, -0.75, 1.0};
  pnp::GummelParams params;
  params.newton_tol = 1e-12;
  const std::vector<ScalarField> rho(1, ScalarField(m.vertex_count(), 1.0));

  ScalarField phi0(m.vertex_count(), 0.0);
  const std::vector<int> g2 = m.boundary_nodes(BoundaryLabel::Gamma2);
  for (const int v : g2) phi0[v] = prob.g;
  const ScalarField newton = pnp::newton_poisson(m, prob, rho, phi0, params);

  // Damped Picard on the same discrete equations.
  const fem::SparseMatrix stiff = fem::assemble_stiffness(m);
  const fem::SparseMatrix mass = fem::assemble_mass(m);
  ScalarField phi = phi0;
  for (int it = 0; it < 4000; ++it) {
    ScalarField w(m.vertex_count());
    for (int j = 0; j < m.vertex_count(); ++j) w[j] = std::exp(-phi[j]);
    fem::SparseMatrix sys = stiff;
    std::vector<double> rhs = mass.multiply(w);
    std::vector<double> bc(g2.size(), prob.g);
    fem::apply_dirichlet(sys, rhs, g2, bc);
    const std::vector<double> next = fem::solve_spd(sys, rhs, {1e-13, 0, &phi});
    double change = 0.0;
    for (int j = 0; j < m.vertex_count(); ++j) {
      const double mixed = 0.5 * phi[j] + 0.5 * next[j];
      change = std::max(change, std::abs(mixed - phi[j]));
      phi[j] = mixed;
    }
    if (change < 1e-11) break;
  }
  for (int j = 0; j < m.vertex_count(); ++j)
    CHECK(std::abs(newton[j] - phi[j]) < 1e-7);
}

TEST_CASE("gummel reproduces the electroneutral equilibrium") {
  const Mesh m = io::generate_square(15);
  pnp::Problem prob{{1, -1}, {0.5, 0.5}, 0.0, 1.0};
  pnp::GummelParams params;
  params.tau = 1e-10;
  const pnp::State state = pnp::gummel_solve(m, prob, params);
  CHECK(state.converged);
  CHECK(state.increments.size() <= 2);
  for (int j = 0; j < m.vertex_count(); ++j) {
    CHECK(std::abs(state.phi[j]) < 1e-10);
    CHECK(std::abs(state.c[0][j] - 0.5) < 1e-10);
    CHECK(std::abs(state.c[1][j] - 0.5) < 1e-10);
  }
}

TEST_CASE("single species gathers at the attracting electrode") {
  const Mesh m = io::generate_square(21);
  pnp::Problem prob{{1}, {1.0}, -0.75, 1.0};
  pnp::GummelParams params;
  const pnp::State state = pnp::gummel_solve(m, prob, params);
  REQUIRE(state.converged);

  double right_max = 0.0, left_max = 0.0;
  for (const int v : m.boundary_nodes(BoundaryLabel::Gamma2))
    right_max = std::max(right_max, state.c[0][v]);
  for (const int v : m.boundary_nodes(BoundaryLabel::GammaIn))
    left_max = std::max(left_max, state.c[0][v]);
  CHECK(right_max >= left_max);
  CHECK(right_max > 1.0);  // accumulation beyond the inlet value
}

TEST_CASE("converged states satisfy the coupled residual certificate") {
  const Mesh m = io::generate_square(15);
  pnp::Problem prob{{1, -1}, {0.6, 0.4}, -0.5, 1.0};
  pnp::GummelParams params;
  params.tau = 1e-7;
  const pnp::State state = pnp::gummel_solve(m, prob, params);
  REQUIRE(state.converged);
  CHECK(state.increments.size() >= 1);
  CHECK(state.increments.back() <= params.tau);

  const pnp::Residuals res = pnp::discrete_residuals(m, prob, state);

  // Dual (H1)^-1 norm via a CG solve on stiffness+mass.
  const fem::SparseMatrix a = fem::assemble_stiffness(m);
  const fem::SparseMatrix b = fem::assemble_mass(m);
  fem::TripletBuilder tb(a.rows, a.cols);
  for (int r = 0; r < a.rows; ++r) {
    for (int k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k)
      tb.add(r, a.col_idx[k], a.vals[k]);
    for (int k = b.row_ptr[r]; k < b.row_ptr[r + 1]; ++k)
      tb.add(r, b.col_idx[k], b.vals[k]);
  }
  const fem::SparseMatrix h1 = tb.compress();
  auto dual_norm = [&](const std::vector<double>& r) {
    const std::vector<double> y = fem::solve_spd(h1, r, {1e-10, 0, nullptr});
    double acc = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) acc += r[i] * y[i];
    return std::sqrt(std::max(0.0, acc));
  };
  CHECK(dual_norm(res.poisson) <= 10.0 * params.tau);
  for (const auto& rc : res.continuity) CHECK(dual_norm(rc) <= 10.0 * params.tau);
}

TEST_CASE("gummel cap reports the increment history") {
  const Mesh m = io::generate_square(9);
  pnp::Problem prob{{1}, {1.0}, -0.75, 1.0};
  pnp::GummelParams params;
  params.tau = 1e-14;
  params.max_outer = 2;
  try {
    pnp::gummel_solve(m, prob, params);
    FAIL("expected the iteration cap");
  } catch (const fem::SolverError& e) {
    CHECK(std::string(e.what()).find("increments") != std::string::npos);
  }
}

TEST_CASE("slotboom transforms") {
  const ScalarField rho = {1.0, 2.0, 4.0};
  const ScalarField zero(3, 0.0);
  CHECK(pnp::slotboom_to_concentration(rho, zero, 1) == rho);

  const ScalarField phi = {0.3, -0.8, 1.9};
  const ScalarField c = pnp::slotboom_to_concentration(rho, phi, 2);
  const ScalarField back = pnp::concentration_to_slotboom(c, phi, 2);
  for (int i = 0; i < 3; ++i)
    CHECK(back[i] == doctest::Approx(rho[i]).epsilon(1e-12));

  const ScalarField ln2(3, std::log(2.0));
  const ScalarField four(3, 4.0);
  const ScalarField one = pnp::slotboom_to_concentration(four, ln2, 2);
  for (int i = 0; i < 3; ++i) CHECK(one[i] == doctest::Approx(1.0).epsilon(1e-14));

  const ScalarField huge(3, 800.0);
  CHECK_THROWS_AS(pnp::slotboom_to_concentration(rho, huge, 1), fem::SolverError);
}
