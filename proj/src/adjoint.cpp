#include "ionshape/adjoint.hpp"

#include <stdexcept>

namespace ionshape::adjoint {

double objective(const Mesh& mesh, const pnp::Problem& problem,
                 const pnp::State& state, const ObjectiveSpec& spec) {
  fem::ScalarField weighted(mesh.vertex_count(), 0.0);
  for (int i = 0; i < problem.species(); ++i)
    for (int j = 0; j < mesh.vertex_count(); ++j)
      weighted[j] += problem.z[i] * state.c[i][j];
  return -fem::integrate(mesh, weighted, spec.indicator());
}

BlockSystem assemble_adjoint(const Mesh& mesh, const pnp::Problem& problem,
                             const pnp::State& state, const ObjectiveSpec& spec) {
  if (!state.converged)
    throw std::invalid_argument("adjoint assembly requires a converged forward state");
  const int n = mesh.vertex_count();
  const int ns = problem.species();

  const fem::SparseMatrix A = fem::assemble_stiffness(mesh);
  const fem::SparseMatrix B = fem::assemble_mass(mesh);
  const fem::SparseMatrix C = fem::assemble_convection(mesh, state.phi, 1.0);

  fem::TripletBuilder builder((ns + 1) * n, (ns + 1) * n);
  auto add_block = [&](int bi, int bj, const fem::SparseMatrix& m, double scale) {
    for (int r = 0; r < n; ++r)
      for (int k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k)
        builder.add(bi * n + r, bj * n + m.col_idx[k], scale * m.vals[k]);
  };

  for (int i = 0; i < ns; ++i) {
    const double zi = problem.z[i];
    add_block(i, i, A, 1.0);
    add_block(i, i, C, zi);
    add_block(i, ns, B, -zi);
    const fem::SparseMatrix Di = fem::assemble_weighted_stiffness(mesh, state.c[i]);
    add_block(ns, i, Di, zi);
  }
  add_block(ns, ns, A, problem.eps);

  BlockSystem sys;
  sys.matrix = builder.compress();
  sys.rhs.assign((ns + 1) * n, 0.0);
  // -j'(c_i) = z_i, restricted to the objective region.
  const std::vector<double> unit_load =
      fem::load_vector(mesh, fem::ScalarField(n, 1.0), spec.indicator());
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < n; ++j) sys.rhs[i * n + j] = problem.z[i] * unit_load[j];

  std::vector<int> nodes;
  for (const int v : mesh.boundary_nodes(BoundaryLabel::GammaIn))
    for (int i = 0; i < ns; ++i) nodes.push_back(i * n + v);
  for (const int v : mesh.boundary_nodes(BoundaryLabel::Gamma2))
    nodes.push_back(ns * n + v);
  fem::apply_dirichlet(sys.matrix, sys.rhs, nodes,
                       std::vector<double>(nodes.size(), 0.0));
  return sys;
}

AdjointState solve_adjoint(const Mesh& mesh, const pnp::Problem& problem,
                           const pnp::State& state, const ObjectiveSpec& spec,
                           double tol) {
  const int n = mesh.vertex_count();
  const int ns = problem.species();
  const BlockSystem sys = assemble_adjoint(mesh, problem, state, spec);
  const std::vector<double> sol = fem::solve_general(sys.matrix, sys.rhs, tol);

  AdjointState adj;
  adj.s.assign(ns, fem::ScalarField(n));
  adj.psi.assign(n, 0.0);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < n; ++j) adj.s[i][j] = sol[i * n + j];
  for (int j = 0; j < n; ++j) adj.psi[j] = sol[ns * n + j];
  return adj;
}

}  // namespace ionshape::adjoint
