#pragma once

#include <vector>

#include "ionshape/fem.hpp"
#include "ionshape/pnp.hpp"

namespace ionshape::adjoint {

// Objective region: empty indicator means the whole domain, otherwise a 0/1
// flag per element selecting the subregion the weighted concentration is
// integrated over.
struct ObjectiveSpec {
  std::vector<std::uint8_t> region;

  const std::vector<std::uint8_t>* indicator() const {
    return region.empty() ? nullptr : &region;
  }
  static ObjectiveSpec whole_domain() { return {}; }
  static ObjectiveSpec from_mesh_region(const Mesh& mesh) {
    return {mesh.design_region};
  }
};

struct AdjointState {
  std::vector<fem::ScalarField> s;  // adjoint concentrations, zero on Gamma_in
  fem::ScalarField psi;             // adjoint potential, zero on Gamma_2
};

// J = -int_region z.c dx (the minimized quantity); the physical "total
// weighted concentration" is -J.
double objective(const Mesh& mesh, const pnp::Problem& problem,
                 const pnp::State& state, const ObjectiveSpec& spec);

struct BlockSystem {
  fem::SparseMatrix matrix;  // (N+1) x (N+1) blocks of vertex_count each
  std::vector<double> rhs;
};

// Monolithic block system: diagonal blocks A + z_i*C, right column -z_i*B,
// bottom row z_i*D_i with eps*A in the corner; rhs_i = z_i*(1, nu) over the
// objective region. Dirichlet rows: s_i on Gamma_in, psi on Gamma_2.
// Requires a converged forward state.
BlockSystem assemble_adjoint(const Mesh& mesh, const pnp::Problem& problem,
                             const pnp::State& state, const ObjectiveSpec& spec);

AdjointState solve_adjoint(const Mesh& mesh, const pnp::Problem& problem,
                           const pnp::State& state, const ObjectiveSpec& spec,
                           double tol = 1e-10);

}  // namespace ionshape::adjoint
