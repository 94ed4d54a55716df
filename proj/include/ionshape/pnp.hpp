#pragma once

#include <vector>

#include "ionshape/fem.hpp"
#include "ionshape/mesh.hpp"

namespace ionshape::pnp {

// Forward problem data: species valences and inlet concentrations, the
// potential datum on Gamma_2 and the dielectric coefficient.
struct Problem {
  std::vector<int> z;
  std::vector<double> c_inf;
  double g = 0.0;
  double eps = 1.0;

  int species() const { return static_cast<int>(z.size()); }
  void validate() const;
};

struct GummelParams {
  double tau = 1e-6;          // outer stopping tolerance
  int max_outer = 100;
  double newton_tol = 1e-10;  // residual norm of the semilinear Poisson solve
  int newton_max = 50;
  int max_backtrack = 20;     // damping halvings per Newton step
  double linear_tol = 1e-12;  // inner CG tolerance
  bool use_max_norm = false;  // debug switch; default is the discrete H1 norm
};

struct State {
  fem::ScalarField phi;
  std::vector<fem::ScalarField> rho;  // Slotboom densities
  std::vector<fem::ScalarField> c;    // concentrations
  bool converged = false;
  // Per-sweep max of the phi / rho increment norms.
  std::vector<double> increments;
};

// Per-element inverse-harmonic average: (|K|^-1 int_K exp(-(s*phi)))^-1.
// For constant phi = a this is exactly exp(s*a). Exponents are shifted by
// the element maximum before integration, and the degree-6 rule is applied
// on a uniform sub-triangulation refined until the per-cell exponent range
// is small, so wide nodal spreads stay accurate.
std::vector<double> harmonic_average(const Mesh& mesh, const fem::ScalarField& phi,
                                     double sign_exponent);

// Stiffness matrix with per-element coefficient E(-z_i phi)_K; SPD once the
// Gamma_in rows are constrained.
fem::SparseMatrix assemble_continuity(const Mesh& mesh, const fem::ScalarField& phi,
                                      int z_i);

// Solves the semilinear Poisson equation
//   (eps grad phi, grad v) = (sum_i z_i rho_i exp(-z_i phi), v)
// with phi = g on Gamma_2 and natural conditions elsewhere, by damped Newton
// on the nodal-interpolated source. phi0 must satisfy the Gamma_2 data.
fem::ScalarField newton_poisson(const Mesh& mesh, const Problem& problem,
                                const std::vector<fem::ScalarField>& rho,
                                const fem::ScalarField& phi0,
                                const GummelParams& params);

// Gummel fixed point: alternate the Newton Poisson solve with the decoupled
// exponential-fitted continuity solves until both increments drop below tau.
// Gamma_in data for rho_i is c_inf_i*exp(z_i phi) with the fresh potential.
State gummel_solve(const Mesh& mesh, const Problem& problem,
                   const GummelParams& params, const State* initial = nullptr);

// c = rho*exp(-z phi) nodewise; throws when |z phi| exceeds 700.
fem::ScalarField slotboom_to_concentration(const fem::ScalarField& rho,
                                           const fem::ScalarField& phi, int z);
fem::ScalarField concentration_to_slotboom(const fem::ScalarField& c,
                                           const fem::ScalarField& phi, int z);

// Residuals of the coupled discrete system at a given state (free rows only;
// constrained rows are zeroed). Used by the fixed-point certificate.
struct Residuals {
  std::vector<double> poisson;
  std::vector<std::vector<double>> continuity;
};
Residuals discrete_residuals(const Mesh& mesh, const Problem& problem,
                             const State& state);

}  // namespace ionshape::pnp
