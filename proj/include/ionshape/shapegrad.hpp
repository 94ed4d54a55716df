#pragma once

#include <vector>

#include "ionshape/adjoint.hpp"
#include "ionshape/fem.hpp"
#include "ionshape/mesh.hpp"
#include "ionshape/pnp.hpp"

namespace ionshape::shapegrad {

enum class GradientForm { Domain, Boundary };

// Assembled derivative of the augmented Lagrangian. functional[2a+d] holds
// -dL applied to the nodal basis field e_d*nu_a, ready to serve as the
// gradient-flow right-hand side. boundary_density (boundary form only) is
// the Hadamard integrand on Gamma_2, one value per vertex, zero off Gamma_2.
struct ShapeGradient {
  GradientForm kind = GradientForm::Domain;
  std::vector<double> functional;
  std::vector<double> boundary_density;
};

struct ConstraintState {
  double l = 0.0;      // Lagrange multiplier
  double beta = 1.0;   // quadratic penalty
  double c1 = 1.0;     // target volume
  double gamma = 0.0;  // perimeter regularization weight
};

// Eulerian derivative of J in domain expression for a nodal field theta:
//   int (-chi z.c - z.c psi) div(theta) + M(theta):[sum grad c_i x grad s_i
//   + sum z_i c_i grad phi x grad s_i + eps grad phi x grad psi] dx
// with M(theta) = div(theta) Id - D(theta)^T - D(theta).
double dJ_domain(const Mesh& mesh, const pnp::Problem& problem,
                 const pnp::State& state, const adjoint::AdjointState& adj,
                 const std::vector<Vec2>& theta, const adjoint::ObjectiveSpec& spec);

// dJ evaluated on every nodal basis field (index 2a+d).
std::vector<double> dJ_domain_basis(const Mesh& mesh, const pnp::Problem& problem,
                                    const pnp::State& state,
                                    const adjoint::AdjointState& adj,
                                    const adjoint::ObjectiveSpec& spec);

// Hadamard density on Gamma_2: per edge
//   sum_i (d_t c_i + z_i c_i d_t phi) d_t s_i + jhat(c) - eps dphi/dn dpsi/dn
// with tangential derivatives from the P1 traces and normal derivatives from
// the adjacent element; nodal values by arc-length-weighted edge averaging.
std::vector<double> dJ_boundary_density(const Mesh& mesh, const pnp::Problem& problem,
                                        const pnp::State& state,
                                        const adjoint::AdjointState& adj,
                                        const adjoint::ObjectiveSpec& spec);

// int_{Gamma_2} density * (theta . n) ds with P1 traces.
double pair_boundary_density(const Mesh& mesh, const std::vector<double>& density,
                             const std::vector<Vec2>& theta);

// Basis values of the boundary-form dJ: populated only at Gamma_2 nodes.
std::vector<double> dJ_boundary_basis(const Mesh& mesh,
                                      const std::vector<double>& density);

// Adds the multiplier/penalty volume term (in the form matching `kind`) and
// the perimeter-regularization term gamma*|dOmega|*int div_G(theta) ds to a
// base dJ(theta) value.
double augmented_derivative(GradientForm kind, double base, const Mesh& mesh,
                            const ConstraintState& cs, const std::vector<Vec2>& theta);

// Same additions evaluated on every nodal basis field.
std::vector<double> augmented_basis(GradientForm kind, const Mesh& mesh,
                                    const ConstraintState& cs);

// Full -dL functional (and density, for the boundary form).
ShapeGradient build(const Mesh& mesh, const pnp::Problem& problem,
                    const pnp::State& state, const adjoint::AdjointState& adj,
                    const adjoint::ObjectiveSpec& spec, const ConstraintState& cs,
                    GradientForm kind);

// dL(theta) for an assembled gradient: minus the functional paired with theta.
double evaluate(const ShapeGradient& grad, const std::vector<Vec2>& theta);

// First-order-optimality estimate of the initial multiplier:
//   l0 = -(int_{Gamma_2} density ds) / |dOmega|.
double init_multiplier(const Mesh& mesh, const std::vector<double>& density);

// Uzawa step l <- l + beta (volume - C1).
ConstraintState update_multiplier(const ConstraintState& cs, double volume);

}  // namespace ionshape::shapegrad
