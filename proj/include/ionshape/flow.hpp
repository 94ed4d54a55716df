#pragma once

#include <vector>

#include "ionshape/fem.hpp"
#include "ionshape/mesh.hpp"

namespace ionshape::flow {

enum class FlowKind { H1Vector, H1Scalar, CtHsym };

struct FlowConfig {
  FlowKind kind = FlowKind::H1Vector;
  double eps0 = 0.05;  // diffusion parameter of the H1 flow
  double alpha = 2.0;  // CT penalty
  // Nodes on these labels carry zero displacement.
  std::vector<BoundaryLabel> fixed_boundary = {BoundaryLabel::GammaIn,
                                               BoundaryLabel::Gamma1,
                                               BoundaryLabel::Hole};
  double linear_tol = 1e-12;
};

// Descent direction from (eps0 D zeta : D theta + zeta . theta) = -dL(theta).
// `minus_dL` holds -dL on each nodal basis field, index 2a+d (the functional
// field of an assembled shape gradient). Fixed-boundary nodes are constrained
// to zero. The components of this bilinear form decouple exactly; this solves
// the assembled 2V x 2V system.
std::vector<Vec2> h1_flow(const Mesh& mesh, const std::vector<double>& minus_dL,
                          const FlowConfig& cfg);

// Same flow decomposed into d independent scalar solves.
std::vector<Vec2> scalar_h1_flow(const Mesh& mesh, const std::vector<double>& minus_dL,
                                 const FlowConfig& cfg);

// Cauchy-Riemann penalized flow:
//   (1/alpha) B zeta . B theta + sym(D zeta):sym(D theta) + zeta . theta
// with B = [-dx, dy; dy, dx]. 2D only; components couple.
std::vector<Vec2> ct_hsym_flow(const Mesh& mesh, const std::vector<double>& minus_dL,
                               const FlowConfig& cfg);

std::vector<Vec2> descent_direction(const Mesh& mesh,
                                    const std::vector<double>& minus_dL,
                                    const FlowConfig& cfg);

// Unconstrained 2V x 2V system matrix of the configured flow (interleaved
// component ordering). Exposed for equivalence and kernel tests.
fem::SparseMatrix assemble_flow_matrix(const Mesh& mesh, const FlowConfig& cfg);

}  // namespace ionshape::flow
