#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "ionshape/adjoint.hpp"
#include "ionshape/flow.hpp"
#include "ionshape/mesh.hpp"
#include "ionshape/pnp.hpp"
#include "ionshape/shapegrad.hpp"

namespace ionshape::driver {

struct OptimizerConfig {
  int max_iterations = 30;
  shapegrad::GradientForm gradient_form = shapegrad::GradientForm::Boundary;
  flow::FlowConfig flow;
  pnp::GummelParams gummel;
  shapegrad::ConstraintState constraints;
  // Initialize the multiplier from first-order optimality instead of the
  // value in `constraints`.
  bool auto_multiplier = true;
  // Objective restricted to the mesh design region.
  bool subdomain_objective = false;

  // Step policy: the first trial step scales the direction so the largest
  // nodal displacement is step_fraction * (shortest edge); rejected steps
  // halve it, at most max_halvings times.
  double step_fraction = 0.3;
  int max_halvings = 10;

  bool filter_enabled = true;
  double filter_m = 100.0;
  // Vertical extent of the filter; NaN = take it from the initial mesh.
  double filter_ymin = std::numeric_limits<double>::quiet_NaN();
  double filter_ymax = std::numeric_limits<double>::quiet_NaN();

  int smoothing_cadence = 0;  // 0 disables periodic smoothing
  int smoothing_iterations = 2;
  double smooth_trigger_angle = 0.26;  // ~15 deg: smooth when min angle drops below
  double quality_floor_angle = 0.087;  // ~5 deg: abort when still below after smoothing

  double stop_rel_change = 1e-6;
  int stop_patience = 5;

  // Called with (iteration, mesh, state) every `snapshot_cadence` accepted
  // iterations (and at iteration 0) when set.
  std::function<void(int, const Mesh&, const pnp::State&)> snapshot;
  int snapshot_cadence = 0;
};

struct HistoryRecord {
  int iteration = 0;
  double objective = 0.0;               // J (minimized)
  double weighted_concentration = 0.0;  // -J
  double volume = 0.0;
  double volume_error = 0.0;  // |volume - C1|
  double multiplier = 0.0;
  double step = 0.0;
  double gradient_pairing = 0.0;  // dL(zeta) of the flow direction
  double min_angle = 0.0;
  double lagrangian = 0.0;       // L on this mesh with the multiplier used here
  double lagrangian_prev = 0.0;  // L on the previous mesh with the same multiplier
  bool forced = false;           // accepted after exhausting backtracking
};

struct History {
  std::vector<HistoryRecord> records;
};

struct OptimizeResult {
  Mesh mesh;
  pnp::State state;
  History history;
  bool aborted = false;
  std::string abort_reason;
};

// Outer loop: forward solve, adjoint solve, gradient flow, multiplier
// update, deformation with backtracking acceptance.
OptimizeResult optimize(const Mesh& mesh0, const pnp::Problem& problem,
                        const OptimizerConfig& cfg);

// Finite-difference check of both Eulerian derivative forms: re-solves the
// forward problem on (I + t*theta)(Omega) and compares difference quotients
// of J against dJ_domain(theta) and the boundary density paired with theta.
struct GradientCheck {
  double dj_domain = 0.0;
  double dj_boundary = 0.0;
  struct Row {
    double t;
    double forward_quotient;
    double central_quotient;
  };
  std::vector<Row> rows;
  // Observed convergence orders of the central-difference error against
  // dj_domain, one per consecutive pair of t values.
  std::vector<double> central_orders;
};

GradientCheck validate_shape_derivative(const Mesh& mesh, const pnp::Problem& problem,
                                        const adjoint::ObjectiveSpec& spec,
                                        const std::vector<Vec2>& theta,
                                        const std::vector<double>& t_list,
                                        const pnp::GummelParams& gummel);

}  // namespace ionshape::driver
