#include "ionshape/driver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ionshape::driver {

namespace {

struct Extent {
  double ymin, ymax;
};

Extent vertical_extent(const Mesh& mesh) {
  Extent e{std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest()};
  for (const auto& v : mesh.vertices) {
    e.ymin = std::min(e.ymin, v[1]);
    e.ymax = std::max(e.ymax, v[1]);
  }
  return e;
}

double max_nodal_magnitude(const std::vector<Vec2>& field) {
  double m = 0.0;
  for (const auto& v : field) m = std::max(m, std::hypot(v[0], v[1]));
  return m;
}

// Augmented Lagrangian value with explicit multiplier.
double lagrangian_value(double J, double volume, double perimeter,
                        const shapegrad::ConstraintState& cs) {
  const double dv = volume - cs.c1;
  return J + cs.l * dv + 0.5 * cs.beta * dv * dv +
         0.5 * cs.gamma * perimeter * perimeter;
}

}  // namespace

OptimizeResult optimize(const Mesh& mesh0, const pnp::Problem& problem,
                        const OptimizerConfig& cfg) {
  if (cfg.max_iterations < 0) throw std::invalid_argument("max_iterations must be >= 0");
  OptimizeResult result;
  result.mesh = mesh0;

  const adjoint::ObjectiveSpec spec = cfg.subdomain_objective
                                          ? adjoint::ObjectiveSpec::from_mesh_region(mesh0)
                                          : adjoint::ObjectiveSpec::whole_domain();

  Extent filter_extent{cfg.filter_ymin, cfg.filter_ymax};
  if (std::isnan(filter_extent.ymin) || std::isnan(filter_extent.ymax))
    filter_extent = vertical_extent(mesh0);

  shapegrad::ConstraintState cs = cfg.constraints;

  result.state = pnp::gummel_solve(result.mesh, problem, cfg.gummel);
  adjoint::AdjointState adj = adjoint::solve_adjoint(result.mesh, problem, result.state,
                                                     adjoint::ObjectiveSpec{spec.region});

  if (cfg.auto_multiplier) {
    const std::vector<double> density =
        shapegrad::dJ_boundary_density(result.mesh, problem, result.state, adj, spec);
    cs.l = shapegrad::init_multiplier(result.mesh, density);
  }

  auto make_record = [&](int iteration, const Mesh& mesh, const pnp::State& state,
                         double step, double pairing, double L, double L_prev,
                         bool forced) {
    HistoryRecord rec;
    rec.iteration = iteration;
    rec.objective = adjoint::objective(mesh, problem, state, spec);
    rec.weighted_concentration = -rec.objective;
    rec.volume = domain_volume(mesh);
    rec.volume_error = std::abs(rec.volume - cs.c1);
    rec.multiplier = cs.l;
    rec.step = step;
    rec.gradient_pairing = pairing;
    rec.min_angle = quality(mesh).min_angle;
    rec.lagrangian = L;
    rec.lagrangian_prev = L_prev;
    rec.forced = forced;
    return rec;
  };

  double J_cur = adjoint::objective(result.mesh, problem, result.state, spec);
  double L_cur = lagrangian_value(J_cur, domain_volume(result.mesh),
                                  boundary_measure(result.mesh, std::nullopt), cs);
  result.history.records.push_back(
      make_record(0, result.mesh, result.state, 0.0, 0.0, L_cur, L_cur, false));
  if (cfg.snapshot && cfg.snapshot_cadence > 0) cfg.snapshot(0, result.mesh, result.state);

  int stable_iterations = 0;
  for (int k = 1; k <= cfg.max_iterations; ++k) {
    // Step 3 (flow): descent direction from the current shape gradient.
    const shapegrad::ShapeGradient grad = shapegrad::build(
        result.mesh, problem, result.state, adj, spec, cs, cfg.gradient_form);
    const std::vector<Vec2> zeta =
        flow::descent_direction(result.mesh, grad.functional, cfg.flow);
    const double pairing = shapegrad::evaluate(grad, zeta);

    std::vector<Vec2> direction =
        cfg.filter_enabled
            ? sigmoid_filter(result.mesh, zeta, cfg.filter_m, filter_extent.ymin,
                             filter_extent.ymax)
            : zeta;

    const double zmax = max_nodal_magnitude(direction);
    if (zmax <= 0.0) {
      result.history.records.push_back(make_record(k, result.mesh, result.state, 0.0,
                                                   pairing, L_cur, L_cur, false));
      break;  // zero direction: stationary
    }
    const double min_edge = quality(result.mesh).min_edge;
    double delta = cfg.step_fraction * min_edge / zmax;

    // Step 5 (deformation) with backtracking on the augmented Lagrangian.
    bool accepted = false;
    bool forced = false;
    Mesh trial_mesh;
    pnp::State trial_state;
    double L_trial = 0.0;
    for (int h = 0; h <= cfg.max_halvings; ++h) {
      const bool last = (h == cfg.max_halvings);
      try {
        trial_mesh = deform(result.mesh, direction, delta);
      } catch (const MeshError&) {
        delta *= 0.5;
        continue;
      }
      try {
        trial_state = pnp::gummel_solve(trial_mesh, problem, cfg.gummel, &result.state);
      } catch (const fem::SolverError&) {
        if (last) throw;
        delta *= 0.5;
        continue;
      }
      const double J_trial = adjoint::objective(trial_mesh, problem, trial_state, spec);
      L_trial = lagrangian_value(J_trial, domain_volume(trial_mesh),
                                 boundary_measure(trial_mesh, std::nullopt), cs);
      if (L_trial <= L_cur + 1e-12) {
        accepted = true;
        break;
      }
      if (last) {
        accepted = true;  // smallest step taken with a warning flag
        forced = true;
        break;
      }
      delta *= 0.5;
    }
    if (!accepted)
      throw MeshError("no valid deformation step found (mesh inverts at every size)");

    const double L_prev = L_cur;
    result.mesh = std::move(trial_mesh);
    result.state = std::move(trial_state);
    L_cur = L_trial;

    // Step 4: Uzawa update after acceptance.
    cs = shapegrad::update_multiplier(cs, domain_volume(result.mesh));

    // Quality guard: smooth on cadence or when the mesh degrades.
    const QualityReport q = quality(result.mesh);
    const bool cadence_hit = cfg.smoothing_cadence > 0 && k % cfg.smoothing_cadence == 0;
    if (cadence_hit || q.min_angle < cfg.smooth_trigger_angle) {
      Mesh smoothed = smooth_interior(result.mesh, cfg.smoothing_iterations);
      result.state = pnp::gummel_solve(smoothed, problem, cfg.gummel, &result.state);
      result.mesh = std::move(smoothed);
    }
    if (quality(result.mesh).min_angle < cfg.quality_floor_angle) {
      result.aborted = true;
      result.abort_reason = "mesh quality collapsed below the hard floor";
      result.history.records.push_back(make_record(k, result.mesh, result.state, delta,
                                                   pairing, L_cur, L_prev, forced));
      return result;
    }

    adj = adjoint::solve_adjoint(result.mesh, problem, result.state,
                                 adjoint::ObjectiveSpec{spec.region});

    result.history.records.push_back(make_record(k, result.mesh, result.state, delta,
                                                 pairing, L_cur, L_prev, forced));
    if (cfg.snapshot && cfg.snapshot_cadence > 0 && k % cfg.snapshot_cadence == 0)
      cfg.snapshot(k, result.mesh, result.state);

    const double J_new = result.history.records.back().objective;
    const double rel =
        std::abs(J_new - J_cur) / std::max(std::abs(J_new), 1e-300);
    J_cur = J_new;
    stable_iterations = rel < cfg.stop_rel_change ? stable_iterations + 1 : 0;
    if (stable_iterations >= cfg.stop_patience) break;
  }
  return result;
}

GradientCheck validate_shape_derivative(const Mesh& mesh, const pnp::Problem& problem,
                                        const adjoint::ObjectiveSpec& spec,
                                        const std::vector<Vec2>& theta,
                                        const std::vector<double>& t_list,
                                        const pnp::GummelParams& gummel) {
  GradientCheck check;
  const pnp::State state = pnp::gummel_solve(mesh, problem, gummel);
  const adjoint::AdjointState adj =
      adjoint::solve_adjoint(mesh, problem, state, adjoint::ObjectiveSpec{spec.region});

  check.dj_domain = shapegrad::dJ_domain(mesh, problem, state, adj, theta, spec);
  const std::vector<double> density =
      shapegrad::dJ_boundary_density(mesh, problem, state, adj, spec);
  check.dj_boundary = shapegrad::pair_boundary_density(mesh, density, theta);

  const double J0 = adjoint::objective(mesh, problem, state, spec);
  std::vector<Vec2> minus_theta(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i)
    minus_theta[i] = {-theta[i][0], -theta[i][1]};

  for (const double t : t_list) {
    const Mesh mesh_p = deform(mesh, theta, t);
    const Mesh mesh_m = deform(mesh, minus_theta, t);
    const pnp::State st_p = pnp::gummel_solve(mesh_p, problem, gummel, &state);
    const pnp::State st_m = pnp::gummel_solve(mesh_m, problem, gummel, &state);
    const double Jp = adjoint::objective(mesh_p, problem, st_p, spec);
    const double Jm = adjoint::objective(mesh_m, problem, st_m, spec);
    check.rows.push_back({t, (Jp - J0) / t, (Jp - Jm) / (2.0 * t)});
  }
  for (std::size_t i = 0; i + 1 < check.rows.size(); ++i) {
    const double e0 = std::abs(check.rows[i].central_quotient - check.dj_domain);
    const double e1 = std::abs(check.rows[i + 1].central_quotient - check.dj_domain);
    if (e0 > 0.0 && e1 > 0.0)
      check.central_orders.push_back(std::log(e0 / e1) /
                                     std::log(check.rows[i].t / check.rows[i + 1].t));
    else
      check.central_orders.push_back(std::numeric_limits<double>::infinity());
  }
  return check;
}

}  // namespace ionshape::driver
