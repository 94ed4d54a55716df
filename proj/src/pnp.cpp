#include "ionshape/pnp.hpp"

#include <algorithm>
#include <cmath>

#include "ionshape/kernels.hpp"

namespace ionshape::pnp {

namespace {

// Dunavant degree-6 rule, 12 points, weights normalized to 1.
struct QuadPoint {
  double l0, l1, l2, w;
};

const std::vector<QuadPoint>& degree6_rule() {
  static const std::vector<QuadPoint> rule = [] {
    std::vector<QuadPoint> pts;
    auto push3 = [&](double a, double b, double w) {
      pts.push_back({a, b, b, w});
      pts.push_back({b, a, b, w});
      pts.push_back({b, b, a, w});
    };
    auto push6 = [&](double a, double b, double c, double w) {
      pts.push_back({a, b, c, w});
      pts.push_back({a, c, b, w});
      pts.push_back({b, a, c, w});
      pts.push_back({b, c, a, w});
      pts.push_back({c, a, b, w});
      pts.push_back({c, b, a, w});
    };
    push3(0.873821971016996, 0.063089014491502, 0.050844906370207);
    push3(0.501426509658179, 0.249286745170910, 0.116786275726379);
    push6(0.636502499121399, 0.310352451033785, 0.053145049844816,
          0.082851075618374);
    return pts;
  }();
  return rule;
}

double checked_exp(double arg) {
  if (std::abs(arg) > 700.0)
    throw fem::SolverError("exponential overflow guard tripped (|arg| > 700)", arg);
  return std::exp(arg);
}

// Mean of exp(e(x)) over the element for linear e with vertex values ev,
// relative to the shifted maximum: returns mean(exp(e - max(ev))).
double shifted_exp_mean(const std::array<double, 3>& ev) {
  const double m = std::max({ev[0], ev[1], ev[2]});
  const double range = m - std::min({ev[0], ev[1], ev[2]});
  int levels = 0;
  while (levels < 4 && range > 0.25 * static_cast<double>(1 << levels)) ++levels;

  // Uniform barycentric subdivision: enumerate subtriangle corners.
  struct Corner {
    double l0, l1, l2;
  };
  std::vector<std::array<Corner, 3>> cells;
  cells.push_back({Corner{1, 0, 0}, Corner{0, 1, 0}, Corner{0, 0, 1}});
  for (int lv = 0; lv < levels; ++lv) {
    std::vector<std::array<Corner, 3>> next;
    next.reserve(cells.size() * 4);
    auto mid = [](const Corner& a, const Corner& b) {
      return Corner{0.5 * (a.l0 + b.l0), 0.5 * (a.l1 + b.l1), 0.5 * (a.l2 + b.l2)};
    };
    for (const auto& c : cells) {
      const Corner m01 = mid(c[0], c[1]), m12 = mid(c[1], c[2]), m02 = mid(c[0], c[2]);
      next.push_back({c[0], m01, m02});
      next.push_back({m01, c[1], m12});
      next.push_back({m02, m12, c[2]});
      next.push_back({m01, m12, m02});
    }
    cells.swap(next);
  }

  const double cell_frac = 1.0 / static_cast<double>(cells.size());
  double acc = 0.0;
  for (const auto& cell : cells) {
    for (const auto& q : degree6_rule()) {
      const double l0 = q.l0 * cell[0].l0 + q.l1 * cell[1].l0 + q.l2 * cell[2].l0;
      const double l1 = q.l0 * cell[0].l1 + q.l1 * cell[1].l1 + q.l2 * cell[2].l1;
      const double l2 = q.l0 * cell[0].l2 + q.l1 * cell[1].l2 + q.l2 * cell[2].l2;
      const double e = l0 * ev[0] + l1 * ev[1] + l2 * ev[2];
      acc += q.w * cell_frac * std::exp(e - m);
    }
  }
  return acc;
}

std::vector<int> gamma2_nodes(const Mesh& mesh) {
  return mesh.boundary_nodes(BoundaryLabel::Gamma2);
}

std::vector<int> gamma_in_nodes(const Mesh& mesh) {
  return mesh.boundary_nodes(BoundaryLabel::GammaIn);
}

// Nodal source w_j = sum_i z_i rho_ij exp(-z_i phi_j).
fem::ScalarField nodal_source(const Problem& problem,
                              const std::vector<fem::ScalarField>& rho,
                              const fem::ScalarField& phi) {
  fem::ScalarField w(phi.size(), 0.0);
  for (int i = 0; i < problem.species(); ++i) {
    const double zi = problem.z[i];
    for (std::size_t j = 0; j < phi.size(); ++j)
      w[j] += zi * rho[i][j] * checked_exp(-zi * phi[j]);
  }
  return w;
}

// Reaction coefficient r_j = sum_i z_i^2 rho_ij exp(-z_i phi_j) >= 0.
fem::ScalarField reaction_coefficient(const Problem& problem,
                                      const std::vector<fem::ScalarField>& rho,
                                      const fem::ScalarField& phi) {
  fem::ScalarField r(phi.size(), 0.0);
  for (int i = 0; i < problem.species(); ++i) {
    const double zi = problem.z[i];
    for (std::size_t j = 0; j < phi.size(); ++j)
      r[j] += zi * zi * rho[i][j] * checked_exp(-zi * phi[j]);
  }
  return r;
}

double free_norm(const std::vector<double>& v, const std::vector<char>& constrained) {
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!constrained[i]) acc += v[i] * v[i];
  return std::sqrt(acc);
}

struct IncrementNorm {
  fem::SparseMatrix h1;  // unit stiffness + mass
  bool use_max = false;

  double operator()(const std::vector<double>& d) const {
    if (use_max) {
      double m = 0.0;
      for (const double x : d) m = std::max(m, std::abs(x));
      return m;
    }
    const std::vector<double> h1d = h1.multiply(d);
    return std::sqrt(std::max(0.0, kern::dot(d.data(), h1d.data(), d.size())));
  }
};

}  // namespace

void Problem::validate() const {
  if (z.empty()) throw std::invalid_argument("at least one species required");
  if (z.size() != c_inf.size())
    throw std::invalid_argument("valence/c_inf count mismatch");
  for (const double ci : c_inf)
    if (ci < 0.0) throw std::invalid_argument("negative inlet concentration");
  if (eps <= 0.0) throw std::invalid_argument("dielectric must be positive");
}

std::vector<double> harmonic_average(const Mesh& mesh, const fem::ScalarField& phi,
                                     double sign_exponent) {
  std::vector<double> out(mesh.triangle_count());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const Tri& tr = mesh.triangles[t];
    const std::array<double, 3> ev = {-sign_exponent * phi[tr[0]],
                                      -sign_exponent * phi[tr[1]],
                                      -sign_exponent * phi[tr[2]]};
    const double lo = std::min({ev[0], ev[1], ev[2]});
    const double hi = std::max({ev[0], ev[1], ev[2]});
    if (hi - lo < 1e-14) {
      out[t] = checked_exp(sign_exponent * (phi[tr[0]] + phi[tr[1]] + phi[tr[2]]) / 3.0);
      continue;
    }
    // E = 1/mean(exp(e)) = exp(-max) / mean(exp(e - max))
    out[t] = std::exp(-hi) / shifted_exp_mean(ev);
  }
  return out;
}

fem::SparseMatrix assemble_continuity(const Mesh& mesh, const fem::ScalarField& phi,
                                      int z_i) {
  return fem::assemble_stiffness(mesh, harmonic_average(mesh, phi, -double(z_i)));
}

fem::ScalarField newton_poisson(const Mesh& mesh, const Problem& problem,
                                const std::vector<fem::ScalarField>& rho,
                                const fem::ScalarField& phi0,
                                const GummelParams& params) {
  problem.validate();
  const int n = mesh.vertex_count();
  const fem::SparseMatrix stiff_eps =
      fem::assemble_stiffness(mesh, std::vector<double>(mesh.triangle_count(), problem.eps));
  const fem::SparseMatrix mass = fem::assemble_mass(mesh);

  const std::vector<int> g2 = gamma2_nodes(mesh);
  std::vector<char> constrained(n, 0);
  for (const int v : g2) constrained[v] = 1;

  fem::ScalarField phi = phi0;
  for (const int v : g2) phi[v] = problem.g;

  auto residual = [&](const fem::ScalarField& p) {
    std::vector<double> r = stiff_eps.multiply(p);
    const std::vector<double> bw = mass.multiply(nodal_source(problem, rho, p));
    for (int i = 0; i < n; ++i) r[i] -= bw[i];
    for (const int v : g2) r[v] = 0.0;
    return r;
  };

  std::vector<double> r = residual(phi);
  double rnorm = free_norm(r, constrained);

  for (int it = 0; it < params.newton_max; ++it) {
    if (rnorm <= params.newton_tol) return phi;

    // SPD Jacobian: eps-stiffness plus the nonnegative reaction mass.
    fem::SparseMatrix jac = stiff_eps;
    const fem::SparseMatrix reac =
        fem::assemble_weighted_mass(mesh, reaction_coefficient(problem, rho, phi));
    {
      fem::TripletBuilder b(n, n);
      for (int row = 0; row < n; ++row) {
        for (int k = jac.row_ptr[row]; k < jac.row_ptr[row + 1]; ++k)
          b.add(row, jac.col_idx[k], jac.vals[k]);
        for (int k = reac.row_ptr[row]; k < reac.row_ptr[row + 1]; ++k)
          b.add(row, reac.col_idx[k], reac.vals[k]);
      }
      jac = b.compress();
    }
    std::vector<double> rhs(n);
    for (int i = 0; i < n; ++i) rhs[i] = -r[i];
    fem::apply_dirichlet(jac, rhs, g2, std::vector<double>(g2.size(), 0.0));

    fem::SolveOptions opts;
    opts.tol = params.linear_tol;
    const std::vector<double> delta = fem::solve_spd(jac, rhs, opts);

    // Backtracking damping: halve until the residual norm decreases.
    double tau0 = 1.0;
    bool accepted = false;
    fem::ScalarField trial(n);
    for (int h = 0; h <= params.max_backtrack; ++h) {
      for (int i = 0; i < n; ++i) trial[i] = phi[i] + tau0 * delta[i];
      const std::vector<double> rt = residual(trial);
      const double tnorm = free_norm(rt, constrained);
      if (tnorm < rnorm || tnorm <= params.newton_tol) {
        phi = trial;
        r = rt;
        rnorm = tnorm;
        accepted = true;
        break;
      }
      tau0 *= 0.5;
    }
    if (!accepted)
      throw fem::SolverError(
          "Newton iteration for the semilinear Poisson equation diverged", rnorm);
  }
  if (rnorm <= params.newton_tol) return phi;
  throw fem::SolverError("Newton iteration cap reached, residual " +
                             std::to_string(rnorm),
                         rnorm);
}

State gummel_solve(const Mesh& mesh, const Problem& problem,
                   const GummelParams& params, const State* initial) {
  problem.validate();
  const int n = mesh.vertex_count();
  const int ns = problem.species();
  const std::vector<int> g2 = gamma2_nodes(mesh);
  const std::vector<int> gin = gamma_in_nodes(mesh);
  if (g2.empty()) throw MeshError("mesh has no Gamma_2 boundary");
  if (gin.empty()) throw MeshError("mesh has no Gamma_in boundary");

  IncrementNorm norm{fem::SparseMatrix{}, params.use_max_norm};
  {
    const fem::SparseMatrix a1 = fem::assemble_stiffness(mesh);
    const fem::SparseMatrix b = fem::assemble_mass(mesh);
    fem::TripletBuilder tb(n, n);
    for (int row = 0; row < n; ++row) {
      for (int k = a1.row_ptr[row]; k < a1.row_ptr[row + 1]; ++k)
        tb.add(row, a1.col_idx[k], a1.vals[k]);
      for (int k = b.row_ptr[row]; k < b.row_ptr[row + 1]; ++k)
        tb.add(row, b.col_idx[k], b.vals[k]);
    }
    norm.h1 = tb.compress();
  }

  State state;
  if (initial && !initial->phi.empty()) {
    state.phi = initial->phi;
    state.rho = initial->rho;
    for (const int v : g2) state.phi[v] = problem.g;
  } else {
    // Laplace interpolant for phi; constant inlet densities.
    fem::SparseMatrix lap = fem::assemble_stiffness(mesh);
    std::vector<double> rhs(n, 0.0);
    fem::apply_dirichlet(lap, rhs, g2, std::vector<double>(g2.size(), problem.g));
    fem::SolveOptions opts;
    opts.tol = params.linear_tol;
    state.phi = fem::solve_spd(lap, rhs, opts);
    state.rho.assign(ns, {});
    for (int i = 0; i < ns; ++i)
      state.rho[i].assign(n, problem.c_inf[i]);
  }
  state.converged = false;
  state.increments.clear();

  for (int outer = 0; outer < params.max_outer; ++outer) {
    const fem::ScalarField phi_prev = state.phi;
    const std::vector<fem::ScalarField> rho_prev = state.rho;

    state.phi = newton_poisson(mesh, problem, state.rho, state.phi, params);

    // Decoupled continuity solves with the fresh potential.
    for (int i = 0; i < ns; ++i) {
      fem::SparseMatrix k = assemble_continuity(mesh, state.phi, problem.z[i]);
      std::vector<double> rhs(n, 0.0);
      std::vector<double> bc(gin.size());
      for (std::size_t a = 0; a < gin.size(); ++a)
        bc[a] = problem.c_inf[i] * checked_exp(problem.z[i] * state.phi[gin[a]]);
      fem::apply_dirichlet(k, rhs, gin, bc);

      fem::ScalarField guess = state.rho[i];
      for (std::size_t a = 0; a < gin.size(); ++a) guess[gin[a]] = bc[a];
      fem::SolveOptions opts;
      opts.tol = params.linear_tol;
      opts.initial = &guess;
      state.rho[i] = fem::solve_spd(k, rhs, opts);
    }

    std::vector<double> dphi(n);
    for (int j = 0; j < n; ++j) dphi[j] = state.phi[j] - phi_prev[j];
    double incr = norm(dphi);
    for (int i = 0; i < ns; ++i) {
      std::vector<double> dr(n);
      for (int j = 0; j < n; ++j) dr[j] = state.rho[i][j] - rho_prev[i][j];
      incr = std::max(incr, norm(dr));
    }
    state.increments.push_back(incr);
    if (incr <= params.tau) {
      state.converged = true;
      break;
    }
  }

  if (!state.converged) {
    std::string diag = "Gummel iteration cap reached; increments:";
    for (const double d : state.increments) diag += " " + std::to_string(d);
    throw fem::SolverError(diag,
                           state.increments.empty() ? -1.0 : state.increments.back());
  }

  state.c.assign(ns, {});
  for (int i = 0; i < ns; ++i)
    state.c[i] = slotboom_to_concentration(state.rho[i], state.phi, problem.z[i]);
  return state;
}

fem::ScalarField slotboom_to_concentration(const fem::ScalarField& rho,
                                           const fem::ScalarField& phi, int z) {
  fem::ScalarField c(rho.size());
  for (std::size_t j = 0; j < rho.size(); ++j)
    c[j] = rho[j] * checked_exp(-double(z) * phi[j]);
  return c;
}

fem::ScalarField concentration_to_slotboom(const fem::ScalarField& c,
                                           const fem::ScalarField& phi, int z) {
  fem::ScalarField rho(c.size());
  for (std::size_t j = 0; j < c.size(); ++j)
    rho[j] = c[j] * checked_exp(double(z) * phi[j]);
  return rho;
}

Residuals discrete_residuals(const Mesh& mesh, const Problem& problem,
                             const State& state) {
  const int n = mesh.vertex_count();
  Residuals res;

  const fem::SparseMatrix stiff_eps =
      fem::assemble_stiffness(mesh, std::vector<double>(mesh.triangle_count(), problem.eps));
  const fem::SparseMatrix mass = fem::assemble_mass(mesh);
  res.poisson = stiff_eps.multiply(state.phi);
  const std::vector<double> bw = mass.multiply(nodal_source(problem, state.rho, state.phi));
  for (int i = 0; i < n; ++i) res.poisson[i] -= bw[i];
  for (const int v : gamma2_nodes(mesh)) res.poisson[v] = 0.0;

  const std::vector<int> gin = gamma_in_nodes(mesh);
  for (int i = 0; i < problem.species(); ++i) {
    const fem::SparseMatrix k = assemble_continuity(mesh, state.phi, problem.z[i]);
    std::vector<double> r = k.multiply(state.rho[i]);
    for (const int v : gin) r[v] = 0.0;
    res.continuity.push_back(std::move(r));
  }
  return res;
}

}  // namespace ionshape::pnp
