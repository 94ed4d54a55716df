#include "ionshape/shapegrad.hpp"

#include <cmath>
#include <map>

namespace ionshape::shapegrad {

namespace {

using Mat2 = std::array<std::array<double, 2>, 2>;

// Per-element data of the domain expression: dJ|_K(theta) =
// div(theta)*(a + tr(G)) - (D(theta)^T + D(theta)) : G.
struct ElementTerms {
  double a = 0.0;  // int_K (-chi z.c - z.c psi)
  Mat2 G{};        // int_K [sum grad c x grad s + sum z c grad phi x grad s
                   //         + eps grad phi x grad psi]
};

// int_K u v for P1 nodal values on one triangle.
double p1_product_integral(double area, const double u[3], const double v[3]) {
  return area / 12.0 *
         (u[0] * (2.0 * v[0] + v[1] + v[2]) + u[1] * (v[0] + 2.0 * v[1] + v[2]) +
          u[2] * (v[0] + v[1] + 2.0 * v[2]));
}

std::vector<ElementTerms> element_terms(const Mesh& mesh, const pnp::Problem& problem,
                                        const pnp::State& state,
                                        const adjoint::AdjointState& adj,
                                        const adjoint::ObjectiveSpec& spec) {
  if (state.phi.size() != static_cast<std::size_t>(mesh.vertex_count()))
    throw std::invalid_argument("state fields do not match the mesh");
  const int ns = problem.species();
  std::vector<ElementTerms> terms(mesh.triangle_count());

  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const fem::ElementGeometry g = fem::element_geometry(mesh, t);
    const Tri& tr = mesh.triangles[t];
    ElementTerms& et = terms[t];

    Vec2 grad_phi{0, 0}, grad_psi{0, 0};
    for (int k = 0; k < 3; ++k) {
      grad_phi[0] += state.phi[tr[k]] * g.grad[k][0];
      grad_phi[1] += state.phi[tr[k]] * g.grad[k][1];
      grad_psi[0] += adj.psi[tr[k]] * g.grad[k][0];
      grad_psi[1] += adj.psi[tr[k]] * g.grad[k][1];
    }
    const double psi_v[3] = {adj.psi[tr[0]], adj.psi[tr[1]], adj.psi[tr[2]]};
    const bool chi = spec.region.empty() || spec.region[t] != 0;

    for (int i = 0; i < ns; ++i) {
      const double zi = problem.z[i];
      const double c_v[3] = {state.c[i][tr[0]], state.c[i][tr[1]], state.c[i][tr[2]]};
      const double cbar = (c_v[0] + c_v[1] + c_v[2]) / 3.0;
      if (chi) et.a -= zi * g.area * cbar;
      et.a -= zi * p1_product_integral(g.area, c_v, psi_v);

      Vec2 grad_c{0, 0}, grad_s{0, 0};
      for (int k = 0; k < 3; ++k) {
        grad_c[0] += state.c[i][tr[k]] * g.grad[k][0];
        grad_c[1] += state.c[i][tr[k]] * g.grad[k][1];
        grad_s[0] += adj.s[i][tr[k]] * g.grad[k][0];
        grad_s[1] += adj.s[i][tr[k]] * g.grad[k][1];
      }
      for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q) {
          et.G[p][q] += g.area * grad_c[p] * grad_s[q];
          et.G[p][q] += zi * g.area * cbar * grad_phi[p] * grad_s[q];
        }
    }
    for (int p = 0; p < 2; ++p)
      for (int q = 0; q < 2; ++q)
        et.G[p][q] += problem.eps * g.area * grad_phi[p] * grad_psi[q];
  }
  return terms;
}

// Owning triangle of each boundary edge, parallel to mesh.boundary_edges.
std::vector<int> boundary_owners(const Mesh& mesh) {
  std::map<std::array<int, 2>, int> owner;
  auto key = [](int a, int b) {
    return a < b ? std::array<int, 2>{a, b} : std::array<int, 2>{b, a};
  };
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const Tri& tr = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      const auto e = key(tr[k], tr[(k + 1) % 3]);
      auto it = owner.find(e);
      if (it == owner.end()) owner[e] = t;
      else it->second = -1;  // interior
    }
  }
  std::vector<int> out;
  out.reserve(mesh.boundary_edges.size());
  for (const auto& e : mesh.boundary_edges) out.push_back(owner.at(key(e.v[0], e.v[1])));
  return out;
}

Vec2 element_gradient_of(const Mesh& mesh, int t, const fem::ScalarField& f) {
  const fem::ElementGeometry g = fem::element_geometry(mesh, t);
  const Tri& tr = mesh.triangles[t];
  Vec2 out{0, 0};
  for (int k = 0; k < 3; ++k) {
    out[0] += f[tr[k]] * g.grad[k][0];
    out[1] += f[tr[k]] * g.grad[k][1];
  }
  return out;
}

}  // namespace

double dJ_domain(const Mesh& mesh, const pnp::Problem& problem,
                 const pnp::State& state, const adjoint::AdjointState& adj,
                 const std::vector<Vec2>& theta, const adjoint::ObjectiveSpec& spec) {
  if (theta.size() != static_cast<std::size_t>(mesh.vertex_count()))
    throw std::invalid_argument("theta does not match the mesh");
  const std::vector<ElementTerms> terms = element_terms(mesh, problem, state, adj, spec);

  double dj = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const fem::ElementGeometry g = fem::element_geometry(mesh, t);
    const Tri& tr = mesh.triangles[t];
    Mat2 dtheta{};
    for (int k = 0; k < 3; ++k)
      for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q)
          dtheta[p][q] += theta[tr[k]][p] * g.grad[k][q];
    const double div = dtheta[0][0] + dtheta[1][1];
    const ElementTerms& et = terms[t];
    double val = div * (et.a + et.G[0][0] + et.G[1][1]);
    for (int p = 0; p < 2; ++p)
      for (int q = 0; q < 2; ++q)
        val -= (dtheta[q][p] + dtheta[p][q]) * et.G[p][q];
    dj += val;
  }
  return dj;
}

std::vector<double> dJ_domain_basis(const Mesh& mesh, const pnp::Problem& problem,
                                    const pnp::State& state,
                                    const adjoint::AdjointState& adj,
                                    const adjoint::ObjectiveSpec& spec) {
  const std::vector<ElementTerms> terms = element_terms(mesh, problem, state, adj, spec);
  std::vector<double> basis(2 * mesh.vertex_count(), 0.0);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const fem::ElementGeometry g = fem::element_geometry(mesh, t);
    const Tri& tr = mesh.triangles[t];
    const ElementTerms& et = terms[t];
    const double a_tr = et.a + et.G[0][0] + et.G[1][1];
    for (int k = 0; k < 3; ++k) {
      const Vec2& ga = g.grad[k];
      for (int d = 0; d < 2; ++d) {
        double val = ga[d] * a_tr;
        for (int q = 0; q < 2; ++q) val -= (et.G[d][q] + et.G[q][d]) * ga[q];
        basis[2 * tr[k] + d] += val;
      }
    }
  }
  return basis;
}

std::vector<double> dJ_boundary_density(const Mesh& mesh, const pnp::Problem& problem,
                                        const pnp::State& state,
                                        const adjoint::AdjointState& adj,
                                        const adjoint::ObjectiveSpec& spec) {
  bool has_gamma2 = false;
  for (const auto& e : mesh.boundary_edges)
    if (e.label == BoundaryLabel::Gamma2) has_gamma2 = true;
  if (!has_gamma2) throw MeshError("boundary density requires a nonempty Gamma_2");

  const std::vector<int> owners = boundary_owners(mesh);
  const int ns = problem.species();

  std::vector<double> weight(mesh.vertex_count(), 0.0);
  std::vector<double> accum(mesh.vertex_count(), 0.0);

  for (std::size_t eidx = 0; eidx < mesh.boundary_edges.size(); ++eidx) {
    const BoundaryEdge& e = mesh.boundary_edges[eidx];
    if (e.label != BoundaryLabel::Gamma2) continue;
    const int p = e.v[0], q = e.v[1];
    const double len = mesh.edge_length(e.v);
    const Vec2 n = mesh.edge_normal(e);
    const int t = owners[eidx];
    const bool chi = spec.region.empty() || spec.region[t] != 0;

    const double dphi_t = (state.phi[q] - state.phi[p]) / len;
    const Vec2 grad_phi = element_gradient_of(mesh, t, state.phi);
    const Vec2 grad_psi = element_gradient_of(mesh, t, adj.psi);
    const double dphi_dn = grad_phi[0] * n[0] + grad_phi[1] * n[1];
    const double dpsi_dn = grad_psi[0] * n[0] + grad_psi[1] * n[1];

    double bracket = -problem.eps * dphi_dn * dpsi_dn;
    for (int i = 0; i < ns; ++i) {
      const double zi = problem.z[i];
      const double cbar = 0.5 * (state.c[i][p] + state.c[i][q]);
      const double dc_t = (state.c[i][q] - state.c[i][p]) / len;
      const double ds_t = (adj.s[i][q] - adj.s[i][p]) / len;
      bracket += (dc_t + zi * cbar * dphi_t) * ds_t;
      if (chi) bracket += -zi * cbar;  // jhat(c)
    }

    accum[p] += len * bracket;
    accum[q] += len * bracket;
    weight[p] += len;
    weight[q] += len;
  }

  std::vector<double> density(mesh.vertex_count(), 0.0);
  for (int v = 0; v < mesh.vertex_count(); ++v)
    if (weight[v] > 0.0) density[v] = accum[v] / weight[v];
  return density;
}

double pair_boundary_density(const Mesh& mesh, const std::vector<double>& density,
                             const std::vector<Vec2>& theta) {
  double acc = 0.0;
  for (const auto& e : mesh.boundary_edges) {
    if (e.label != BoundaryLabel::Gamma2) continue;
    const int p = e.v[0], q = e.v[1];
    const double len = mesh.edge_length(e.v);
    const Vec2 n = mesh.edge_normal(e);
    const double tp = theta[p][0] * n[0] + theta[p][1] * n[1];
    const double tq = theta[q][0] * n[0] + theta[q][1] * n[1];
    acc += len / 6.0 *
           (density[p] * (2.0 * tp + tq) + density[q] * (tp + 2.0 * tq));
  }
  return acc;
}

std::vector<double> dJ_boundary_basis(const Mesh& mesh,
                                      const std::vector<double>& density) {
  std::vector<double> basis(2 * mesh.vertex_count(), 0.0);
  for (const auto& e : mesh.boundary_edges) {
    if (e.label != BoundaryLabel::Gamma2) continue;
    const int p = e.v[0], q = e.v[1];
    const double len = mesh.edge_length(e.v);
    const Vec2 n = mesh.edge_normal(e);
    for (int d = 0; d < 2; ++d) {
      basis[2 * p + d] += n[d] * len / 6.0 * (2.0 * density[p] + density[q]);
      basis[2 * q + d] += n[d] * len / 6.0 * (density[p] + 2.0 * density[q]);
    }
  }
  return basis;
}

double augmented_derivative(GradientForm kind, double base, const Mesh& mesh,
                            const ConstraintState& cs, const std::vector<Vec2>& theta) {
  const double coeff = cs.l + cs.beta * (domain_volume(mesh) - cs.c1);
  double value = base;

  if (kind == GradientForm::Domain) {
    for (int t = 0; t < mesh.triangle_count(); ++t) {
      const fem::ElementGeometry g = fem::element_geometry(mesh, t);
      const Tri& tr = mesh.triangles[t];
      double div = 0.0;
      for (int k = 0; k < 3; ++k)
        div += theta[tr[k]][0] * g.grad[k][0] + theta[tr[k]][1] * g.grad[k][1];
      value += coeff * div * g.area;
    }
  } else {
    for (const auto& e : mesh.boundary_edges) {
      const int p = e.v[0], q = e.v[1];
      const double len = mesh.edge_length(e.v);
      const Vec2 n = mesh.edge_normal(e);
      const double tn =
          0.5 * ((theta[p][0] + theta[q][0]) * n[0] + (theta[p][1] + theta[q][1]) * n[1]);
      value += coeff * len * tn;
    }
  }

  if (cs.gamma > 0.0) {
    const double per = boundary_measure(mesh, std::nullopt);
    for (const auto& e : mesh.boundary_edges) {
      const int p = e.v[0], q = e.v[1];
      const Vec2 t = mesh.edge_tangent(e);
      // int_e div_G(theta) ds = tangential stretch of the edge
      value += cs.gamma * per *
               ((theta[q][0] - theta[p][0]) * t[0] + (theta[q][1] - theta[p][1]) * t[1]);
    }
  }
  return value;
}

std::vector<double> augmented_basis(GradientForm kind, const Mesh& mesh,
                                    const ConstraintState& cs) {
  std::vector<double> basis(2 * mesh.vertex_count(), 0.0);
  const double coeff = cs.l + cs.beta * (domain_volume(mesh) - cs.c1);

  if (kind == GradientForm::Domain) {
    for (int t = 0; t < mesh.triangle_count(); ++t) {
      const fem::ElementGeometry g = fem::element_geometry(mesh, t);
      const Tri& tr = mesh.triangles[t];
      for (int k = 0; k < 3; ++k)
        for (int d = 0; d < 2; ++d)
          basis[2 * tr[k] + d] += coeff * g.grad[k][d] * g.area;
    }
  } else {
    for (const auto& e : mesh.boundary_edges) {
      const double len = mesh.edge_length(e.v);
      const Vec2 n = mesh.edge_normal(e);
      for (int d = 0; d < 2; ++d) {
        basis[2 * e.v[0] + d] += coeff * len / 2.0 * n[d];
        basis[2 * e.v[1] + d] += coeff * len / 2.0 * n[d];
      }
    }
  }

  if (cs.gamma > 0.0) {
    const double per = boundary_measure(mesh, std::nullopt);
    for (const auto& e : mesh.boundary_edges) {
      const Vec2 t = mesh.edge_tangent(e);
      for (int d = 0; d < 2; ++d) {
        basis[2 * e.v[1] + d] += cs.gamma * per * t[d];
        basis[2 * e.v[0] + d] -= cs.gamma * per * t[d];
      }
    }
  }
  return basis;
}

ShapeGradient build(const Mesh& mesh, const pnp::Problem& problem,
                    const pnp::State& state, const adjoint::AdjointState& adj,
                    const adjoint::ObjectiveSpec& spec, const ConstraintState& cs,
                    GradientForm kind) {
  ShapeGradient grad;
  grad.kind = kind;
  std::vector<double> basis;
  if (kind == GradientForm::Domain) {
    basis = dJ_domain_basis(mesh, problem, state, adj, spec);
  } else {
    grad.boundary_density = dJ_boundary_density(mesh, problem, state, adj, spec);
    basis = dJ_boundary_basis(mesh, grad.boundary_density);
  }
  const std::vector<double> aug = augmented_basis(kind, mesh, cs);
  grad.functional.resize(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i)
    grad.functional[i] = -(basis[i] + aug[i]);
  return grad;
}

double evaluate(const ShapeGradient& grad, const std::vector<Vec2>& theta) {
  double acc = 0.0;
  for (std::size_t a = 0; a < theta.size(); ++a)
    acc += grad.functional[2 * a] * theta[a][0] + grad.functional[2 * a + 1] * theta[a][1];
  return -acc;
}

double init_multiplier(const Mesh& mesh, const std::vector<double>& density) {
  const double total = boundary_measure(mesh, std::nullopt);
  if (total <= 0.0) throw MeshError("zero boundary measure");
  double integral = 0.0;
  for (const auto& e : mesh.boundary_edges) {
    if (e.label != BoundaryLabel::Gamma2) continue;
    integral += mesh.edge_length(e.v) * 0.5 * (density[e.v[0]] + density[e.v[1]]);
  }
  return -integral / total;
}

ConstraintState update_multiplier(const ConstraintState& cs, double volume) {
  ConstraintState out = cs;
  out.l += cs.beta * (volume - cs.c1);
  return out;
}

}  // namespace ionshape::shapegrad
