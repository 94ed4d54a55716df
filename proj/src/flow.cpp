#include "ionshape/flow.hpp"

#include <set>

namespace ionshape::flow {

namespace {

std::vector<int> fixed_nodes(const Mesh& mesh, const FlowConfig& cfg) {
  std::set<int> s;
  for (const auto& e : mesh.boundary_edges)
    for (const BoundaryLabel l : cfg.fixed_boundary)
      if (e.label == l) {
        s.insert(e.v[0]);
        s.insert(e.v[1]);
      }
  return {s.begin(), s.end()};
}

std::vector<Vec2> unflatten(const std::vector<double>& x) {
  std::vector<Vec2> out(x.size() / 2);
  for (std::size_t a = 0; a < out.size(); ++a) out[a] = {x[2 * a], x[2 * a + 1]};
  return out;
}

std::vector<Vec2> solve_vector_system(const Mesh& mesh, fem::SparseMatrix sys,
                                      const std::vector<double>& minus_dL,
                                      const FlowConfig& cfg) {
  std::vector<double> rhs = minus_dL;
  std::vector<int> constrained;
  for (const int v : fixed_nodes(mesh, cfg)) {
    constrained.push_back(2 * v);
    constrained.push_back(2 * v + 1);
  }
  fem::apply_dirichlet(sys, rhs, constrained,
                       std::vector<double>(constrained.size(), 0.0));
  fem::SolveOptions opts;
  opts.tol = cfg.linear_tol;
  return unflatten(fem::solve_spd(sys, rhs, opts));
}

void check_sizes(const Mesh& mesh, const std::vector<double>& minus_dL) {
  if (minus_dL.size() != static_cast<std::size_t>(2 * mesh.vertex_count()))
    throw std::invalid_argument("functional size must be twice the vertex count");
}

fem::SparseMatrix assemble_h1_matrix(const Mesh& mesh, const FlowConfig& cfg) {
  const int n = mesh.vertex_count();
  fem::TripletBuilder builder(2 * n, 2 * n);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const fem::ElementGeometry g = fem::element_geometry(mesh, t);
    const Tri& tr = mesh.triangles[t];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const double stiff =
            cfg.eps0 * g.area *
            (g.grad[a][0] * g.grad[b][0] + g.grad[a][1] * g.grad[b][1]);
        const double mass = g.area / 12.0 * (a == b ? 2.0 : 1.0);
        for (int d = 0; d < 2; ++d)
          builder.add(2 * tr[a] + d, 2 * tr[b] + d, stiff + mass);
      }
  }
  return builder.compress();
}

fem::SparseMatrix assemble_ct_matrix(const Mesh& mesh, const FlowConfig& cfg) {
  const int n = mesh.vertex_count();
  fem::TripletBuilder builder(2 * n, 2 * n);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const fem::ElementGeometry g = fem::element_geometry(mesh, t);
    const Tri& tr = mesh.triangles[t];
    // Per-DOF element data: B applied to the basis field, and the
    // engineering strain (e_xx, e_yy, gamma_xy).
    // d = 0: B = (-ga_x, ga_y), strain = (ga_x, 0, ga_y)
    // d = 1: B = ( ga_y, ga_x), strain = (0, ga_y, ga_x)
    auto bvec = [&](int a, int d) -> Vec2 {
      return d == 0 ? Vec2{-g.grad[a][0], g.grad[a][1]}
                    : Vec2{g.grad[a][1], g.grad[a][0]};
    };
    auto strain = [&](int a, int d) -> std::array<double, 3> {
      return d == 0 ? std::array<double, 3>{g.grad[a][0], 0.0, g.grad[a][1]}
                    : std::array<double, 3>{0.0, g.grad[a][1], g.grad[a][0]};
    };
    for (int a = 0; a < 3; ++a)
      for (int da = 0; da < 2; ++da)
        for (int b = 0; b < 3; ++b)
          for (int db = 0; db < 2; ++db) {
            const Vec2 ba = bvec(a, da), bb = bvec(b, db);
            const auto ea = strain(a, da), eb = strain(b, db);
            double val = (ba[0] * bb[0] + ba[1] * bb[1]) / cfg.alpha;
            val += ea[0] * eb[0] + ea[1] * eb[1] + 0.5 * ea[2] * eb[2];
            val *= g.area;
            if (da == db) val += g.area / 12.0 * (a == b ? 2.0 : 1.0);
            builder.add(2 * tr[a] + da, 2 * tr[b] + db, val);
          }
  }
  return builder.compress();
}

}  // namespace

fem::SparseMatrix assemble_flow_matrix(const Mesh& mesh, const FlowConfig& cfg) {
  switch (cfg.kind) {
    case FlowKind::CtHsym:
      if (cfg.alpha <= 0.0) throw std::invalid_argument("alpha must be positive");
      return assemble_ct_matrix(mesh, cfg);
    case FlowKind::H1Vector:
    case FlowKind::H1Scalar:
      if (cfg.eps0 <= 0.0) throw std::invalid_argument("eps0 must be positive");
      return assemble_h1_matrix(mesh, cfg);
  }
  throw std::invalid_argument("unknown flow kind");
}

std::vector<Vec2> h1_flow(const Mesh& mesh, const std::vector<double>& minus_dL,
                          const FlowConfig& cfg) {
  if (cfg.eps0 <= 0.0) throw std::invalid_argument("eps0 must be positive");
  check_sizes(mesh, minus_dL);
  return solve_vector_system(mesh, assemble_h1_matrix(mesh, cfg), minus_dL, cfg);
}

std::vector<Vec2> scalar_h1_flow(const Mesh& mesh, const std::vector<double>& minus_dL,
                                 const FlowConfig& cfg) {
  if (cfg.eps0 <= 0.0) throw std::invalid_argument("eps0 must be positive");
  check_sizes(mesh, minus_dL);
  const int n = mesh.vertex_count();

  const fem::SparseMatrix stiff = fem::assemble_stiffness(mesh);
  const fem::SparseMatrix mass = fem::assemble_mass(mesh);
  fem::TripletBuilder tb(n, n);
  for (int r = 0; r < n; ++r) {
    for (int k = stiff.row_ptr[r]; k < stiff.row_ptr[r + 1]; ++k)
      tb.add(r, stiff.col_idx[k], cfg.eps0 * stiff.vals[k]);
    for (int k = mass.row_ptr[r]; k < mass.row_ptr[r + 1]; ++k)
      tb.add(r, mass.col_idx[k], mass.vals[k]);
  }
  const fem::SparseMatrix scalar_sys = tb.compress();
  const std::vector<int> fixed = fixed_nodes(mesh, cfg);

  std::vector<Vec2> zeta(n, {0.0, 0.0});
  for (int d = 0; d < 2; ++d) {
    fem::SparseMatrix sys = scalar_sys;
    std::vector<double> rhs(n);
    for (int a = 0; a < n; ++a) rhs[a] = minus_dL[2 * a + d];
    fem::apply_dirichlet(sys, rhs, fixed, std::vector<double>(fixed.size(), 0.0));
    fem::SolveOptions opts;
    opts.tol = cfg.linear_tol;
    const std::vector<double> comp = fem::solve_spd(sys, rhs, opts);
    for (int a = 0; a < n; ++a) zeta[a][d] = comp[a];
  }
  return zeta;
}

std::vector<Vec2> ct_hsym_flow(const Mesh& mesh, const std::vector<double>& minus_dL,
                               const FlowConfig& cfg) {
  if (cfg.alpha <= 0.0) throw std::invalid_argument("alpha must be positive");
  check_sizes(mesh, minus_dL);
  return solve_vector_system(mesh, assemble_ct_matrix(mesh, cfg), minus_dL, cfg);
}

std::vector<Vec2> descent_direction(const Mesh& mesh,
                                    const std::vector<double>& minus_dL,
                                    const FlowConfig& cfg) {
  switch (cfg.kind) {
    case FlowKind::H1Vector: return h1_flow(mesh, minus_dL, cfg);
    case FlowKind::H1Scalar: return scalar_h1_flow(mesh, minus_dL, cfg);
    case FlowKind::CtHsym: return ct_hsym_flow(mesh, minus_dL, cfg);
  }
  throw std::invalid_argument("unknown flow kind");
}

}  // namespace ionshape::flow
