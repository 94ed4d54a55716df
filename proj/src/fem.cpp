#include "ionshape/fem.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "ionshape/kernels.hpp"

namespace ionshape::fem {

std::vector<double> SparseMatrix::multiply(const std::vector<double>& x) const {
  std::vector<double> y(rows, 0.0);
  kern::csr_spmv(rows, row_ptr.data(), col_idx.data(), vals.data(), x.data(),
                 y.data());
  return y;
}

double SparseMatrix::entry(int r, int c) const {
  for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
    if (col_idx[k] == c) return vals[k];
  return 0.0;
}

SparseMatrix SparseMatrix::transpose() const {
  TripletBuilder b(cols, rows);
  for (int r = 0; r < rows; ++r)
    for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
      b.add(col_idx[k], r, vals[k]);
  return b.compress();
}

SparseMatrix TripletBuilder::compress() const {
  std::vector<int> order(entries_.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (entries_[a].r != entries_[b].r) return entries_[a].r < entries_[b].r;
    return entries_[a].c < entries_[b].c;
  });

  SparseMatrix m;
  m.rows = rows_;
  m.cols = cols_;
  m.row_ptr.assign(rows_ + 1, 0);
  int last_r = -1, last_c = -1;
  for (const int i : order) {
    const Entry& e = entries_[i];
    if (e.r == last_r && e.c == last_c) {
      m.vals.back() += e.v;
      continue;
    }
    m.col_idx.push_back(e.c);
    m.vals.push_back(e.v);
    m.row_ptr[e.r + 1] += 1;
    last_r = e.r;
    last_c = e.c;
  }
  for (int r = 0; r < rows_; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
  return m;
}

ElementGeometry element_geometry(const Mesh& mesh, int t) {
  const Tri& tr = mesh.triangles[t];
  const Vec2& p0 = mesh.vertices[tr[0]];
  const Vec2& p1 = mesh.vertices[tr[1]];
  const Vec2& p2 = mesh.vertices[tr[2]];
  const double two_a = (p1[0] - p0[0]) * (p2[1] - p0[1]) -
                       (p1[1] - p0[1]) * (p2[0] - p0[0]);
  if (two_a <= 1e-300)
    throw MeshError("degenerate triangle " + std::to_string(t), t);
  ElementGeometry g;
  g.area = 0.5 * two_a;
  g.grad[0] = {(p1[1] - p2[1]) / two_a, (p2[0] - p1[0]) / two_a};
  g.grad[1] = {(p2[1] - p0[1]) / two_a, (p0[0] - p2[0]) / two_a};
  g.grad[2] = {(p0[1] - p1[1]) / two_a, (p1[0] - p0[0]) / two_a};
  return g;
}

SparseMatrix assemble_stiffness(const Mesh& mesh,
                                const std::vector<double>& element_coefficient) {
  if (element_coefficient.size() != static_cast<std::size_t>(mesh.triangle_count()))
    throw MeshError("coefficient array length must equal triangle count");
  const int n = mesh.vertex_count();
  TripletBuilder b(n, n);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const ElementGeometry g = element_geometry(mesh, t);
    const Tri& tr = mesh.triangles[t];
    const double w = element_coefficient[t] * g.area;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        b.add(tr[i], tr[j],
              w * (g.grad[i][0] * g.grad[j][0] + g.grad[i][1] * g.grad[j][1]));
  }
  return b.compress();
}

SparseMatrix assemble_stiffness(const Mesh& mesh) {
  return assemble_stiffness(mesh, std::vector<double>(mesh.triangle_count(), 1.0));
}

SparseMatrix assemble_mass(const Mesh& mesh) {
  const int n = mesh.vertex_count();
  TripletBuilder b(n, n);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double a = mesh.triangle_area(t);
    const Tri& tr = mesh.triangles[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        b.add(tr[i], tr[j], a / 12.0 * (i == j ? 2.0 : 1.0));
  }
  return b.compress();
}

SparseMatrix assemble_convection(const Mesh& mesh, const ScalarField& phi,
                                 double scale) {
  const int n = mesh.vertex_count();
  TripletBuilder b(n, n);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const ElementGeometry g = element_geometry(mesh, t);
    const Tri& tr = mesh.triangles[t];
    Vec2 grad_phi{0.0, 0.0};
    for (int k = 0; k < 3; ++k) {
      grad_phi[0] += phi[tr[k]] * g.grad[k][0];
      grad_phi[1] += phi[tr[k]] * g.grad[k][1];
    }
    // (grad phi . grad nu_b) is constant; int_K nu_a = area/3.
    for (int bq = 0; bq < 3; ++bq) {
      const double conv = grad_phi[0] * g.grad[bq][0] + grad_phi[1] * g.grad[bq][1];
      for (int aq = 0; aq < 3; ++aq)
        b.add(tr[aq], tr[bq], scale * conv * g.area / 3.0);
    }
  }
  return b.compress();
}

SparseMatrix assemble_weighted_stiffness(const Mesh& mesh, const ScalarField& c) {
  const int n = mesh.vertex_count();
  TripletBuilder b(n, n);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const ElementGeometry g = element_geometry(mesh, t);
    const Tri& tr = mesh.triangles[t];
    const double cbar = (c[tr[0]] + c[tr[1]] + c[tr[2]]) / 3.0;
    const double w = cbar * g.area;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        b.add(tr[i], tr[j],
              w * (g.grad[i][0] * g.grad[j][0] + g.grad[i][1] * g.grad[j][1]));
  }
  return b.compress();
}

SparseMatrix assemble_weighted_mass(const Mesh& mesh, const ScalarField& w) {
  // int_K nu_a nu_b nu_c = 2A a!b!c!/(a+b+c+2)! gives A/10 (a=b=c),
  // A/30 (two equal), A/60 (all distinct).
  const int n = mesh.vertex_count();
  TripletBuilder b(n, n);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double a = mesh.triangle_area(t);
    const Tri& tr = mesh.triangles[t];
    const double wv[3] = {w[tr[0]], w[tr[1]], w[tr[2]]};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double acc = 0.0;
        for (int c = 0; c < 3; ++c) {
          double f;
          if (i == j && j == c) f = a / 10.0;
          else if (i == j || j == c || i == c) f = a / 30.0;
          else f = a / 60.0;
          acc += wv[c] * f;
        }
        b.add(tr[i], tr[j], acc);
      }
  }
  return b.compress();
}

void apply_dirichlet(SparseMatrix& matrix, std::vector<double>& rhs,
                     const std::vector<int>& nodes,
                     const std::vector<double>& values) {
  if (nodes.size() != values.size())
    throw std::invalid_argument("node/value list size mismatch");
  if (nodes.empty()) return;

  std::vector<char> constrained(matrix.rows, 0);
  std::vector<double> value(matrix.rows, 0.0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const int nd = nodes[i];
    if (nd < 0 || nd >= matrix.rows)
      throw std::invalid_argument("Dirichlet node out of range");
    if (constrained[nd] && value[nd] != values[i])
      throw std::invalid_argument("conflicting Dirichlet values at node " +
                                  std::to_string(nd));
    constrained[nd] = 1;
    value[nd] = values[i];
  }

  // Move known values to the rhs, then rewrite constrained rows/columns.
  for (int r = 0; r < matrix.rows; ++r) {
    if (constrained[r]) continue;
    for (int k = matrix.row_ptr[r]; k < matrix.row_ptr[r + 1]; ++k) {
      const int c = matrix.col_idx[k];
      if (c < static_cast<int>(constrained.size()) && constrained[c]) {
        rhs[r] -= matrix.vals[k] * value[c];
        matrix.vals[k] = 0.0;
      }
    }
  }
  for (int r = 0; r < matrix.rows; ++r) {
    if (!constrained[r]) continue;
    for (int k = matrix.row_ptr[r]; k < matrix.row_ptr[r + 1]; ++k)
      matrix.vals[k] = (matrix.col_idx[k] == r) ? 1.0 : 0.0;
    rhs[r] = value[r];
  }
}

std::vector<double> solve_spd(const SparseMatrix& A, const std::vector<double>& b,
                              const SolveOptions& opts) {
  const int n = A.rows;
  const int max_iter = opts.max_iter > 0 ? opts.max_iter : 10 * n;
  std::vector<double> x =
      opts.initial ? *opts.initial : std::vector<double>(n, 0.0);

  std::vector<double> inv_diag(n, 1.0);
  for (int r = 0; r < n; ++r) {
    const double d = A.entry(r, r);
    if (d > 0.0) inv_diag[r] = 1.0 / d;
  }

  const double bnorm = kern::nrm2(b.data(), n);
  if (bnorm == 0.0) return std::vector<double>(n, 0.0);

  std::vector<double> r = A.multiply(x);
  for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
  std::vector<double> z(n), p(n), Ap(n);
  for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = kern::dot(r.data(), z.data(), n);

  double res = kern::nrm2(r.data(), n) / bnorm;
  for (int it = 0; it < max_iter && res > opts.tol; ++it) {
    kern::csr_spmv(n, A.row_ptr.data(), A.col_idx.data(), A.vals.data(),
                   p.data(), Ap.data());
    const double pAp = kern::dot(p.data(), Ap.data(), n);
    if (pAp <= 0.0)
      throw SolverError("conjugate gradients: matrix not positive definite", res);
    const double alpha = rz / pAp;
    kern::axpy(alpha, p.data(), x.data(), n);
    kern::axpy(-alpha, Ap.data(), r.data(), n);
    for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_new = kern::dot(r.data(), z.data(), n);
    kern::xpby(z.data(), rz_new / rz, p.data(), n);
    rz = rz_new;
    res = kern::nrm2(r.data(), n) / bnorm;
  }
  if (res > opts.tol)
    throw SolverError("conjugate gradients did not converge, residual " +
                          std::to_string(res),
                      res);
  return x;
}

std::vector<double> solve_general(const SparseMatrix& A,
                                  const std::vector<double>& b, double tol) {
  using EigenSp = Eigen::SparseMatrix<double>;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(A.vals.size());
  for (int r = 0; r < A.rows; ++r)
    for (int k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k)
      trips.emplace_back(r, A.col_idx[k], A.vals[k]);
  EigenSp m(A.rows, A.cols);
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();

  Eigen::SparseLU<EigenSp> lu;
  lu.analyzePattern(m);
  lu.factorize(m);
  if (lu.info() != Eigen::Success)
    throw SolverError("sparse factorization failed (singular system?)", -1.0);

  Eigen::VectorXd rhs(A.rows);
  for (int i = 0; i < A.rows; ++i) rhs[i] = b[i];
  const Eigen::VectorXd sol = lu.solve(rhs);

  std::vector<double> x(sol.data(), sol.data() + A.rows);
  const std::vector<double> Ax = A.multiply(x);
  double rn = 0.0, bn = 0.0;
  for (int i = 0; i < A.rows; ++i) {
    rn += (Ax[i] - b[i]) * (Ax[i] - b[i]);
    bn += b[i] * b[i];
  }
  const double rel = bn > 0.0 ? std::sqrt(rn / bn) : std::sqrt(rn);
  if (rel > tol)
    throw SolverError("direct solve residual " + std::to_string(rel) +
                          " exceeds tolerance",
                      rel);
  return x;
}

double integrate(const Mesh& mesh, const ScalarField& f,
                 const std::vector<std::uint8_t>* element_indicator) {
  if (element_indicator &&
      element_indicator->size() != static_cast<std::size_t>(mesh.triangle_count()))
    throw MeshError("element indicator length must equal triangle count");
  double acc = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    if (element_indicator && (*element_indicator)[t] == 0) continue;
    const Tri& tr = mesh.triangles[t];
    acc += mesh.triangle_area(t) * (f[tr[0]] + f[tr[1]] + f[tr[2]]) / 3.0;
  }
  return acc;
}

std::vector<Vec2> gradient(const Mesh& mesh, const ScalarField& f) {
  std::vector<Vec2> g(mesh.triangle_count(), {0.0, 0.0});
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const ElementGeometry geo = element_geometry(mesh, t);
    const Tri& tr = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      g[t][0] += f[tr[k]] * geo.grad[k][0];
      g[t][1] += f[tr[k]] * geo.grad[k][1];
    }
  }
  return g;
}

std::vector<double> load_vector(const Mesh& mesh, const ScalarField& g,
                                const std::vector<std::uint8_t>* element_indicator) {
  std::vector<double> out(mesh.vertex_count(), 0.0);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    if (element_indicator && (*element_indicator)[t] == 0) continue;
    const double a = mesh.triangle_area(t);
    const Tri& tr = mesh.triangles[t];
    // (g, nu_i) with P1 g: mass-matrix row action restricted to the element.
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        out[tr[i]] += a / 12.0 * (i == j ? 2.0 : 1.0) * g[tr[j]];
  }
  return out;
}

}  // namespace ionshape::fem
