#pragma once

#include <optional>
#include <vector>

#include "ionshape/mesh.hpp"

namespace ionshape::fem {

using ScalarField = std::vector<double>;   // one value per vertex
using VectorField = std::vector<Vec2>;     // one 2-vector per vertex

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Compressed-row sparse matrix; column indices sorted and unique per row.
struct SparseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr;
  std::vector<int> col_idx;
  std::vector<double> vals;

  std::vector<double> multiply(const std::vector<double>& x) const;
  double entry(int r, int c) const;
  SparseMatrix transpose() const;
};

// Accumulates (row, col, value) contributions and compresses them. Duplicate
// coordinates are summed in insertion order, which keeps the result bit-stable
// for a fixed assembly order.
class TripletBuilder {
 public:
  TripletBuilder(int rows, int cols) : rows_(rows), cols_(cols) {}
  void add(int r, int c, double v) { entries_.push_back({r, c, v}); }
  SparseMatrix compress() const;

 private:
  struct Entry {
    int r, c;
    double v;
  };
  int rows_, cols_;
  std::vector<Entry> entries_;
};

// Element-constant gradients of the three P1 basis functions, plus the area.
struct ElementGeometry {
  double area;
  std::array<Vec2, 3> grad;  // grad of barycentric basis at the 3 vertices
};
ElementGeometry element_geometry(const Mesh& mesh, int t);

// (grad u, grad v) with a constant coefficient per element.
SparseMatrix assemble_stiffness(const Mesh& mesh,
                                const std::vector<double>& element_coefficient);
SparseMatrix assemble_stiffness(const Mesh& mesh);  // unit coefficient

// (u, v)
SparseMatrix assemble_mass(const Mesh& mesh);

// Entry (a, b) = scale * (grad phi . grad nu_b, nu_a): the operator applied to
// the unknown carrying the gradient, with rows indexed by test functions.
SparseMatrix assemble_convection(const Mesh& mesh, const ScalarField& phi,
                                 double scale);

// (c grad u, grad v) with P1 nodal weight c (element mean, exact for P1).
SparseMatrix assemble_weighted_stiffness(const Mesh& mesh, const ScalarField& c);

// (w u, v) with P1 nodal weight w, integrated exactly.
SparseMatrix assemble_weighted_mass(const Mesh& mesh, const ScalarField& w);

// Row/column elimination: constrained rows become identity with rhs = value,
// and known values are moved to the right-hand side so SPD inputs stay SPD.
// Throws on a duplicated node with conflicting values.
void apply_dirichlet(SparseMatrix& matrix, std::vector<double>& rhs,
                     const std::vector<int>& nodes,
                     const std::vector<double>& values);

struct SolveOptions {
  double tol = 1e-10;      // relative residual
  int max_iter = 0;        // 0 = 10*n
  const std::vector<double>* initial = nullptr;
};

// Jacobi-preconditioned conjugate gradients, deterministic for fixed inputs.
std::vector<double> solve_spd(const SparseMatrix& A, const std::vector<double>& b,
                              const SolveOptions& opts = {});

// Sparse direct factorization for general nonsingular systems; the contract
// is residual-based only.
std::vector<double> solve_general(const SparseMatrix& A,
                                  const std::vector<double>& b,
                                  double tol = 1e-10);

// Exact P1 integral of f (area times vertex mean per triangle), optionally
// restricted by a 0/1 per-element indicator.
double integrate(const Mesh& mesh, const ScalarField& f,
                 const std::vector<std::uint8_t>* element_indicator = nullptr);

// Element-constant gradient of a P1 field.
std::vector<Vec2> gradient(const Mesh& mesh, const ScalarField& f);

// Load vector (g, nu_a) for a P1 nodal function g, optionally restricted to
// indicated elements. Equals assemble_mass(mesh)*g when unrestricted.
std::vector<double> load_vector(const Mesh& mesh, const ScalarField& g,
                                const std::vector<std::uint8_t>* element_indicator = nullptr);

}  // namespace ionshape::fem
