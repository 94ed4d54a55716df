#pragma once

#include <cstddef>
#include <string_view>

// Dense vector and CSR sparse kernels used by the iterative solvers.
// Scalar reference implementations are always available; AVX2 (x86) and
// NEON (aarch64) variants are selected once at startup based on what the
// CPU reports. All variants are deterministic for fixed inputs: each one
// accumulates in a fixed order, so repeated calls give bit-identical
// results on the same machine.
namespace ionshape::kern {

enum class Backend { Scalar, Avx2, Neon };

// Backend active for subsequent kernel calls. select() exists so tests can
// force the scalar path and compare; it is not thread-safe and is meant to
// be called before any solver runs.
Backend active_backend();
std::string_view backend_name();
void select(Backend b);
bool backend_available(Backend b);

double dot(const double* x, const double* y, std::size_t n);
// y += a*x
void axpy(double a, const double* x, double* y, std::size_t n);
// y = x + b*y  (CG direction update)
void xpby(const double* x, double b, double* y, std::size_t n);
// y = A*x for CSR (row_ptr has rows+1 entries)
void csr_spmv(std::size_t rows, const int* row_ptr, const int* col_idx,
              const double* vals, const double* x, double* y);

double nrm2(const double* x, std::size_t n);

namespace detail {
struct Ops {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*xpby)(const double*, double, double*, std::size_t);
  void (*spmv)(std::size_t, const int*, const int*, const double*,
               const double*, double*);
};
const Ops& scalar_ops();
const Ops* avx2_ops();  // nullptr when unsupported
const Ops* neon_ops();  // nullptr when unsupported
}  // namespace detail

}  // namespace ionshape::kern
