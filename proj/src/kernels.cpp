#include "ionshape/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace ionshape::kern {

namespace {

struct Runtime {
  const detail::Ops* ops;
  Backend backend;
};

Runtime pick_default() {
  if (const auto* a = detail::avx2_ops()) return {a, Backend::Avx2};
  if (const auto* n = detail::neon_ops()) return {n, Backend::Neon};
  return {&detail::scalar_ops(), Backend::Scalar};
}

Runtime& runtime() {
  static Runtime rt = pick_default();
  return rt;
}

}  // namespace

Backend active_backend() { return runtime().backend; }

std::string_view backend_name() {
  switch (runtime().backend) {
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
    case Backend::Scalar: break;
  }
  return "scalar";
}

bool backend_available(Backend b) {
  switch (b) {
    case Backend::Scalar: return true;
    case Backend::Avx2: return detail::avx2_ops() != nullptr;
    case Backend::Neon: return detail::neon_ops() != nullptr;
  }
  return false;
}

void select(Backend b) {
  switch (b) {
    case Backend::Scalar:
      runtime() = {&detail::scalar_ops(), Backend::Scalar};
      return;
    case Backend::Avx2:
      if (const auto* a = detail::avx2_ops()) {
        runtime() = {a, Backend::Avx2};
        return;
      }
      break;
    case Backend::Neon:
      if (const auto* n = detail::neon_ops()) {
        runtime() = {n, Backend::Neon};
        return;
      }
      break;
  }
  throw std::runtime_error("requested kernel backend not available on this CPU");
}

double dot(const double* x, const double* y, std::size_t n) {
  return runtime().ops->dot(x, y, n);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  runtime().ops->axpy(a, x, y, n);
}

void xpby(const double* x, double b, double* y, std::size_t n) {
  runtime().ops->xpby(x, b, y, n);
}

void csr_spmv(std::size_t rows, const int* row_ptr, const int* col_idx,
              const double* vals, const double* x, double* y) {
  runtime().ops->spmv(rows, row_ptr, col_idx, vals, x, y);
}

double nrm2(const double* x, std::size_t n) { return std::sqrt(dot(x, x, n)); }

}  // namespace ionshape::kern
