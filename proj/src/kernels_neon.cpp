#include "ionshape/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace ionshape::kern::detail {

namespace {

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double acc = vaddvq_f64(acc0) + vaddvq_f64(acc1);
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t av = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), av, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void xpby_neon(const double* x, double b, double* y, std::size_t n) {
  const float64x2_t bv = vdupq_n_f64(b);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(x + i), bv, vld1q_f64(y + i)));
  for (; i < n; ++i) y[i] = x[i] + b * y[i];
}

void spmv_neon(std::size_t rows, const int* row_ptr, const int* col_idx,
               const double* vals, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const int begin = row_ptr[r];
    const int end = row_ptr[r + 1];
    float64x2_t acc = vdupq_n_f64(0.0);
    int k = begin;
    for (; k + 2 <= end; k += 2) {
      const float64x2_t xv = {x[col_idx[k]], x[col_idx[k + 1]]};
      acc = vfmaq_f64(acc, vld1q_f64(vals + k), xv);
    }
    double s = vaddvq_f64(acc);
    for (; k < end; ++k) s += vals[k] * x[col_idx[k]];
    y[r] = s;
  }
}

}  // namespace

const Ops* neon_ops() {
  static const Ops ops{dot_neon, axpy_neon, xpby_neon, spmv_neon};
  return &ops;
}

}  // namespace ionshape::kern::detail

#else

namespace ionshape::kern::detail {
const Ops* neon_ops() { return nullptr; }
}  // namespace ionshape::kern::detail

#endif
