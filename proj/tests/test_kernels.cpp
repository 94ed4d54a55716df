#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <vector>

#include "ionshape/kernels.hpp"

using namespace ionshape;

namespace {

std::vector<double> random_vector(std::mt19937& rng, std::size_t n) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

// Random CSR with ~8 entries per row.
struct Csr {
  std::vector<int> row_ptr, col_idx;
  std::vector<double> vals;
};

Csr random_csr(std::mt19937& rng, int rows, int cols) {
  std::uniform_int_distribution<int> nnz(0, 11);
  std::uniform_int_distribution<int> col(0, cols - 1);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  Csr m;
  m.row_ptr.push_back(0);
  for (int r = 0; r < rows; ++r) {
    std::vector<int> cs;
    const int k = nnz(rng);
    for (int i = 0; i < k; ++i) cs.push_back(col(rng));
    std::sort(cs.begin(), cs.end());
    cs.erase(std::unique(cs.begin(), cs.end()), cs.end());
    for (const int c : cs) {
      m.col_idx.push_back(c);
      m.vals.push_back(val(rng));
    }
    m.row_ptr.push_back(static_cast<int>(m.col_idx.size()));
  }
  return m;
}

struct BackendGuard {
  kern::Backend saved = kern::active_backend();
  ~BackendGuard() { kern::select(saved); }
};

}  // namespace

TEST_CASE("scalar backend is always available") {
  CHECK(kern::backend_available(kern::Backend::Scalar));
}

TEST_CASE("simd and scalar kernels agree") {
  const kern::Backend simd = kern::active_backend();
  if (simd == kern::Backend::Scalar) {
    MESSAGE("no SIMD backend on this CPU; equivalence check skipped");
    return;
  }
  BackendGuard guard;
  std::mt19937 rng(7);

  for (const std::size_t n : {0UL, 1UL, 3UL, 4UL, 5UL, 17UL, 256UL, 1001UL}) {
    const std::vector<double> x = random_vector(rng, n);
    const std::vector<double> y = random_vector(rng, n);

    kern::select(simd);
    const double dot_simd = kern::dot(x.data(), y.data(), n);
    std::vector<double> ax_simd = y;
    kern::axpy(0.37, x.data(), ax_simd.data(), n);
    std::vector<double> xb_simd = y;
    kern::xpby(x.data(), -1.21, xb_simd.data(), n);

    kern::select(kern::Backend::Scalar);
    const double dot_ref = kern::dot(x.data(), y.data(), n);
    std::vector<double> ax_ref = y;
    kern::axpy(0.37, x.data(), ax_ref.data(), n);
    std::vector<double> xb_ref = y;
    kern::xpby(x.data(), -1.21, xb_ref.data(), n);

    CHECK(dot_simd == doctest::Approx(dot_ref).epsilon(1e-13));
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(ax_simd[i] == doctest::Approx(ax_ref[i]).epsilon(1e-14));
      CHECK(xb_simd[i] == doctest::Approx(xb_ref[i]).epsilon(1e-14));
    }
  }
}

TEST_CASE("simd and scalar spmv agree") {
  const kern::Backend simd = kern::active_backend();
  if (simd == kern::Backend::Scalar) return;
  BackendGuard guard;
  std::mt19937 rng(11);

  for (const int rows : {1, 7, 64, 321}) {
    const Csr m = random_csr(rng, rows, rows);
    const std::vector<double> x = random_vector(rng, rows);
    std::vector<double> y_simd(rows), y_ref(rows);

    kern::select(simd);
    kern::csr_spmv(rows, m.row_ptr.data(), m.col_idx.data(), m.vals.data(), x.data(),
                   y_simd.data());
    kern::select(kern::Backend::Scalar);
    kern::csr_spmv(rows, m.row_ptr.data(), m.col_idx.data(), m.vals.data(), x.data(),
                   y_ref.data());
    for (int i = 0; i < rows; ++i)
      CHECK(y_simd[i] == doctest::Approx(y_ref[i]).epsilon(1e-13));
  }
}

TEST_CASE("kernels are deterministic across repeated calls") {
  std::mt19937 rng(3);
  const std::vector<double> x = random_vector(rng, 513);
  const std::vector<double> y = random_vector(rng, 513);
  const double first = kern::dot(x.data(), y.data(), x.size());
  for (int rep = 0; rep < 5; ++rep)
    CHECK(kern::dot(x.data(), y.data(), x.size()) == first);
}
