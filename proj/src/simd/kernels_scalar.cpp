#include "reference.hpp"

namespace meltpath::simd {
namespace {

void gemm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
              std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] = ci[j] + aip * bp[j];
    }
  }
}

void sum_squares_acc(const double* x, double* acc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] = acc[i] + x[i] * x[i];
}

void relu(double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* act, double* grad, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) grad[i] = act[i] > 0.0 ? grad[i] : 0.0;
}

void adam(double* p, const double* g, double* m, double* v, std::size_t n, const AdamStep& s) {
  for (std::size_t i = 0; i < n; ++i) adam_point(p[i], g[i], m[i], v[i], s);
}

void allen_cahn_row(const AllenCahnRow& r) {
  for (std::size_t x = r.x_begin; x < r.x_end; ++x) r.out[x - r.x_begin] = allen_cahn_point(r, x);
}

void rosenthal_row(const RosenthalRow& r) {
  for (std::size_t i = 0; i < r.count; ++i) r.out[i] = rosenthal_point_ref(r, i);
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels k{Isa::scalar,   gemm_acc, sum_squares_acc, relu, relu_backward,
                         adam,          allen_cahn_row, rosenthal_row};
  return k;
}

}  // namespace meltpath::simd
