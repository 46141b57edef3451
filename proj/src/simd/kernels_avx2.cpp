// Compiled with -mavx2 only. FMA stays off so every lane rounds exactly like
// the scalar reference.

#include <immintrin.h>

#include <array>

#include "reference.hpp"

namespace meltpath::simd {
namespace {

constexpr std::size_t kLanes = 4;

void gemm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
              std::size_t n) {
  // A 16-wide strip of c stays in registers across the whole k loop. Each
  // element still accumulates a[i][p] * b[p][j] in increasing p.
  constexpr std::size_t kStrip = 4 * kLanes;
  const std::size_t ns = n - n % kStrip;
  const std::size_t nv = n - n % kLanes;
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t j = 0; j < ns; j += kStrip) {
      __m256d c0 = _mm256_loadu_pd(ci + j);
      __m256d c1 = _mm256_loadu_pd(ci + j + kLanes);
      __m256d c2 = _mm256_loadu_pd(ci + j + 2 * kLanes);
      __m256d c3 = _mm256_loadu_pd(ci + j + 3 * kLanes);
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = ai[p];
        if (aip == 0.0) continue;
        const double* bp = b + p * n + j;
        const __m256d va = _mm256_set1_pd(aip);
        c0 = _mm256_add_pd(c0, _mm256_mul_pd(va, _mm256_loadu_pd(bp)));
        c1 = _mm256_add_pd(c1, _mm256_mul_pd(va, _mm256_loadu_pd(bp + kLanes)));
        c2 = _mm256_add_pd(c2, _mm256_mul_pd(va, _mm256_loadu_pd(bp + 2 * kLanes)));
        c3 = _mm256_add_pd(c3, _mm256_mul_pd(va, _mm256_loadu_pd(bp + 3 * kLanes)));
      }
      _mm256_storeu_pd(ci + j, c0);
      _mm256_storeu_pd(ci + j + kLanes, c1);
      _mm256_storeu_pd(ci + j + 2 * kLanes, c2);
      _mm256_storeu_pd(ci + j + 3 * kLanes, c3);
    }
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      const double* bp = b + p * n;
      const __m256d va = _mm256_set1_pd(aip);
      std::size_t j = ns;
      for (; j < nv; j += kLanes) {
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(bp + j));
        _mm256_storeu_pd(ci + j, _mm256_add_pd(_mm256_loadu_pd(ci + j), prod));
      }
      for (; j < n; ++j) ci[j] = ci[j] + aip * bp[j];
    }
  }
}

void sum_squares_acc(const double* x, double* acc, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d v = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), _mm256_mul_pd(v, v)));
  }
  for (; i < n; ++i) acc[i] = acc[i] + x[i] * x[i];
}

void relu(double* x, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(x + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  }
  for (; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* act, double* grad, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(act + i), zero, _CMP_GT_OQ);
    _mm256_storeu_pd(grad + i, _mm256_and_pd(mask, _mm256_loadu_pd(grad + i)));
  }
  for (; i < n; ++i) grad[i] = act[i] > 0.0 ? grad[i] : 0.0;
}

void adam(double* p, const double* g, double* m, double* v, std::size_t n, const AdamStep& s) {
  const __m256d b1 = _mm256_set1_pd(s.beta1);
  const __m256d b2 = _mm256_set1_pd(s.beta2);
  const __m256d c1 = _mm256_set1_pd(1.0 - s.beta1);
  const __m256d c2 = _mm256_set1_pd(1.0 - s.beta2);
  const __m256d bias1 = _mm256_set1_pd(s.bias1);
  const __m256d bias2 = _mm256_set1_pd(s.bias2);
  const __m256d lr = _mm256_set1_pd(s.lr);
  const __m256d eps = _mm256_set1_pd(s.eps);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d gi = _mm256_loadu_pd(g + i);
    const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(c1, gi));
    const __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                                     _mm256_mul_pd(c2, _mm256_mul_pd(gi, gi)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d m_hat = _mm256_div_pd(mi, bias1);
    const __m256d v_hat = _mm256_div_pd(vi, bias2);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, m_hat), _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps));
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
  }
  for (; i < n; ++i) adam_point(p[i], g[i], m[i], v[i], s);
}

void allen_cahn_row(const AllenCahnRow& r) {
  std::size_t x = r.x_begin;
  // The two wall voxels use the mirrored neighbour; keep them on the scalar path.
  if (x == 0 && x < r.x_end) {
    r.out[0] = allen_cahn_point(r, 0);
    ++x;
  }
  const std::size_t vec_end = r.x_end < r.nx ? r.x_end : r.nx - 1;
  const __m256d m_g = _mm256_set1_pd(r.m_g);
  const __m256d two_gamma = _mm256_set1_pd(r.two_gamma);
  const __m256d kappa = _mm256_set1_pd(r.kappa);
  const __m256d inv_dx2 = _mm256_set1_pd(r.inv_dx2);
  const __m256d six = _mm256_set1_pd(6.0);
  for (; x + kLanes <= vec_end; x += kLanes) {
    const std::size_t b = x - r.x_begin;
    const __m256d e = _mm256_loadu_pd(r.center + x);
    const __m256d e2 = _mm256_mul_pd(e, e);
    const __m256d others = _mm256_sub_pd(_mm256_loadu_pd(r.sum_squares + b), e2);
    __m256d t = _mm256_mul_pd(e2, e);
    t = _mm256_sub_pd(t, e);
    __m256d u = _mm256_mul_pd(two_gamma, e);
    u = _mm256_mul_pd(u, others);
    t = _mm256_add_pd(t, u);
    t = _mm256_add_pd(t, _mm256_mul_pd(_mm256_loadu_pd(r.zeta_term + b), e));
    const __m256d bulk = _mm256_mul_pd(m_g, t);

    __m256d nb = _mm256_add_pd(_mm256_loadu_pd(r.center + x - 1), _mm256_loadu_pd(r.center + x + 1));
    nb = _mm256_add_pd(nb, _mm256_loadu_pd(r.y_minus + x));
    nb = _mm256_add_pd(nb, _mm256_loadu_pd(r.y_plus + x));
    nb = _mm256_add_pd(nb, _mm256_loadu_pd(r.z_minus + x));
    nb = _mm256_add_pd(nb, _mm256_loadu_pd(r.z_plus + x));
    __m256d lap = _mm256_sub_pd(nb, _mm256_mul_pd(six, e));
    lap = _mm256_mul_pd(lap, inv_dx2);
    const __m256d grad = _mm256_sub_pd(bulk, _mm256_mul_pd(kappa, lap));
    const __m256d res = _mm256_sub_pd(e, _mm256_mul_pd(_mm256_loadu_pd(r.rate + b), grad));
    _mm256_storeu_pd(r.out + b, res);
  }
  for (; x < r.x_end; ++x) r.out[x - r.x_begin] = allen_cahn_point(r, x);
}

void rosenthal_row(const RosenthalRow& r) {
  const __m256d origin = _mm256_set1_pd(r.x_origin);
  const __m256d spacing = _mm256_set1_pd(r.spacing);
  const __m256d laser_x = _mm256_set1_pd(r.laser_x);
  const __m256d yz2 = _mm256_set1_pd(r.offset_y * r.offset_y + r.offset_z * r.offset_z);
  const __m256d yz_dot = _mm256_set1_pd(r.offset_y * r.dir_y + r.offset_z * r.dir_z);
  const __m256d dir_x = _mm256_set1_pd(r.dir_x);
  const __m256d clamp = _mm256_set1_pd(r.clamp_radius);
  const __m256d decay = _mm256_set1_pd(r.decay);
  const __m256d amplitude = _mm256_set1_pd(r.amplitude);
  const __m256d sign = _mm256_set1_pd(-0.0);
  alignas(32) std::array<double, kLanes> arg{};
  alignas(32) std::array<double, kLanes> scale{};
  std::size_t i = 0;
  for (; i + kLanes <= r.count; i += kLanes) {
    const std::size_t j = r.first_index + i;
    const __m256d idx = _mm256_set_pd(static_cast<double>(j + 3), static_cast<double>(j + 2),
                                      static_cast<double>(j + 1), static_cast<double>(j));
    const __m256d px = _mm256_add_pd(origin, _mm256_mul_pd(idx, spacing));
    const __m256d dx = _mm256_sub_pd(px, laser_x);
    const __m256d dist = _mm256_sqrt_pd(_mm256_add_pd(_mm256_mul_pd(dx, dx), yz2));
    const __m256d radius = _mm256_max_pd(dist, clamp);
    const __m256d xi = _mm256_add_pd(_mm256_mul_pd(dx, dir_x), yz_dot);
    _mm256_store_pd(arg.data(), _mm256_xor_pd(sign, _mm256_mul_pd(decay, _mm256_add_pd(xi, radius))));
    _mm256_store_pd(scale.data(), _mm256_div_pd(amplitude, radius));
    for (std::size_t l = 0; l < kLanes; ++l) r.out[i + l] = r.ambient + scale[l] * std::exp(arg[l]);
  }
  for (; i < r.count; ++i) r.out[i] = rosenthal_point_ref(r, i);
}

}  // namespace

const Kernels* avx2_kernels() {
  static const Kernels k{Isa::avx2,    gemm_acc, sum_squares_acc, relu, relu_backward,
                         adam,         allen_cahn_row, rosenthal_row};
  return &k;
}

}  // namespace meltpath::simd
