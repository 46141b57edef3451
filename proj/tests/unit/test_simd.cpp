#include <doctest.h>

#include <cstring>
#include <vector>

#include "meltpath/rng.hpp"
#include "meltpath/simd/kernels.hpp"

using namespace meltpath;
using namespace meltpath::simd;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0, double zero_rate = 0.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = uniform01(rng) < zero_rate ? 0.0 : uniform(rng, lo, hi);
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

const Kernels* avx2_or_skip() {
  const Kernels* k = avx2_kernels();
  if (!k || !isa_supported(Isa::avx2)) MESSAGE("AVX2 unavailable; equivalence checks skipped");
  return k && isa_supported(Isa::avx2) ? k : nullptr;
}

}  // namespace

TEST_CASE("scalar gemm matches a naive triple loop") {
  Rng rng(1);
  const std::size_t m = 5, k = 7, n = 3;
  auto a = random_vec(rng, m * k, -1, 1, 0.3), b = random_vec(rng, k * n), c = random_vec(rng, m * n);
  auto expect = c;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t j = 0; j < n; ++j) expect[i * n + j] += a[i * k + p] * b[p * n + j];
  scalar_kernels().gemm_acc(a.data(), b.data(), c.data(), m, k, n);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(expect[i]).epsilon(1e-14));
}

TEST_CASE("avx2 gemm is bitwise equal to scalar over awkward shapes") {
  const Kernels* avx = avx2_or_skip();
  if (!avx) return;
  Rng rng(2);
  for (std::size_t m : {1u, 3u, 64u})
    for (std::size_t k : {1u, 9u, 25u})
      for (std::size_t n : {1u, 4u, 7u, 15u, 16u, 17u, 33u, 64u, 130u}) {
        auto a = random_vec(rng, m * k, -1, 1, 0.5), b = random_vec(rng, k * n), c0 = random_vec(rng, m * n);
        auto c1 = c0;
        scalar_kernels().gemm_acc(a.data(), b.data(), c0.data(), m, k, n);
        avx->gemm_acc(a.data(), b.data(), c1.data(), m, k, n);
        CHECK_MESSAGE(same_bits(c0, c1), "m=" << m << " k=" << k << " n=" << n);
      }
}

TEST_CASE("avx2 elementwise kernels are bitwise equal to scalar") {
  const Kernels* avx = avx2_or_skip();
  if (!avx) return;
  Rng rng(3);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 31u, 100u}) {
    const auto x = random_vec(rng, n);
    auto acc0 = random_vec(rng, n), acc1 = acc0;
    scalar_kernels().sum_squares_acc(x.data(), acc0.data(), n);
    avx->sum_squares_acc(x.data(), acc1.data(), n);
    CHECK(same_bits(acc0, acc1));

    auto r0 = x, r1 = x;
    scalar_kernels().relu(r0.data(), n);
    avx->relu(r1.data(), n);
    CHECK(same_bits(r0, r1));

    auto g0 = random_vec(rng, n), g1 = g0;
    scalar_kernels().relu_backward(r0.data(), g0.data(), n);
    avx->relu_backward(r0.data(), g1.data(), n);
    CHECK(same_bits(g0, g1));

    auto p0 = random_vec(rng, n), m0 = random_vec(rng, n), v0 = random_vec(rng, n, 0.0, 1.0);
    auto p1 = p0, m1 = m0, v1 = v0;
    const AdamStep st{1e-3, 0.9, 0.999, 1e-8, 1 - 0.9 * 0.9 * 0.9, 1 - 0.999 * 0.999 * 0.999};
    scalar_kernels().adam(p0.data(), x.data(), m0.data(), v0.data(), n, st);
    avx->adam(p1.data(), x.data(), m1.data(), v1.data(), n, st);
    CHECK(same_bits(p0, p1));
    CHECK(same_bits(m0, m1));
    CHECK(same_bits(v0, v1));
  }
}

TEST_CASE("avx2 stencil and heat-source rows are bitwise equal to scalar") {
  const Kernels* avx = avx2_or_skip();
  if (!avx) return;
  Rng rng(4);
  const std::size_t nx = 37;
  for (std::size_t begin : {0u, 1u, 5u}) {
    for (std::size_t end : {6u, 20u, 37u}) {
      const std::size_t w = end - begin;
      auto c = random_vec(rng, nx, 0, 1), ym = random_vec(rng, nx, 0, 1), yp = random_vec(rng, nx, 0, 1);
      auto zm = random_vec(rng, nx, 0, 1), zp = random_vec(rng, nx, 0, 1);
      auto ss = random_vec(rng, w, 0, 2), zt = random_vec(rng, w, 0, 2), rate = random_vec(rng, w, 0, 1e-3);
      std::vector<double> o0(w), o1(w);
      AllenCahnRow row{c.data(), ym.data(), yp.data(), zm.data(), zp.data(), ss.data(), zt.data(), rate.data(),
                       o0.data(), nx, begin, end, 3e5, 3.0, 3.6e-6, 2.1e11};
      scalar_kernels().allen_cahn_row(row);
      row.out = o1.data();
      avx->allen_cahn_row(row);
      CHECK(same_bits(o0, o1));
    }
  }
  for (std::size_t count : {1u, 4u, 13u, 64u}) {
    std::vector<double> o0(count), o1(count);
    RosenthalRow row{1e-6, 5e-6, 3, count, 4e-5, 2e-6, -3e-6, 0.6, 0.8, 0.0, 25.0 / (2 * 3.14159 * 30), 2.5e4,
                     2.5e-6, 293.0, o0.data()};
    scalar_kernels().rosenthal_row(row);
    row.out = o1.data();
    avx->rosenthal_row(row);
    CHECK(same_bits(o0, o1));
  }
}

TEST_CASE("active kernel table follows set_active_isa") {
  const Isa before = active().isa;
  set_active_isa(Isa::scalar);
  CHECK(active().isa == Isa::scalar);
  CHECK(isa_name(Isa::scalar) == "scalar");
  if (isa_supported(Isa::avx2)) {
    set_active_isa(Isa::avx2);
    CHECK(active().isa == Isa::avx2);
  }
  set_active_isa(before);
}
