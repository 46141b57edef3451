#pragma once

// Per-element reference arithmetic shared by the scalar and AVX2 translation
// units. Internal linkage on purpose: each TU gets a copy compiled with its own
// target flags, so no AVX2 code can leak into the scalar path through ODR merging.

#include <cmath>
#include <cstddef>

#include "meltpath/simd/kernels.hpp"

namespace meltpath::simd {
namespace {

inline double allen_cahn_point(const AllenCahnRow& r, std::size_t x) {
  const double e = r.center[x];
  const double xm = x == 0 ? e : r.center[x - 1];
  const double xp = x + 1 == r.nx ? e : r.center[x + 1];
  const std::size_t b = x - r.x_begin;

  const double others = r.sum_squares[b] - e * e;
  double t = e * e;
  t = t * e;
  t = t - e;
  double u = r.two_gamma * e;
  u = u * others;
  t = t + u;
  const double w = r.zeta_term[b] * e;
  t = t + w;
  const double bulk = r.m_g * t;

  double nb = xm + xp;
  nb = nb + r.y_minus[x];
  nb = nb + r.y_plus[x];
  nb = nb + r.z_minus[x];
  nb = nb + r.z_plus[x];
  double lap = nb - 6.0 * e;
  lap = lap * r.inv_dx2;
  const double grad = bulk - r.kappa * lap;
  return e - r.rate[b] * grad;
}

inline double rosenthal_point_ref(const RosenthalRow& r, std::size_t i) {
  const double px = r.x_origin + static_cast<double>(r.first_index + i) * r.spacing;
  const double dx = px - r.laser_x;
  const double yz2 = r.offset_y * r.offset_y + r.offset_z * r.offset_z;
  const double yz_dot = r.offset_y * r.dir_y + r.offset_z * r.dir_z;
  const double dist = std::sqrt(dx * dx + yz2);
  const double radius = dist > r.clamp_radius ? dist : r.clamp_radius;
  const double xi = dx * r.dir_x + yz_dot;
  const double arg = -(r.decay * (xi + radius));
  const double scale = r.amplitude / radius;
  return r.ambient + scale * std::exp(arg);
}

inline double adam_point(double& p, double g, double& m, double& v, const AdamStep& s) {
  m = s.beta1 * m + (1.0 - s.beta1) * g;
  v = s.beta2 * v + (1.0 - s.beta2) * (g * g);
  const double m_hat = m / s.bias1;
  const double v_hat = v / s.bias2;
  p = p - s.lr * m_hat / (std::sqrt(v_hat) + s.eps);
  return p;
}

}  // namespace
}  // namespace meltpath::simd
