#include "meltpath/thermal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "meltpath/error.hpp"
#include "meltpath/parallel.hpp"
#include "meltpath/simd/kernels.hpp"

namespace meltpath {

namespace {

simd::RosenthalRow base_row(Vec3 laser_m, Vec3 dir, const LaserParams& laser, const MaterialThermal& mat) {
  simd::RosenthalRow r{};
  r.laser_x = laser_m.x;
  r.dir_x = dir.x;
  r.dir_y = dir.y;
  r.dir_z = dir.z;
  r.amplitude = laser.power_W / (2.0 * std::numbers::pi * mat.conductivity_W_mK);
  r.decay = laser.speed_m_s / (2.0 * mat.diffusivity_m2_s);
  r.clamp_radius = mat.clamp_radius_um * 1e-6;
  r.ambient = mat.ambient_K;
  return r;
}

void check_direction(Vec3 dir) {
  if (std::abs(dir.norm() - 1.0) > 1e-9) throw InvalidArgument("travel direction must be a unit vector");
}

}  // namespace

void LaserParams::validate() const {
  if (!(power_W > 0.0)) throw InvalidArgument("laser power must be positive");
  if (!(speed_m_s > 0.0)) throw InvalidArgument("scan speed must be positive");
}

void MaterialThermal::validate() const {
  if (!(conductivity_W_mK > 0.0) || !(diffusivity_m2_s > 0.0) || !(ambient_K > 0.0) || !(melt_K > 0.0)) {
    throw InvalidArgument("material constants must be positive");
  }
  if (!(melt_K > ambient_K)) throw InvalidArgument("melt temperature must exceed ambient");
  if (!(clamp_radius_um >= 0.0)) throw InvalidArgument("clamp radius must not be negative");
  if (!(transition_band_K >= 0.0) || transition_band_K >= melt_K - ambient_K) {
    throw InvalidArgument("transition band must lie between ambient and melt temperature");
  }
}

MaterialThermal MaterialThermal::resolved(const DomainSpec& spec) const {
  MaterialThermal m = *this;
  if (m.clamp_radius_um == 0.0) m.clamp_radius_um = 0.5 * spec.voxel_um;
  return m;
}

double rosenthal_point(Vec3 point_mm, Vec3 laser_pos_mm, Vec3 travel_dir_unit, const LaserParams& laser,
                       const MaterialThermal& mat) {
  if (!(mat.clamp_radius_um > 0.0)) throw InvalidArgument("clamp radius must be positive");
  const Vec3 p = 1e-3 * point_mm;
  const Vec3 l = 1e-3 * laser_pos_mm;
  simd::RosenthalRow r = base_row(l, travel_dir_unit, laser, mat);
  r.x_origin = p.x;
  r.spacing = 0.0;
  r.first_index = 0;
  r.count = 1;
  r.offset_y = p.y - l.y;
  r.offset_z = p.z - l.z;
  double out = 0.0;
  r.out = &out;
  simd::scalar_kernels().rosenthal_row(r);
  return out;
}

double isotherm_radius_mm(double threshold_K, const LaserParams& laser, const MaterialThermal& mat) {
  if (!(threshold_K > mat.ambient_K)) throw InvalidArgument("isotherm must lie above ambient");
  const double r_m = laser.power_W / (2.0 * std::numbers::pi * mat.conductivity_W_mK * (threshold_K - mat.ambient_K));
  return r_m * 1e3;
}

namespace {

// Largest x in [0, hi] with x <= g(x) for decreasing g, by bisection.
template <typename G>
double fixed_point(double hi, G g) {
  double lo = 0.0;
  for (int i = 0; i < 200 && hi - lo > 1e-12 * (1.0 + hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (mid <= g(mid) ? lo : hi) = mid;
  }
  return hi;
}

}  // namespace

Box source_box(const DomainSpec& spec, Vec3 laser_pos_mm, Vec3 travel_dir_unit, double threshold_K,
               const LaserParams& laser, const MaterialThermal& mat) {
  check_direction(travel_dir_unit);
  // T - T0 >= dT needs R <= R0 exp(-decay (xi + R)) with R0 the isotherm radius.
  // Ahead of the source xi + R >= 2 xi and xi <= R; off axis xi + R >= rho^2 / (2 R0).
  const double r0 = isotherm_radius_mm(threshold_K, laser, mat);
  const double decay = laser.speed_m_s / (2.0 * mat.diffusivity_m2_s) * 1e-3;  // 1/mm
  const double ahead = fixed_point(r0, [&](double xi) { return r0 * std::exp(-2.0 * decay * xi); });
  const double radial = fixed_point(r0, [&](double rho) { return r0 * std::exp(-decay * rho * rho / (2.0 * r0)); });

  const double h = spec.voxel_mm();
  const std::array<double, 3> c{laser_pos_mm.x, laser_pos_mm.y, laser_pos_mm.z};
  const std::array<double, 3> d{travel_dir_unit.x, travel_dir_unit.y, travel_dir_unit.z};
  Box b;
  for (int a = 0; a < 3; ++a) {
    const double side = radial * std::sqrt(std::max(0.0, 1.0 - d[a] * d[a]));
    const double e1 = c[a] - r0 * d[a];
    const double e2 = c[a] + ahead * d[a];
    const double lo_mm = std::min(e1, e2) - side;
    const double hi_mm = std::max(e1, e2) + side;
    // Centre of voxel i is (i + 0.5) h; one voxel of slack absorbs rounding.
    const double lo = std::floor(lo_mm / h - 0.5) - 1.0;
    const double hi = std::ceil(hi_mm / h - 0.5) + 2.0;
    const double dim = static_cast<double>(spec.dims[a]);
    b.lo[a] = static_cast<std::size_t>(std::clamp(lo, 0.0, dim));
    b.hi[a] = static_cast<std::size_t>(std::clamp(hi, 0.0, dim));
  }
  return b;
}

void evaluate_box(const DomainSpec& spec, const Box& box, Vec3 laser_pos_mm, Vec3 travel_dir_unit,
                  const LaserParams& laser, const MaterialThermal& mat, double* out, std::size_t workers) {
  check_direction(travel_dir_unit);
  if (!(mat.clamp_radius_um > 0.0)) throw InvalidArgument("clamp radius must be positive");
  if (box.empty()) return;
  const double h = spec.voxel_mm() * 1e-3;
  const Vec3 l = 1e-3 * laser_pos_mm;
  const simd::RosenthalRow proto = base_row(l, travel_dir_unit, laser, mat);
  const std::size_t ex = box.extent(0), ey = box.extent(1), ez = box.extent(2);
  const auto& k = simd::active();
  parallel_for(ey * ez, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t row = begin; row < end; ++row) {
      const std::size_t y = box.lo[1] + row % ey;
      const std::size_t z = box.lo[2] + row / ey;
      simd::RosenthalRow r = proto;
      r.x_origin = 0.5 * h;
      r.spacing = h;
      r.first_index = box.lo[0];
      r.count = ex;
      r.offset_y = (static_cast<double>(y) + 0.5) * h - l.y;
      r.offset_z = (static_cast<double>(z) + 0.5) * h - l.z;
      r.out = out + row * ex;
      k.rosenthal_row(r);
    }
  });
}

TemperatureField evaluate_field(const DomainSpec& spec, Vec3 laser_pos_mm, Vec3 travel_dir_unit,
                                const LaserParams& laser, const MaterialThermal& mat, std::size_t workers) {
  std::vector<double> t(spec.voxel_count());
  evaluate_box(spec, spec.full_box(), laser_pos_mm, travel_dir_unit, laser, mat, t.data(), workers);
  TemperatureField f(spec, 0.0f);
  std::transform(t.begin(), t.end(), f.kelvin.begin(), [](double v) { return static_cast<float>(v); });
  return f;
}

TemperatureField field_at_time(const ScanPath& path, double t, const DomainSpec& spec, const LaserParams& laser,
                               const MaterialThermal& mat, std::size_t workers) {
  const auto state = path.at(t);
  return evaluate_field(spec, state.position, state.direction, laser, mat.resolved(spec), workers);
}

void accumulate_melt(MeltMask& mask, const TemperatureField& field, const MaterialThermal& mat) {
  if (!(mask.spec == field.spec)) throw InvalidArgument("melt mask and temperature field differ in domain");
  const float melt = static_cast<float>(mat.melt_K);
  for (std::size_t v = 0; v < mask.melted.size(); ++v) {
    if (field.kelvin[v] >= melt) mask.melted[v] = 1;
  }
}

void accumulate_melt(MeltMask& mask, const Box& box, const double* temperature, const MaterialThermal& mat) {
  std::size_t i = 0;
  for (std::size_t z = box.lo[2]; z < box.hi[2]; ++z) {
    for (std::size_t y = box.lo[1]; y < box.hi[1]; ++y) {
      for (std::size_t x = box.lo[0]; x < box.hi[0]; ++x, ++i) {
        if (temperature[i] >= mat.melt_K) mask.melted[mask.spec.index(x, y, z)] = 1;
      }
    }
  }
}

}  // namespace meltpath
