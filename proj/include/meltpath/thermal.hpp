#pragma once

// Analytical moving point-source temperatures and the ever-melted mask.

#include <cstddef>
#include <vector>

#include "meltpath/domain.hpp"
#include "meltpath/scanpath.hpp"

namespace meltpath {

struct LaserParams {
  double power_W = 25.0;
  double speed_m_s = 0.5;

  void validate() const;
};

struct MaterialThermal {
  double conductivity_W_mK = 30.0;
  double diffusivity_m2_s = 1e-5;
  double ambient_K = 293.0;
  double melt_K = 1700.0;
  /// Singularity cutoff for the source distance. Zero means half a voxel,
  /// resolved against a domain by `resolved`.
  double clamp_radius_um = 0.0;
  /// Width of the linear solid-fraction ramp below melt_K.
  double transition_band_K = 50.0;

  void validate() const;
  /// Copy with clamp_radius_um filled in for `spec` when it was left at zero.
  MaterialThermal resolved(const DomainSpec& spec) const;
};

/// Steady-state moving point source. Requires a positive clamp radius and a
/// unit travel direction.
double rosenthal_point(Vec3 point_mm, Vec3 laser_pos_mm, Vec3 travel_dir_unit, const LaserParams& laser,
                       const MaterialThermal& mat);

/// Distance (mm) beyond which the source temperature is below `threshold_K`.
double isotherm_radius_mm(double threshold_K, const LaserParams& laser, const MaterialThermal& mat);

/// Voxel box, clipped to the domain, outside which the source is guaranteed
/// colder than `threshold_K`. The hot region sits inside a cylinder along the
/// travel direction, reaching the full isotherm radius behind the source but
/// much less ahead of it and to the sides.
Box source_box(const DomainSpec& spec, Vec3 laser_pos_mm, Vec3 travel_dir_unit, double threshold_K,
               const LaserParams& laser, const MaterialThermal& mat);

/// Temperatures (K) over `box`, x-fastest, box-local indexing. Values depend
/// only on the voxel and source, never on the box or worker count.
void evaluate_box(const DomainSpec& spec, const Box& box, Vec3 laser_pos_mm, Vec3 travel_dir_unit,
                  const LaserParams& laser, const MaterialThermal& mat, double* out,
                  std::size_t workers = 1);

TemperatureField evaluate_field(const DomainSpec& spec, Vec3 laser_pos_mm, Vec3 travel_dir_unit,
                                const LaserParams& laser, const MaterialThermal& mat, std::size_t workers = 1);

/// Field with the source at the path position for time t; throws
/// InvalidArgument when t lies outside the path duration.
TemperatureField field_at_time(const ScanPath& path, double t, const DomainSpec& spec, const LaserParams& laser,
                               const MaterialThermal& mat, std::size_t workers = 1);

/// melted |= T >= melt_K. Throws InvalidArgument on a domain mismatch.
void accumulate_melt(MeltMask& mask, const TemperatureField& field, const MaterialThermal& mat);
/// Box-local variant: `temperature` covers `box` in evaluate_box layout.
void accumulate_melt(MeltMask& mask, const Box& box, const double* temperature, const MaterialThermal& mat);

}  // namespace meltpath
