#pragma once

// Multi-order-parameter grain growth driven by a moving heat source.
//
// Each orientation c carries a non-conserved order parameter eta_c evolving by
// explicit Euler steps of the time-dependent Ginzburg-Landau equation on a
// 7-point stencil with zero-flux walls. The solid indicator zeta couples the
// grains to temperature: zeta = 0 in the melt (which erases all order there)
// and zeta = 1 in the solid.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "meltpath/domain.hpp"
#include "meltpath/scanpath.hpp"
#include "meltpath/thermal.hpp"

namespace meltpath {

struct PFParams {
  double sigma_J_m2 = 0.5;         // grain-boundary energy
  double mobility_m4_Js = 1e-5;    // grain-boundary mobility at the solidus
  double gamma = 1.5;
  double boundary_width_um = 9.6;  // l
  int n_ori = kDefaultOrientations;
  /// Voxel size; zero takes it from the field being integrated.
  double dx_um = 0.0;
  /// Time step; zero means stability_factor times the stability limit.
  double dt_s = 0.0;
  double stability_factor = 0.1;
  /// Arrhenius activation temperature of the mobility, referenced to the
  /// solidus. Zero gives a temperature-independent mobility.
  double activation_K = 1e5;
  /// Mobility factors below this are treated as exactly zero.
  double mobility_cutoff = 1e-2;

  double kappa_g() const { return 0.75 * sigma_J_m2 * boundary_width_um * 1e-6; }
  double m_g() const { return 6.0 * sigma_J_m2 / (boundary_width_um * 1e-6); }
  double L_g() const { return 4.0 / 3.0 * mobility_m4_Js / (boundary_width_um * 1e-6); }
  /// dx^2 / (L_g kappa_g) for the given voxel size.
  double stability_limit_s(double voxel_um) const;
  double time_step(double voxel_um) const;
  double voxel_um_for(const DomainSpec& spec) const { return dx_um > 0.0 ? dx_um : spec.voxel_um; }
  /// Throws InvalidArgument on non-positive constants, a stability factor
  /// above 0.25, an explicit dt beyond the bound, or a step where
  /// dt L (12 kappa / dx^2 + 2 m) exceeds 2.
  void validate(double voxel_um) const;
};

/// Per-component bulk free-energy derivative for one voxel.
std::vector<double> bulk_derivative(std::span<const double> eta, double zeta, const PFParams& p);

struct SolidIndicator {
  DomainSpec spec;
  std::vector<double> zeta;

  SolidIndicator() = default;
  SolidIndicator(DomainSpec s, double fill) : spec(s), zeta(s.voxel_count(), fill) {}
};

double zeta_value(double kelvin, const MaterialThermal& mat);

/// Solid indicator of a temperature field. When `erase` is given, every voxel
/// with zeta = 0 has its order parameters zeroed.
SolidIndicator zeta_from_temperature(const TemperatureField& t, const MaterialThermal& mat,
                                     GrainField* erase = nullptr);

/// Mobility multiplier in [0, 1]: 1 at or above the solidus, Arrhenius below,
/// exactly 0 once under the cutoff. Melt that has not yet regrown moves at
/// full mobility whatever its temperature (see run_track).
double mobility_factor(double kelvin, const MaterialThermal& mat, const PFParams& p);
/// Temperature where the mobility factor reaches the cutoff (ambient when the
/// mobility is temperature independent).
double mobility_cutoff_K(const MaterialThermal& mat, const PFParams& p);

/// Reusable scratch buffers for box steps.
struct PFWorkspace {
  std::vector<double> sum_squares;
  std::vector<double> zeta_term;
  std::vector<double> rate;
  std::vector<double> next;
  std::vector<double> change;  // per box voxel, max over channels of |delta eta| in the last step
  std::vector<std::uint8_t> nonzero;
  std::vector<std::uint8_t> live;
};

/// Regrown melt counts as settled once its sum of squared order parameters
/// reaches kRegrownSumSquares and no order parameter moves by more than
/// kSettleTolerance in one step.
inline constexpr double kRegrownSumSquares = 0.25;
inline constexpr double kSettleTolerance = 1e-4;

/// Sum over channels of eta^2 for every voxel in `box` (box-local, x-fastest).
void sum_squares_box(const GrainField& field, const Box& box, std::vector<double>& out, std::size_t workers = 1);

/// One explicit step restricted to `box`, reading neighbours from the whole
/// field. `zeta` and `mobility` are box-local (x-fastest); mobility is the
/// dimensionless factor applied to L_g. Voxels outside the box are untouched.
/// Throws NumericFailure with the lowest offending voxel index.
void step_box(GrainField& field, const Box& box, std::span<const double> zeta, std::span<const double> mobility,
              const PFParams& p, PFWorkspace& ws, std::size_t workers = 1);

/// Whole-domain step with uniform mobility; labels are refreshed.
void step_in_place(GrainField& field, const SolidIndicator& zeta, const PFParams& p, std::size_t workers = 1);
GrainField step(const GrainField& field, const SolidIndicator& zeta, const PFParams& p);

/// Discrete free energy in J (bulk terms plus face-difference gradient energy).
double free_energy(const GrainField& field, const SolidIndicator& zeta, const PFParams& p);

struct TrackSample {
  std::size_t step = 0;
  double time_s = 0.0;
  Vec3 laser_mm;
  double power_W = 0.0;
  GrainField grains;
  TemperatureField temperature;
};

struct TrackOptions {
  /// Sample interval in steps; samples include step 0 and the final state.
  std::size_t sample_every = 100;
  /// Overrides the step count derived from path duration plus cooldown.
  std::size_t total_steps = 0;
  /// Time after the path ends during which the source stays put and its power
  /// ramps linearly to zero. Negative picks twice the melt radius over speed.
  double cooldown_s = -1.0;
  /// Extra steps allowed after the nominal end while melt is still regrowing.
  std::size_t settle_max_steps = 2000;
  bool collect_samples = true;
  /// Evaluate heat and step every voxel instead of the hot box around the
  /// source; results are identical, only slower.
  bool full_domain_thermal = false;
  std::size_t workers = 1;
  std::function<void(const TrackSample&)> on_sample;
};

struct TrackResult {
  GrainField final_field;
  MeltMask melt;
  /// Melted voxels not yet regrown and settled when the run ended.
  std::size_t unsolidified = 0;
  std::vector<TrackSample> samples;
  std::size_t steps = 0;  // including settling steps
  double dt_s = 0.0;
};

struct SourceState {
  Vec3 position_mm;
  Vec3 direction;
  double power_W = 0.0;
};

/// Source at time t: on the path while it lasts, then parked at the end point
/// with power ramping down over `cooldown_s`.
SourceState source_at(const ScanPath& path, double t, double power_W, double cooldown_s);

double default_cooldown_s(const LaserParams& laser, const MaterialThermal& mat);

/// Moves the source along the path (timed at laser.speed_m_s, power
/// laser.power_W) while integrating grain evolution and accumulating melt.
/// Each step touches only the box around the source where the mobility is
/// non-zero plus the bounding box of melt still awaiting regrowth; every other
/// voxel would be left unchanged anyway, so the result does not depend on it.
TrackResult run_track(const GrainField& initial, const ScanPath& path, const LaserParams& laser,
                      const MaterialThermal& mat, const PFParams& p, const TrackOptions& opt = {});

}  // namespace meltpath
