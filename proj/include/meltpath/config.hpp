#pragma once

// Experiment configuration: an INI file with a versioned schema. Every key has
// a default, unknown keys are rejected, and the canonical form of the parsed
// values is hashed so artifacts can name the configuration that made them.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "meltpath/dqn.hpp"
#include "meltpath/environment.hpp"
#include "meltpath/phase_field.hpp"
#include "meltpath/reward.hpp"
#include "meltpath/thermal.hpp"

namespace meltpath {

inline constexpr int kConfigSchemaVersion = 1;

struct VoiConfig {
  std::array<double, 3> size_mm = kDefaultVoiMm;
  std::vector<double> powers_W{20.0, 22.0, 24.0, 26.0, 28.0, 30.0};
  std::size_t steps = 1000;
  std::size_t sample_every = 100;
  bool augment = true;
};

struct ExperimentConfig {
  std::array<double, 3> domain_size_mm{1.0, 1.0, 0.1};
  double voxel_um = 5.0;
  std::size_t voronoi_seeds = 16667;
  int orientations = kDefaultOrientations;

  MaterialThermal material;
  LaserParams laser;
  PFParams pf;
  TrackOptions track;  // only sample_every, cooldown_s and settle_max_steps are configurable

  std::size_t grid_n = 5;
  double hatch_mm = 0.15;

  double min_volume_um3 = 500.0;
  int connectivity = 6;

  std::string backend = "dns";
  RewardConfig reward;
  TrainConfig train;
  VoiConfig voi;

  std::uint64_t seed = 1;
  // Neither of these affects results, so neither enters the hash.
  std::filesystem::path output_dir = "out";
  std::size_t threads = 0;  // 0 defers to MELTPATH_THREADS / hardware

  DomainSpec domain() const;
  GridSpec grid() const;
  MetricsOptions metrics() const;
  std::size_t workers() const;

  /// Throws ConfigError when values are out of range or inconsistent
  /// (grid outside the domain, unstable time step, ...).
  void validate() const;
  /// Sorted "section.key=value" lines covering every result-affecting value.
  std::string canonical() const;
  /// FNV-1a 64 of canonical(), as 16 hex digits.
  std::string hash() const;
};

/// Parses and validates an INI file. Throws ConfigError for unreadable files,
/// syntax errors, unknown keys, bad values and schema mismatches.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text);
/// Applies "section.key=value" on top of a config (re-validated by the caller).
void apply_override(ExperimentConfig& cfg, const std::string& assignment);
/// INI text holding every key; parse_config(to_ini(c)) reproduces c.
std::string to_ini(const ExperimentConfig& cfg);

std::uint64_t fnv1a64(const void* data, std::size_t size);
std::string hex64(std::uint64_t v);

}  // namespace meltpath
