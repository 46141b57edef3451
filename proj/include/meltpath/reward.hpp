#pragma once

// Per-movement microstructure metrics over a scan grid, precomputed once and
// looked up by the reinforcement-learning environment.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "meltpath/domain.hpp"
#include "meltpath/phase_field.hpp"
#include "meltpath/scanpath.hpp"
#include "meltpath/thermal.hpp"

namespace meltpath {

inline constexpr long kOutOfBounds = -1;

struct Movement {
  std::size_t from_index = 0;
  Action action = Action::up;
  long to_index = kOutOfBounds;

  bool in_bounds() const { return to_index != kOutOfBounds; }
  friend bool operator==(const Movement&, const Movement&) = default;
};

/// Every (point, action) pair: points in index order, actions Up, Down, Left, Right.
std::vector<Movement> enumerate_movements(const GridSpec& grid);
/// Position of a movement in enumerate_movements order.
inline std::size_t movement_slot(std::size_t from_index, Action a) {
  return from_index * 4 + static_cast<std::size_t>(a);
}

struct MovementMetrics {
  std::optional<double> avg_aspect_ratio;
  std::optional<double> avg_grain_volume_um3;
  std::size_t melted_voxels = 0;

  bool valid() const { return avg_aspect_ratio.has_value() && avg_grain_volume_um3.has_value(); }
  friend bool operator==(const MovementMetrics&, const MovementMetrics&) = default;
};

struct MetricsOptions {
  double min_volume_um3 = 500.0;
  int connectivity = 6;
  TrackOptions track;  // samples are never collected here
};

/// Scans the single segment of an in-bounds movement over a fresh copy of
/// `base` and measures the grains inside the melt. The simulation runs on a
/// crop around the segment wide enough that the mobile region never reaches a
/// cut face. Throws InvalidArgument for out-of-bounds movements.
MovementMetrics movement_metrics(const Movement& m, const GridSpec& grid, const GrainField& base,
                                 const LaserParams& laser, const MaterialThermal& mat, const PFParams& pf,
                                 const MetricsOptions& opt = {});

struct RewardEntry {
  Movement movement;
  MovementMetrics metrics;
  bool valid() const { return movement.in_bounds() && metrics.valid(); }
};

struct RewardTable {
  GridSpec grid;
  std::string backend = "dns";
  std::string config_hash;
  std::optional<double> initial_mean_grain_volume_um3;
  std::vector<RewardEntry> entries;  // enumerate_movements order

  const RewardEntry& at(std::size_t from_index, Action a) const { return entries.at(movement_slot(from_index, a)); }
};

enum class Backend { dns, surrogate };
Backend parse_backend(const std::string& s);

struct BuildOptions {
  Backend backend = Backend::dns;
  std::string config_hash;
  std::size_t workers = 1;
  MetricsOptions metrics;
};

/// Computes every in-bounds movement. Results do not depend on the worker
/// count. Failed movements are collected and reported together in a
/// PartialTableError; a surrogate backend is rejected with ConfigError.
RewardTable build_table(const GridSpec& grid, const GrainField& base, const LaserParams& laser,
                        const MaterialThermal& mat, const PFParams& pf, const BuildOptions& opt = {});

/// CSV with an optional leading "# key=value ..." metadata line and the header
/// from_index,action,to_index,avg_aspect_ratio,avg_grain_volume_um3,melted_voxels,valid.
void write_reward_table(const std::filesystem::path& path, const RewardTable& table);
/// Throws FormatError (with byte offset) on a malformed or inconsistent table.
RewardTable read_reward_table(const std::filesystem::path& path);

inline constexpr const char* kRewardTableHeader =
    "from_index,action,to_index,avg_aspect_ratio,avg_grain_volume_um3,melted_voxels,valid";

}  // namespace meltpath
