#pragma once

// Laser toolpaths: heuristic fill patterns and grid walks decoded from
// reinforcement-learning action sequences.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "meltpath/domain.hpp"

namespace meltpath {

enum class Action : std::uint8_t { up = 0, down = 1, left = 2, right = 3 };
inline constexpr std::array<Action, 4> kActions{Action::up, Action::down, Action::left, Action::right};

std::string_view action_name(Action a);
/// Accepts "Up"/"up"/"U" and friends; throws InvalidArgument otherwise.
Action parse_action(std::string_view s);

/// Piecewise-linear laser path traversed at constant speed and power.
struct ScanPath {
  std::vector<Vec3> waypoints;  // mm
  double speed_m_s = 0.5;
  double power_W = 25.0;
  /// Per segment: true for connecting moves between scan passes. Empty when unknown.
  std::vector<std::uint8_t> jog;

  std::size_t segment_count() const { return waypoints.empty() ? 0 : waypoints.size() - 1; }
  double length_mm() const;
  double duration_s() const;
  /// Arrival time (s) at each waypoint.
  std::vector<double> waypoint_times() const;

  struct State {
    Vec3 position;
    Vec3 direction;  // unit vector of the active segment
    std::size_t segment = 0;
  };
  /// Laser position at time t in [0, duration]; throws InvalidArgument outside.
  State at(double t) const;

  /// Throws InvalidArgument unless the path has a waypoint, consecutive
  /// waypoints differ and everything lies inside the domain box.
  void validate(const DomainSpec& domain) const;
};

/// n x n lattice of laser stops. Index = row * n + col, row along +y, col along +x.
struct GridSpec {
  std::size_t n = 5;
  double hatch_mm = 0.15;
  Vec3 origin_mm;  // lower-left grid point; z is the laser plane

  /// Grid centred in the x-y extent of the domain, on its top surface.
  static GridSpec centered(const DomainSpec& domain, std::size_t n, double hatch_mm);

  std::size_t point_count() const { return n * n; }
  Vec3 point(std::size_t index) const;
  /// Neighbour reached by an action, or nullopt when it leaves the grid.
  std::optional<std::size_t> neighbor(std::size_t index, Action a) const;
  void validate(const DomainSpec& domain) const;
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct PatternOptions {
  /// Inset from the domain edges in mm; negative centres the pattern.
  double margin_mm = -1.0;
  double speed_m_s = 0.5;
  double power_W = 25.0;
};

/// Vertical zigzag: columns hatch apart, alternating direction, joined by jogs.
ScanPath vertical_serpentine(const DomainSpec& domain, double hatch_mm, const PatternOptions& opt = {});
/// Inward rectangular spiral, clockwise seen from +z, rings hatch apart.
ScanPath spiral_clockwise(const DomainSpec& domain, double hatch_mm, const PatternOptions& opt = {});
/// 45 degree passes hatch apart, serpentine-linked along the boundary. The
/// default margin here is zero (passes centred on the full diagonal extent).
ScanPath diagonal(const DomainSpec& domain, double hatch_mm, const PatternOptions& opt = {0.0, 0.5, 25.0});

/// Grid walk from the origin point. Throws InvalidPath naming the first step
/// that leaves the grid or revisits a point.
ScanPath path_from_actions(const GridSpec& grid, std::span<const Action> actions, double speed_m_s = 0.5,
                           double power_W = 25.0);

/// Vertical boustrophedon over the grid: up column 0, right, down column 1, ...
std::vector<Action> serpentine_actions(std::size_t n);

/// CSV columns x_mm,y_mm,z_mm,t_s,power_W; `comment` lines are written first, prefixed by '#'.
void write_path_csv(const std::filesystem::path& path, const ScanPath& scan,
                    const std::vector<std::string>& comment = {});
ScanPath read_path_csv(const std::filesystem::path& path);

}  // namespace meltpath
