#pragma once

// Gridworld over the scan lattice. The agent starts at the origin point and
// earns the precomputed movement reward for each new point it reaches; leaving
// the grid or re-entering a visited point ends the episode. Every terminal
// transition also charges a penalty per point left unvisited.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "meltpath/reward.hpp"
#include "meltpath/scanpath.hpp"

namespace meltpath {

struct RewardConfig {
  int reward_case = 1;  // 1: aspect ratio, 2: grain volume, 3: weighted sum
  double alpha = 0.5;
  double beta = 0.9;
  /// Divisor that makes the grain-volume term O(1). 0 selects the table's
  /// initial mean grain volume, else the mean over its valid entries.
  double gv_scale_um3 = 0.0;
  double r_collision = -1.0;
  double r_oob = -1.0;
  double r_unvisited_per_point = -10.0;

  /// Throws ConfigError for an unknown case or a negative/non-finite weight.
  void validate() const;
};

/// Movement reward for a new point. Entries without metrics earn 0.
double movement_reward(const RewardEntry& entry, const RewardConfig& cfg, double gv_scale_um3);

/// Resolves the grain-volume divisor for a table; throws ConfigError when none can be derived
/// and the case needs one.
double resolve_gv_scale(const RewardTable& table, const RewardConfig& cfg);

struct EnvState {
  std::size_t n = 0;
  std::size_t agent_index = 0;
  std::vector<std::uint8_t> visited;
  std::size_t visited_count = 0;
  std::size_t steps = 0;
  bool done = false;
  bool success = false;

  std::vector<double> encoding() const;
};

struct StepResult {
  double reward = 0.0;
  bool done = false;
  bool success = false;
  bool out_of_bounds = false;
  bool revisit = false;
};

class GridEnv {
 public:
  /// Throws InvalidArgument when the table was built for a different grid or is incomplete.
  GridEnv(const GridSpec& grid, const RewardTable& table, RewardConfig cfg = {});

  const EnvState& reset();
  /// Throws ContractViolation once the episode is done.
  StepResult step(Action a);

  const EnvState& state() const { return state_; }
  const GridSpec& grid() const { return grid_; }
  const RewardConfig& config() const { return cfg_; }
  double gv_scale_um3() const { return gv_scale_; }
  /// Largest movement reward available at each point summed over the points
  /// other than the origin; no episode can exceed it.
  double reward_upper_bound() const;

 private:
  GridSpec grid_;
  const RewardTable* table_;
  RewardConfig cfg_;
  double gv_scale_ = 1.0;
  EnvState state_;
};

}  // namespace meltpath
