#include "meltpath/environment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "meltpath/error.hpp"

namespace meltpath {

void RewardConfig::validate() const {
  if (reward_case < 1 || reward_case > 3) throw ConfigError("reward case must be 1, 2 or 3");
  for (double w : {alpha, beta, gv_scale_um3}) {
    if (!std::isfinite(w) || w < 0.0) throw ConfigError("reward weights must be finite and non-negative");
  }
  for (double r : {r_collision, r_oob, r_unvisited_per_point}) {
    if (!std::isfinite(r)) throw ConfigError("reward penalties must be finite");
  }
}

double movement_reward(const RewardEntry& entry, const RewardConfig& cfg, double gv_scale_um3) {
  if (!entry.valid()) return 0.0;
  const double inv_ar = 1.0 / *entry.metrics.avg_aspect_ratio;
  const double inv_gv = gv_scale_um3 / *entry.metrics.avg_grain_volume_um3;
  switch (cfg.reward_case) {
    case 1: return inv_ar;
    case 2: return inv_gv;
    default: return cfg.alpha * inv_ar + cfg.beta * inv_gv;
  }
}

double resolve_gv_scale(const RewardTable& table, const RewardConfig& cfg) {
  if (cfg.gv_scale_um3 > 0.0) return cfg.gv_scale_um3;
  if (table.initial_mean_grain_volume_um3 && *table.initial_mean_grain_volume_um3 > 0.0) {
    return *table.initial_mean_grain_volume_um3;
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& e : table.entries) {
    if (!e.valid()) continue;
    sum += *e.metrics.avg_grain_volume_um3;
    ++count;
  }
  if (count > 0) return sum / static_cast<double>(count);
  if (cfg.reward_case == 1) return 1.0;
  throw ConfigError("no grain-volume scale: set gv_scale_um3 or use a table with valid entries");
}

std::vector<double> EnvState::encoding() const {
  std::vector<double> e(n * n, 0.0);
  e.at(agent_index) = 1.0;
  return e;
}

GridEnv::GridEnv(const GridSpec& grid, const RewardTable& table, RewardConfig cfg)
    : grid_(grid), table_(&table), cfg_(cfg) {
  cfg_.validate();
  if (grid.n == 0) throw InvalidArgument("grid must have at least one point");
  if (table.grid.n != grid.n || table.entries.size() != 4 * grid.point_count()) {
    throw InvalidArgument("reward table was built for a " + std::to_string(table.grid.n) + "x" +
                          std::to_string(table.grid.n) + " grid, environment is " + std::to_string(grid.n) +
                          "x" + std::to_string(grid.n));
  }
  for (std::size_t i = 0; i < grid.point_count(); ++i) {
    for (Action a : kActions) {
      const auto expected = grid.neighbor(i, a);
      const auto& m = table.at(i, a).movement;
      const long to = expected ? static_cast<long>(*expected) : kOutOfBounds;
      if (m.from_index != i || m.action != a || m.to_index != to) {
        throw InvalidArgument("reward table movement order does not match the grid");
      }
    }
  }
  gv_scale_ = resolve_gv_scale(table, cfg_);
  reset();
}

const EnvState& GridEnv::reset() {
  state_ = EnvState{};
  state_.n = grid_.n;
  state_.visited.assign(grid_.point_count(), 0);
  state_.visited[0] = 1;
  state_.visited_count = 1;
  state_.success = grid_.point_count() == 1;
  state_.done = state_.success;
  return state_;
}

StepResult GridEnv::step(Action a) {
  if (state_.done) throw ContractViolation("step called on a finished episode");
  StepResult r;
  const auto next = grid_.neighbor(state_.agent_index, a);
  ++state_.steps;
  if (!next) {
    r.out_of_bounds = true;
    r.reward = cfg_.r_oob;
    r.done = true;
  } else if (state_.visited[*next]) {
    r.revisit = true;
    r.reward = cfg_.r_collision;
    r.done = true;
    state_.agent_index = *next;
  } else {
    r.reward = movement_reward(table_->at(state_.agent_index, a), cfg_, gv_scale_);
    state_.agent_index = *next;
    state_.visited[*next] = 1;
    ++state_.visited_count;
    if (state_.visited_count == grid_.point_count()) {
      r.done = true;
      r.success = true;
    }
  }
  // Guard against configurations where the rules above never terminate.
  if (state_.steps >= grid_.point_count()) r.done = true;
  if (r.done) {
    const auto unvisited = grid_.point_count() - state_.visited_count;
    r.reward += cfg_.r_unvisited_per_point * static_cast<double>(unvisited);
  }
  state_.done = r.done;
  state_.success = r.success;
  return r;
}

double GridEnv::reward_upper_bound() const {
  std::vector<double> best(grid_.point_count(), 0.0);
  for (const auto& e : table_->entries) {
    if (!e.movement.in_bounds()) continue;
    auto& b = best[static_cast<std::size_t>(e.movement.to_index)];
    b = std::max(b, movement_reward(e, cfg_, gv_scale_));
  }
  double sum = 0.0;
  for (std::size_t i = 1; i < best.size(); ++i) sum += best[i];
  return sum;
}

}  // namespace meltpath
