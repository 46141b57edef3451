#pragma once

// Deep Q-network over the gridworld: a two-hidden-layer ReLU perceptron fed a
// one-hot position, trained from a replay buffer against a periodically
// synchronised target network with epsilon-greedy exploration.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "meltpath/environment.hpp"
#include "meltpath/rng.hpp"
#include "meltpath/scanpath.hpp"

namespace meltpath {

/// in -> hidden -> hidden -> out, weights row-major [fan_in x fan_out].
struct Mlp {
  std::size_t in = 0, hidden = 0, out = 4;
  std::vector<double> w1, b1, w2, b2, w3, b3;

  Mlp() = default;
  Mlp(std::size_t in, std::size_t hidden, std::size_t out = 4);  // all zero

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  static Mlp random(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng);

  std::vector<std::vector<double>*> tensors();
  std::vector<const std::vector<double>*> tensors() const;
  std::size_t parameter_count() const;
  bool finite() const;
  friend bool operator==(const Mlp&, const Mlp&) = default;
};

/// Hidden width for an n x n grid: 64 up to 25 inputs, 128 above.
std::size_t default_hidden_width(std::size_t n);

/// Intermediate values of a batched forward pass, kept for backpropagation.
struct MlpActivations {
  std::size_t batch = 0;
  std::vector<double> h1, h2, q;  // post-ReLU hidden layers and outputs
};

/// x is batch x in, row-major. Output rows are in act.q.
void forward(const Mlp& net, const double* x, std::size_t batch, MlpActivations& act);
/// Q-values for one input vector.
std::vector<double> forward(const Mlp& net, const std::vector<double>& x);
/// Q-values for a one-hot state.
std::vector<double> q_values(const Mlp& net, std::size_t state_index);

/// Loss = mean over the batch of (Q(x_b, a_b) - y_b)^2. Overwrites `grad`
/// (same shapes as `net`) with dLoss/dparams and returns the loss.
double mse_loss_grad(const Mlp& net, const double* x, std::size_t batch, const std::size_t* actions,
                     const double* targets, Mlp& grad);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(const Mlp& shape, AdamConfig cfg);
  void step(Mlp& net, const Mlp& grad);
  std::uint64_t steps() const { return t_; }

 private:
  AdamConfig cfg_;
  Mlp m_, v_;
  std::uint64_t t_ = 0;
};

struct Transition {
  std::uint32_t state = 0;
  std::uint8_t action = 0;
  double reward = 0.0;
  std::uint32_t next_state = 0;
  bool done = false;
  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Fixed-capacity ring; once full each push evicts the oldest transition.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void push(const Transition& t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  /// Transitions in insertion order, oldest first.
  std::vector<Transition> contents() const;
  /// `count` distinct transitions drawn uniformly; count must not exceed size().
  std::vector<Transition> sample(std::size_t count, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // slot the next push overwrites once full
  std::vector<Transition> data_;
};

/// Tabular Bellman step: q + lr (r + gamma max_next - q).
inline double bellman_update(double q, double reward, double gamma, double max_next, double lr) {
  return q + lr * (reward + gamma * max_next - q);
}

/// Lowest index among the maxima.
std::size_t argmax(const std::vector<double>& q);

/// With probability eps a uniform action, otherwise the greedy one. One
/// uniform draw is consumed per call, plus one more for a random action.
Action select_action(const Mlp& net, std::size_t state_index, double eps, Rng& rng);

struct TrainConfig {
  AdamConfig adam;
  double gamma = 0.99;
  double eps_start = 1.0;
  double eps_min = 0.01;
  double eps_decay = 0.995;
  std::size_t batch_size = 64;
  std::size_t target_sync_every = 500;  // environment steps
  std::size_t max_episodes = 15000;
  std::size_t snapshot_every = 100;
  std::size_t replay_capacity = 10000;
  std::size_t hidden = 0;  // 0 selects default_hidden_width
  std::uint64_t seed = 1;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// max(eps * decay, eps_min).
double epsilon_decay(double eps, const TrainConfig& cfg);

/// One gradient step on a batch against the frozen target network. Throws
/// NumericFailure when the loss is not finite.
double td_update(Mlp& net, const Mlp& target, const std::vector<Transition>& batch, std::size_t state_count,
                 double gamma, Adam& adam);

struct EpisodeRecord {
  std::size_t episode = 0;
  double cumulative_reward = 0.0;
  std::size_t steps = 0;
  std::size_t visited_count = 0;
  double epsilon = 0.0;
  friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

struct GreedyRollout {
  std::vector<Action> actions;         // valid prefix only
  std::vector<std::size_t> points;     // visited grid indices, origin first
  bool full_coverage = false;
  std::optional<Action> stop_action;   // first move that left the grid or revisited
  ScanPath path;                       // empty waypoints when n == 0
};

/// Runs the raw greedy policy from the origin until a move leaves the grid or
/// revisits a point, or every point is covered. Never throws for bad policies.
GreedyRollout extract_greedy_path(const Mlp& net, const GridSpec& grid, double speed_m_s = 0.5,
                                  double power_W = 25.0);

struct Snapshot {
  std::size_t episode = 0;
  GreedyRollout rollout;
};

struct TrainResult {
  Mlp net;
  std::vector<EpisodeRecord> log;
  std::vector<Snapshot> snapshots;
  std::size_t env_steps = 0;
  std::size_t gradient_steps = 0;
};

/// Called after every episode; returning true stops training early.
using EpisodeCallback = std::function<bool(const EpisodeRecord&, const Mlp&)>;

TrainResult train(GridEnv& env, const TrainConfig& cfg, const EpisodeCallback& on_episode = {});

/// Columns episode,cumulative_reward,steps,visited_count,epsilon.
void write_episode_log(const std::filesystem::path& path, const std::vector<EpisodeRecord>& log,
                       const std::vector<std::string>& comment = {});

/// Plain-text weights: a shape line then one tensor per line.
void write_mlp(const std::filesystem::path& path, const Mlp& net, const std::vector<std::string>& comment = {});
/// Throws FormatError on malformed input.
Mlp read_mlp(const std::filesystem::path& path);

}  // namespace meltpath
