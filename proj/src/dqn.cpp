#include "meltpath/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "meltpath/error.hpp"
#include "meltpath/simd/kernels.hpp"

namespace meltpath {

namespace {

// rows x cols row-major -> cols x rows.
void transpose(const double* a, std::size_t rows, std::size_t cols, std::vector<double>& out) {
  out.resize(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = a[r * cols + c];
  }
}

void tile_bias(const std::vector<double>& bias, std::size_t batch, std::vector<double>& out) {
  out.resize(batch * bias.size());
  for (std::size_t b = 0; b < batch; ++b) std::copy(bias.begin(), bias.end(), out.begin() + b * bias.size());
}

void column_sums(const std::vector<double>& a, std::size_t rows, std::size_t cols, std::vector<double>& out) {
  out.assign(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[c] += a[r * cols + c];
  }
}

}  // namespace

Mlp::Mlp(std::size_t in_, std::size_t hidden_, std::size_t out_)
    : in(in_),
      hidden(hidden_),
      out(out_),
      w1(in_ * hidden_, 0.0),
      b1(hidden_, 0.0),
      w2(hidden_ * hidden_, 0.0),
      b2(hidden_, 0.0),
      w3(hidden_ * out_, 0.0),
      b3(out_, 0.0) {}

Mlp Mlp::random(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng) {
  Mlp net(in, hidden, out);
  const double fan_in[] = {double(in), double(in), double(hidden), double(hidden), double(hidden), double(hidden)};
  auto ts = net.tensors();
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double bound = 1.0 / std::sqrt(fan_in[k]);
    for (double& w : *ts[k]) w = uniform(rng, -bound, bound);
  }
  return net;
}

std::vector<std::vector<double>*> Mlp::tensors() { return {&w1, &b1, &w2, &b2, &w3, &b3}; }
std::vector<const std::vector<double>*> Mlp::tensors() const { return {&w1, &b1, &w2, &b2, &w3, &b3}; }

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto* t : tensors()) n += t->size();
  return n;
}

bool Mlp::finite() const {
  for (const auto* t : tensors()) {
    for (double w : *t) {
      if (!std::isfinite(w)) return false;
    }
  }
  return true;
}

std::size_t default_hidden_width(std::size_t n) { return n * n <= 25 ? 64 : 128; }

void forward(const Mlp& net, const double* x, std::size_t batch, MlpActivations& act) {
  const auto& k = simd::active();
  act.batch = batch;
  tile_bias(net.b1, batch, act.h1);
  k.gemm_acc(x, net.w1.data(), act.h1.data(), batch, net.in, net.hidden);
  k.relu(act.h1.data(), act.h1.size());
  tile_bias(net.b2, batch, act.h2);
  k.gemm_acc(act.h1.data(), net.w2.data(), act.h2.data(), batch, net.hidden, net.hidden);
  k.relu(act.h2.data(), act.h2.size());
  tile_bias(net.b3, batch, act.q);
  k.gemm_acc(act.h2.data(), net.w3.data(), act.q.data(), batch, net.hidden, net.out);
}

std::vector<double> forward(const Mlp& net, const std::vector<double>& x) {
  if (x.size() != net.in) throw InvalidArgument("input length does not match the network");
  MlpActivations act;
  forward(net, x.data(), 1, act);
  return act.q;
}

std::vector<double> q_values(const Mlp& net, std::size_t state_index) {
  std::vector<double> x(net.in, 0.0);
  x.at(state_index) = 1.0;
  return forward(net, x);
}

namespace {

// Fills `grad` from the output gradient dq (batch x out) of a forward pass.
void backward(const Mlp& net, const double* x, const MlpActivations& act, const std::vector<double>& dq,
              Mlp& grad) {
  const auto& k = simd::active();
  const std::size_t batch = act.batch, H = net.hidden, O = net.out;
  grad = Mlp(net.in, H, O);
  std::vector<double> t, dh2(batch * H, 0.0), dh1(batch * H, 0.0);
  transpose(act.h2.data(), batch, H, t);
  k.gemm_acc(t.data(), dq.data(), grad.w3.data(), H, batch, O);
  column_sums(dq, batch, O, grad.b3);
  transpose(net.w3.data(), H, O, t);
  k.gemm_acc(dq.data(), t.data(), dh2.data(), batch, O, H);
  k.relu_backward(act.h2.data(), dh2.data(), dh2.size());

  transpose(act.h1.data(), batch, H, t);
  k.gemm_acc(t.data(), dh2.data(), grad.w2.data(), H, batch, H);
  column_sums(dh2, batch, H, grad.b2);
  transpose(net.w2.data(), H, H, t);
  k.gemm_acc(dh2.data(), t.data(), dh1.data(), batch, H, H);
  k.relu_backward(act.h1.data(), dh1.data(), dh1.size());

  transpose(x, batch, net.in, t);
  k.gemm_acc(t.data(), dh1.data(), grad.w1.data(), net.in, batch, H);
  column_sums(dh1, batch, H, grad.b1);
}

// Distinct states of a batch in order of first appearance, and each sample's slot.
struct UniqueStates {
  std::vector<std::size_t> states;
  std::vector<std::size_t> slot;
};

UniqueStates unique_states(const std::vector<Transition>& batch, std::size_t state_count, bool next) {
  UniqueStates u;
  std::vector<std::size_t> where(state_count, SIZE_MAX);
  for (const auto& t : batch) {
    const std::size_t s = next ? t.next_state : t.state;
    if (s >= state_count) throw InvalidArgument("transition state outside the grid");
    if (where[s] == SIZE_MAX) {
      where[s] = u.states.size();
      u.states.push_back(s);
    }
    u.slot.push_back(where[s]);
  }
  return u;
}

std::vector<double> one_hot_rows(const std::vector<std::size_t>& states, std::size_t state_count) {
  std::vector<double> x(states.size() * state_count, 0.0);
  for (std::size_t r = 0; r < states.size(); ++r) x[r * state_count + states[r]] = 1.0;
  return x;
}

}  // namespace

double mse_loss_grad(const Mlp& net, const double* x, std::size_t batch, const std::size_t* actions,
                     const double* targets, Mlp& grad) {
  if (batch == 0) throw InvalidArgument("empty batch");
  MlpActivations act;
  forward(net, x, batch, act);
  const std::size_t O = net.out;
  std::vector<double> dq(batch * O, 0.0);
  double loss = 0.0;
  const double inv_b = 1.0 / static_cast<double>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const double diff = act.q[b * O + actions[b]] - targets[b];
    loss += diff * diff;
    dq[b * O + actions[b]] = 2.0 * diff * inv_b;
  }
  backward(net, x, act, dq, grad);
  return loss * inv_b;
}

Adam::Adam(const Mlp& shape, AdamConfig cfg)
    : cfg_(cfg), m_(shape.in, shape.hidden, shape.out), v_(shape.in, shape.hidden, shape.out) {}

void Adam::step(Mlp& net, const Mlp& grad) {
  ++t_;
  const simd::AdamStep s{cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.eps,
                         1.0 - std::pow(cfg_.beta1, static_cast<double>(t_)),
                         1.0 - std::pow(cfg_.beta2, static_cast<double>(t_))};
  auto p = net.tensors();
  auto g = grad.tensors();
  auto m = m_.tensors();
  auto v = v_.tensors();
  const auto& k = simd::active();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i]->size() != g[i]->size() || p[i]->size() != m[i]->size()) {
      throw InvalidArgument("optimizer and network shapes differ");
    }
    k.adam(p[i]->data(), g[i]->data(), m[i]->data(), v[i]->data(), p[i]->size(), s);
  }
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InvalidArgument("replay capacity must be positive");
  data_.reserve(capacity);
}

void ReplayBuffer::push(const Transition& t) {
  if (data_.size() < capacity_) {
    data_.push_back(t);
    return;
  }
  data_[head_] = t;
  head_ = (head_ + 1) % capacity_;
}

std::vector<Transition> ReplayBuffer::contents() const {
  std::vector<Transition> out;
  out.reserve(data_.size());
  for (std::size_t i = 0; i < data_.size(); ++i) out.push_back(data_[(head_ + i) % data_.size()]);
  return out;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t count, Rng& rng) const {
  if (count > data_.size()) throw InvalidArgument("sample larger than the buffer");
  // Floyd's algorithm: count distinct indices with count draws.
  std::vector<std::size_t> chosen;
  chosen.reserve(count);
  const std::size_t n = data_.size();
  for (std::size_t j = n - count; j < n; ++j) {
    const auto r = static_cast<std::size_t>(uniform_index(rng, j + 1));
    if (std::find(chosen.begin(), chosen.end(), r) == chosen.end()) {
      chosen.push_back(r);
    } else {
      chosen.push_back(j);
    }
  }
  std::vector<Transition> out;
  out.reserve(count);
  for (std::size_t i : chosen) out.push_back(data_[i]);
  return out;
}

std::size_t argmax(const std::vector<double>& q) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < q.size(); ++i) {
    if (q[i] > q[best]) best = i;
  }
  return best;
}

Action select_action(const Mlp& net, std::size_t state_index, double eps, Rng& rng) {
  if (uniform01(rng) < eps) return static_cast<Action>(uniform_index(rng, 4));
  return static_cast<Action>(argmax(q_values(net, state_index)));
}

void TrainConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  if (!(eps_min >= 0.0 && eps_min <= eps_start && eps_start <= 1.0)) {
    throw ConfigError("epsilon must satisfy 0 <= eps_min <= eps <= 1");
  }
  if (!(eps_decay > 0.0 && eps_decay <= 1.0)) throw ConfigError("epsilon decay must lie in (0, 1]");
  if (!(adam.lr > 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) ||
      !(adam.eps > 0.0)) {
    throw ConfigError("invalid optimizer settings");
  }
  if (batch_size == 0 || batch_size > replay_capacity) throw ConfigError("batch size must be in [1, replay capacity]");
  if (target_sync_every == 0) throw ConfigError("target sync period must be positive");
  if (max_episodes == 0) throw ConfigError("at least one episode is required");
}

double epsilon_decay(double eps, const TrainConfig& cfg) { return std::max(eps * cfg.eps_decay, cfg.eps_min); }

double td_update(Mlp& net, const Mlp& target, const std::vector<Transition>& batch, std::size_t state_count,
                 double gamma, Adam& adam) {
  if (batch.empty()) throw InvalidArgument("empty batch");
  // Inputs are one-hot, so samples sharing a state share activations and
  // their output gradients can be summed before backpropagation.
  const auto cur = unique_states(batch, state_count, false);
  const auto nxt = unique_states(batch, state_count, true);
  const auto xn = one_hot_rows(nxt.states, state_count);
  MlpActivations next;
  forward(target, xn.data(), nxt.states.size(), next);
  const auto x = one_hot_rows(cur.states, state_count);
  MlpActivations act;
  forward(net, x.data(), cur.states.size(), act);

  const std::size_t O = net.out;
  std::vector<double> dq(cur.states.size() * O, 0.0);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const double* qn = next.q.data() + nxt.slot[b] * O;
    const double best = *std::max_element(qn, qn + O);
    const double y = batch[b].done ? batch[b].reward : batch[b].reward + gamma * best;
    const std::size_t i = cur.slot[b] * O + batch[b].action;
    const double diff = act.q[i] - y;
    loss += diff * diff;
    dq[i] += 2.0 * diff * inv_b;
  }
  loss *= inv_b;
  if (!std::isfinite(loss)) throw NumericFailure("non-finite temporal-difference loss", 0);
  Mlp grad;
  backward(net, x.data(), act, dq, grad);
  adam.step(net, grad);
  return loss;
}

GreedyRollout extract_greedy_path(const Mlp& net, const GridSpec& grid, double speed_m_s, double power_W) {
  GreedyRollout r;
  if (grid.n == 0) return r;
  std::vector<std::uint8_t> visited(grid.point_count(), 0);
  std::size_t cur = 0;
  visited[0] = 1;
  r.points.push_back(0);
  while (r.points.size() < grid.point_count()) {
    const auto a = static_cast<Action>(argmax(q_values(net, cur)));
    const auto next = grid.neighbor(cur, a);
    if (!next || visited[*next]) {
      r.stop_action = a;
      break;
    }
    visited[*next] = 1;
    cur = *next;
    r.actions.push_back(a);
    r.points.push_back(cur);
  }
  r.full_coverage = r.points.size() == grid.point_count();
  r.path = path_from_actions(grid, r.actions, speed_m_s, power_W);
  return r;
}

TrainResult train(GridEnv& env, const TrainConfig& cfg, const EpisodeCallback& on_episode) {
  cfg.validate();
  const std::size_t states = env.grid().point_count();
  const std::size_t hidden = cfg.hidden ? cfg.hidden : default_hidden_width(env.grid().n);
  // The environment is deterministic; its stream is reserved so that adding a
  // stochastic start later does not shift the other streams.
  Rng net_rng(stream_seed(cfg.seed, "net-init"));
  Rng action_rng(stream_seed(cfg.seed, "action"));
  Rng sample_rng(stream_seed(cfg.seed, "sampling"));

  TrainResult result;
  result.net = Mlp::random(states, hidden, 4, net_rng);
  Mlp target = result.net;
  Adam adam(result.net, cfg.adam);
  ReplayBuffer buffer(cfg.replay_capacity);
  double eps = cfg.eps_start;

  for (std::size_t episode = 1; episode <= cfg.max_episodes; ++episode) {
    env.reset();
    double total = 0.0;
    while (!env.state().done) {
      const std::size_t s = env.state().agent_index;
      const Action a = select_action(result.net, s, eps, action_rng);
      const StepResult step = env.step(a);
      total += step.reward;
      buffer.push({static_cast<std::uint32_t>(s), static_cast<std::uint8_t>(a), step.reward,
                   static_cast<std::uint32_t>(env.state().agent_index), step.done});
      ++result.env_steps;
      if (buffer.size() >= cfg.batch_size) {
        td_update(result.net, target, buffer.sample(cfg.batch_size, sample_rng), states, cfg.gamma, adam);
        ++result.gradient_steps;
      }
      if (result.env_steps % cfg.target_sync_every == 0) target = result.net;
    }
    const EpisodeRecord rec{episode, total, env.state().steps, env.state().visited_count, eps};
    result.log.push_back(rec);
    if (cfg.snapshot_every > 0 && episode % cfg.snapshot_every == 0) {
      result.snapshots.push_back({episode, extract_greedy_path(result.net, env.grid())});
    }
    eps = epsilon_decay(eps, cfg);
    if (on_episode && on_episode(rec, result.net)) break;
  }
  return result;
}

void write_episode_log(const std::filesystem::path& path, const std::vector<EpisodeRecord>& log,
                       const std::vector<std::string>& comment) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw InvalidArgument("cannot open " + path.string() + " for writing");
  for (const auto& c : comment) std::fprintf(f, "# %s\n", c.c_str());
  std::fprintf(f, "episode,cumulative_reward,steps,visited_count,epsilon\n");
  for (const auto& r : log) {
    std::fprintf(f, "%zu,%.17g,%zu,%zu,%.17g\n", r.episode, r.cumulative_reward, r.steps, r.visited_count,
                 r.epsilon);
  }
  if (std::fclose(f) != 0) throw InvalidArgument("failed writing " + path.string());
}

void write_mlp(const std::filesystem::path& path, const Mlp& net, const std::vector<std::string>& comment) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw InvalidArgument("cannot open " + path.string() + " for writing");
  for (const auto& c : comment) std::fprintf(f, "# %s\n", c.c_str());
  std::fprintf(f, "mlp %zu %zu %zu\n", net.in, net.hidden, net.out);
  for (const auto* t : net.tensors()) {
    for (std::size_t i = 0; i < t->size(); ++i) std::fprintf(f, i ? " %.17g" : "%.17g", (*t)[i]);
    std::fprintf(f, "\n");
  }
  if (std::fclose(f) != 0) throw InvalidArgument("failed writing " + path.string());
}

Mlp read_mlp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string(), 0);
  std::string line;
  std::uint64_t offset = 0;
  auto next_line = [&](std::uint64_t& here) {
    while (std::getline(in, line)) {
      here = offset;
      offset += line.size() + 1;
      if (!line.empty() && line[0] != '#') return true;
    }
    here = offset;
    return false;
  };
  std::uint64_t here = 0;
  if (!next_line(here)) throw FormatError("missing network header", here);
  std::istringstream head(line);
  std::string tag;
  std::size_t nin = 0, nh = 0, nout = 0;
  if (!(head >> tag >> nin >> nh >> nout) || tag != "mlp" || nin == 0 || nh == 0 || nout == 0) {
    throw FormatError("bad network header", here);
  }
  Mlp net(nin, nh, nout);
  for (auto* t : net.tensors()) {
    if (!next_line(here)) throw FormatError("truncated network file", here);
    std::istringstream ss(line);
    for (double& w : *t) {
      std::string tok;
      if (!(ss >> tok)) throw FormatError("tensor has too few values", here);
      char* end = nullptr;
      w = std::strtod(tok.c_str(), &end);
      if (*end != '\0' || !std::isfinite(w)) throw FormatError("bad weight value", here);
    }
    std::string extra;
    if (ss >> extra) throw FormatError("tensor has too many values", here);
  }
  return net;
}

}  // namespace meltpath
