#pragma once

// Independent references for the learning code: central finite differences
// for network gradients and exhaustive search over gridworld episodes.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "meltpath/dqn.hpp"
#include "meltpath/environment.hpp"

namespace meltpath::test {

struct GradientBatch {
  std::vector<double> x;
  std::vector<std::size_t> actions;
  std::vector<double> targets;
  std::size_t batch = 0;
};

inline GradientBatch random_batch(const Mlp& net, std::size_t batch, Rng& rng) {
  GradientBatch b;
  b.batch = batch;
  b.x.resize(batch * net.in);
  for (auto& v : b.x) v = uniform(rng, -1.0, 1.0);
  for (std::size_t i = 0; i < batch; ++i) {
    b.actions.push_back(uniform_index(rng, net.out));
    b.targets.push_back(uniform(rng, -2.0, 2.0));
  }
  return b;
}

/// Worst per-tensor relative error ||analytic - numeric|| / max(||analytic||, ||numeric||).
inline double max_gradient_error(const Mlp& net, const GradientBatch& b, double h = 1e-6) {
  Mlp grad;
  mse_loss_grad(net, b.x.data(), b.batch, b.actions.data(), b.targets.data(), grad);
  Mlp probe = net;
  Mlp scratch;
  auto loss = [&] { return mse_loss_grad(probe, b.x.data(), b.batch, b.actions.data(), b.targets.data(), scratch); };
  const auto params = probe.tensors();
  const auto analytic = std::as_const(grad).tensors();
  double worst = 0.0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < params[t]->size(); ++i) {
      double& p = (*params[t])[i];
      const double saved = p;
      p = saved + h;
      const double up = loss();
      p = saved - h;
      const double down = loss();
      p = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = (*analytic[t])[i];
      diff += (a - numeric) * (a - numeric);
      na += a * a;
      nn += numeric * numeric;
    }
    const double scale = std::sqrt(std::max(na, nn));
    if (scale > 0.0) worst = std::max(worst, std::sqrt(diff) / scale);
  }
  return worst;
}

/// Best cumulative episode reward over every action sequence.
inline double exhaustive_best_return(GridEnv& env) {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<Action> prefix;
  auto rec = [&](auto&& self) -> void {
    for (Action a : kActions) {
      env.reset();
      double total = 0.0;
      for (Action p : prefix) total += env.step(p).reward;
      const auto r = env.step(a);
      total += r.reward;
      if (r.done) {
        best = std::max(best, total);
      } else {
        prefix.push_back(a);
        self(self);
        prefix.pop_back();
      }
    }
  };
  rec(rec);
  return best;
}

/// Cumulative reward of the greedy policy of `net`.
inline double greedy_return(GridEnv& env, const Mlp& net) {
  env.reset();
  double total = 0.0;
  while (!env.state().done) total += env.step(kActions[argmax(q_values(net, env.state().agent_index))]).reward;
  return total;
}

}  // namespace meltpath::test
