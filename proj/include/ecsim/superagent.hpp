#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ecsim/config.hpp"
#include "ecsim/metrics.hpp"
#include "ecsim/qnetwork.hpp"
#include "ecsim/simulation.hpp"

namespace ecsim {

enum class Action : std::uint8_t { warning = 0, reiterating = 1, forcing = 2, observing = 3 };

inline constexpr std::array<Action, kActionCount> kAllActions{
    Action::warning, Action::reiterating, Action::forcing, Action::observing};

inline std::string_view to_string(Action a) {
  switch (a) {
    case Action::warning: return "warning";
    case Action::reiterating: return "reiterating";
    case Action::forcing: return "forcing";
    case Action::observing: return "observing";
  }
  return "?";
}

inline State to_state(const Observation& o) { return {o.gc, o.gom, o.mia}; }

// ---------------------------------------------------------------------------
// Reward

inline constexpr double kRewardEpsilon = 0.01;

// AW = 1/GOM + 1/MIA, denominators clamped at 0.01 so AW <= 200.
inline double action_weight(double gom, double mia) {
  return 1.0 / std::max(gom, kRewardEpsilon) + 1.0 / std::max(mia, kRewardEpsilon);
}

// AR = GC_k - GC_{k-1}; negative means the cascade shrank.
inline double action_result(double gc_now, double gc_prev) { return gc_now - gc_prev; }

// Warning and Forcing are one-shot within an episode; repeating them is
// scored differently.
struct EpisodeFlags {
  bool warning_done = false;
  bool forcing_done = false;

  bool already_done(Action a) const {
    return (a == Action::warning && warning_done) || (a == Action::forcing && forcing_done);
  }
  void mark(Action a) {
    if (a == Action::warning) warning_done = true;
    if (a == Action::forcing) forcing_done = true;
  }
};

inline double reward(double ar, double aw, Action action, const EpisodeFlags& flags, double gc) {
  if (flags.already_done(action)) return gc > 0.5 ? 0.0 : 1.0;
  return ar <= 0.0 ? (1.0 + aw * 0.5) - ar : (0.0 + aw * 0.5) - ar;
}

// ---------------------------------------------------------------------------
// Acting

// Epsilon-greedy; greedy ties go to the lowest action index.
inline Action select_action(const QNetwork& net, const Observation& obs, double epsilon, Rng& rng) {
  if (epsilon > 0.0 && rng.uniform() < epsilon)
    return kAllActions[rng.below(kActionCount)];
  return kAllActions[argmax(net.forward(to_state(obs)))];
}

inline void apply_action(Simulation& sim, Action action) {
  const SimConfig& c = sim.config();
  const std::size_t local_count = round_count(c.node_range * static_cast<double>(sim.node_count()));
  switch (action) {
    case Action::warning:
      if (c.global_warning) {
        sim.apply_warning_all();
      } else {
        const auto targets = sim.top_a_active(c.choose_method, local_count);
        sim.apply_warning(targets);
      }
      break;
    case Action::reiterating: {
      const auto targets = sim.top_a_active(c.choose_method, local_count);
      sim.apply_reiterate(targets);
      break;
    }
    case Action::forcing:
      sim.apply_forcing(c.choose_method, c.node_range_static_b);
      break;
    case Action::observing:
      break;
  }
}

// ---------------------------------------------------------------------------
// Replay

struct Transition {
  Observation state;
  Action action = Action::observing;
  double reward = 0.0;
  Observation next_state;
  bool terminal = false;
};

// Fixed-capacity ring; once full, each push overwrites the oldest entry.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
  }

  std::size_t size() const noexcept { return items_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }

  void push(const Transition& t) {
    if (items_.size() < capacity_) {
      items_.push_back(t);
    } else {
      items_[cursor_] = t;
    }
    cursor_ = (cursor_ + 1) % capacity_;
  }

  // Entries in insertion order, oldest first.
  std::vector<Transition> contents() const {
    std::vector<Transition> out;
    out.reserve(items_.size());
    const std::size_t start = items_.size() < capacity_ ? 0 : cursor_;
    for (std::size_t i = 0; i < items_.size(); ++i) out.push_back(items_[(start + i) % items_.size()]);
    return out;
  }

  // `count` distinct entries, uniformly at random.
  std::vector<Transition> sample(std::size_t count, Rng& rng) const {
    if (count > items_.size()) throw std::invalid_argument("ReplayBuffer: not enough entries");
    scratch_.resize(items_.size());
    std::iota(scratch_.begin(), scratch_.end(), std::size_t{0});
    std::vector<Transition> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::swap(scratch_[i], scratch_[i + rng.below(items_.size() - i)]);
      out.push_back(items_[scratch_[i]]);
    }
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<Transition> items_;
  mutable std::vector<std::size_t> scratch_;
};

// ---------------------------------------------------------------------------
// Learning

inline double td_target(const QNetwork& target_net, const Transition& t, double gamma) {
  if (t.terminal) return t.reward;
  const QValues next = target_net.forward(to_state(t.next_state));
  return t.reward + gamma * *std::max_element(next.begin(), next.end());
}

// Mean squared TD error and its gradient w.r.t. `net`'s parameters. The
// target network is held fixed.
inline double loss_and_gradient(const QNetwork& net, const QNetwork& target_net,
                                std::span<const Transition> batch, double gamma,
                                std::vector<double>& grad) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  grad.assign(QNetwork::kParameterCount, 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const auto& t : batch) {
    const auto trace = net.forward_trace(to_state(t.state));
    const auto a = static_cast<std::size_t>(t.action);
    const double err = trace.q[a] - td_target(target_net, t, gamma);
    loss += err * err * scale;
    QValues dq{};
    dq[a] = 2.0 * err * scale;
    net.backward(trace, dq, grad);
  }
  return loss;
}

// One Adam step on the TD loss; returns the loss before the update.
inline double train_step(QNetwork& net, const QNetwork& target_net,
                         std::span<const Transition> batch, double gamma,
                         AdamOptimizer& optimizer) {
  std::vector<double> grad;
  const double loss = loss_and_gradient(net, target_net, batch, gamma, grad);
  optimizer.step(net.parameters(), grad);
  return loss;
}

// ---------------------------------------------------------------------------
// Episodes

struct EpisodeResult {
  RunRecord record;
  std::size_t decisions = 0;  // observation points, including the terminal one
  std::size_t actions = 0;    // decisions that acted on the simulation
  double total_reward = 0.0;
  std::vector<Action> taken;
};

using Policy = std::function<Action(const Observation&)>;
using TransitionSink = std::function<void(const Transition&)>;

// Runs one simulation under a Super-Agent. Decision points fall on ticks
// sa_delay, 2*sa_delay, ... up to total_ticks. At every decision point that
// still has ticks left the policy picks an action, the action is applied, the
// simulation advances up to sa_delay ticks, and the resulting transition is
// scored and handed to `sink`. The last transition is terminal.
inline EpisodeResult run_episode(const SimConfig& config, const Policy& policy,
                                 const TransitionSink& sink = {}) {
  Simulation sim = Simulation::create(config);
  EpisodeResult out;
  out.record = {0.0, {}, config.theta, config.p_n, config.p_o, config.sa_delay, config.seed};
  auto& trace = out.record.gc_trace;
  trace.reserve(config.total_ticks + 1);
  trace.push_back(global_cascade(sim));

  auto advance = [&](std::size_t ticks) {
    for (std::size_t i = 0; i < ticks && !sim.finished(); ++i) {
      sim.tick();
      trace.push_back(global_cascade(sim));
    }
  };

  EpisodeFlags flags;
  const std::size_t delay = config.sa_delay;
  advance(delay);
  if (sim.current_tick() == delay) ++out.decisions;
  while (!sim.finished() && sim.current_tick() % delay == 0) {
    const Observation before = observe(sim);
    const Action action = policy(before);
    apply_action(sim, action);
    advance(delay);
    const Observation after = observe(sim);

    const double ar = action_result(after.gc, before.gc);
    const double aw = action_weight(after.gom, after.mia);
    const double r = reward(ar, aw, action, flags, after.gc);
    flags.mark(action);

    const Transition t{before, action, r, after, sim.finished()};
    if (sink) sink(t);
    out.total_reward += r;
    out.taken.push_back(action);
    ++out.actions;
    if (sim.current_tick() % delay == 0) ++out.decisions;
  }
  advance(config.total_ticks);  // only when sa_delay > total_ticks
  out.record.final_gc = trace.back();
  return out;
}

inline Policy greedy_policy(const QNetwork& net) {
  return [&net](const Observation& o) { return kAllActions[argmax(net.forward(to_state(o)))]; };
}

inline Policy constant_policy(Action a) {
  return [a](const Observation&) { return a; };
}

// ---------------------------------------------------------------------------
// Training

inline constexpr int kCheckpointFormatVersion = 1;

// Everything needed to resume or reproduce training.
struct Checkpoint {
  QNetwork net;
  QNetwork target_net;
  AdamOptimizer optimizer;
  DqnConfig dqn;
  double epsilon = 1.0;
  std::size_t episodes_done = 0;
  std::size_t train_steps = 0;
  std::uint64_t master_seed = 0;

  friend bool operator==(const Checkpoint& a, const Checkpoint& b) {
    return a.net == b.net && a.target_net == b.target_net && a.optimizer == b.optimizer &&
           a.epsilon == b.epsilon && a.episodes_done == b.episodes_done &&
           a.train_steps == b.train_steps && a.master_seed == b.master_seed &&
           a.dqn.gamma == b.dqn.gamma && a.dqn.learning_rate == b.dqn.learning_rate &&
           a.dqn.batch_size == b.dqn.batch_size && a.dqn.replay_capacity == b.dqn.replay_capacity &&
           a.dqn.target_sync == b.dqn.target_sync && a.dqn.epsilon_start == b.dqn.epsilon_start &&
           a.dqn.epsilon_end == b.dqn.epsilon_end && a.dqn.epsilon_decay == b.dqn.epsilon_decay &&
           a.dqn.episodes == b.dqn.episodes;
  }
};

struct TrainingResult {
  Checkpoint checkpoint;
  std::vector<double> episode_rewards;
  std::vector<double> losses;  // one per train step
};

// Per-episode scenario: theta, p_n, p_o and sa_delay are drawn from the
// experiment grids so one network covers the whole sweep.
inline SimConfig training_scenario(const ExperimentConfig& exp, std::uint64_t master_seed,
                                   std::size_t episode, Rng& rng) {
  SimConfig c = exp.sim;
  c.theta = exp.thetas[rng.below(exp.thetas.size())];
  c.p_n = exp.p_n_grid[rng.below(exp.p_n_grid.size())];
  c.p_o = exp.p_o_values[rng.below(exp.p_o_values.size())];
  c.sa_delay = exp.sa_delays[rng.below(exp.sa_delays.size())];
  c.seed = derive_seed(master_seed, 0x7261696EULL, episode, 0);
  return c;
}

inline TrainingResult train(const ExperimentConfig& exp, std::size_t episodes,
                            std::uint64_t master_seed) {
  if (episodes < 1) throw std::invalid_argument("train: need at least one episode");
  const DqnConfig& q = exp.dqn;
  Rng rng(derive_seed(master_seed, 0x6167656EULL, 0, 0));

  TrainingResult out;
  Checkpoint& ck = out.checkpoint;
  ck.dqn = q;
  ck.dqn.episodes = episodes;
  ck.master_seed = master_seed;
  ck.net = QNetwork::random(rng);
  ck.target_net = ck.net;
  ck.optimizer.learning_rate = q.learning_rate;
  ck.epsilon = q.epsilon_start;

  ReplayBuffer buffer(q.replay_capacity);
  auto sink = [&](const Transition& t) {
    buffer.push(t);
    if (buffer.size() < q.batch_size) return;
    const auto batch = buffer.sample(q.batch_size, rng);
    out.losses.push_back(train_step(ck.net, ck.target_net, batch, q.gamma, ck.optimizer));
    if (!ck.net.all_finite()) throw std::runtime_error("train: parameters diverged");
    if (++ck.train_steps % q.target_sync == 0) ck.target_net = ck.net;
  };

  for (std::size_t e = 0; e < episodes; ++e) {
    const SimConfig scenario = training_scenario(exp, master_seed, e, rng);
    const double eps = ck.epsilon;
    const Policy policy = [&](const Observation& o) { return select_action(ck.net, o, eps, rng); };
    out.episode_rewards.push_back(run_episode(scenario, policy, sink).total_reward);
    ++ck.episodes_done;
    ck.epsilon = std::max(q.epsilon_end, ck.epsilon * q.epsilon_decay);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint file (JSON text, full double precision)

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline nlohmann::json to_json(const Checkpoint& ck) {
  using nlohmann::json;
  auto layers = [](const QNetwork& net) {
    json arr = json::array();
    for (std::size_t l = 0; l < QNetwork::kLayers.size(); ++l) {
      const auto w = net.weights(l);
      const auto b = net.biases(l);
      arr.push_back({{"in", QNetwork::kLayers[l].in},
                     {"out", QNetwork::kLayers[l].out},
                     {"weights", std::vector<double>(w.begin(), w.end())},
                     {"biases", std::vector<double>(b.begin(), b.end())}});
    }
    return arr;
  };
  return {
      {"format_version", kCheckpointFormatVersion},
      {"layer_sizes", {kStateDim, kHidden1, kHidden2, kActionCount}},
      {"network", layers(ck.net)},
      {"target_network", layers(ck.target_net)},
      {"optimizer",
       {{"kind", "adam"},
        {"learning_rate", ck.optimizer.learning_rate},
        {"beta1", ck.optimizer.beta1},
        {"beta2", ck.optimizer.beta2},
        {"epsilon", ck.optimizer.epsilon},
        {"steps", ck.optimizer.steps},
        {"m", ck.optimizer.m},
        {"v", ck.optimizer.v}}},
      {"schedule",
       {{"gamma", ck.dqn.gamma},
        {"learning_rate", ck.dqn.learning_rate},
        {"batch_size", ck.dqn.batch_size},
        {"replay_capacity", ck.dqn.replay_capacity},
        {"target_sync", ck.dqn.target_sync},
        {"epsilon_start", ck.dqn.epsilon_start},
        {"epsilon_end", ck.dqn.epsilon_end},
        {"epsilon_decay", ck.dqn.epsilon_decay},
        {"episodes", ck.dqn.episodes},
        {"epsilon", ck.epsilon},
        {"episodes_done", ck.episodes_done},
        {"train_steps", ck.train_steps}}},
      {"master_seed", ck.master_seed},
  };
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format_version").get<int>() != kCheckpointFormatVersion)
      throw CheckpointError("unsupported checkpoint format version");
    const auto sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    if (sizes != std::vector<std::size_t>{kStateDim, kHidden1, kHidden2, kActionCount})
      throw CheckpointError("checkpoint architecture does not match 3-24-12-4");

    auto read_net = [](const nlohmann::json& arr) {
      QNetwork net;
      if (arr.size() != QNetwork::kLayers.size())
        throw CheckpointError("checkpoint architecture does not match 3-24-12-4");
      for (std::size_t l = 0; l < QNetwork::kLayers.size(); ++l) {
        const auto w = arr[l].at("weights").get<std::vector<double>>();
        const auto b = arr[l].at("biases").get<std::vector<double>>();
        if (arr[l].at("in").get<std::size_t>() != QNetwork::kLayers[l].in ||
            arr[l].at("out").get<std::size_t>() != QNetwork::kLayers[l].out ||
            w.size() != net.weights(l).size() || b.size() != net.biases(l).size())
          throw CheckpointError("checkpoint architecture does not match 3-24-12-4");
        std::copy(w.begin(), w.end(), net.weights(l).begin());
        std::copy(b.begin(), b.end(), net.biases(l).begin());
      }
      return net;
    };

    Checkpoint ck;
    ck.net = read_net(j.at("network"));
    ck.target_net = read_net(j.at("target_network"));
    const auto& o = j.at("optimizer");
    ck.optimizer.learning_rate = o.at("learning_rate").get<double>();
    ck.optimizer.beta1 = o.at("beta1").get<double>();
    ck.optimizer.beta2 = o.at("beta2").get<double>();
    ck.optimizer.epsilon = o.at("epsilon").get<double>();
    ck.optimizer.steps = o.at("steps").get<std::size_t>();
    ck.optimizer.m = o.at("m").get<std::vector<double>>();
    ck.optimizer.v = o.at("v").get<std::vector<double>>();
    if (ck.optimizer.m.size() != QNetwork::kParameterCount ||
        ck.optimizer.v.size() != QNetwork::kParameterCount)
      throw CheckpointError("optimizer state size mismatch");
    const auto& s = j.at("schedule");
    ck.dqn.gamma = s.at("gamma").get<double>();
    ck.dqn.learning_rate = s.at("learning_rate").get<double>();
    ck.dqn.batch_size = s.at("batch_size").get<std::size_t>();
    ck.dqn.replay_capacity = s.at("replay_capacity").get<std::size_t>();
    ck.dqn.target_sync = s.at("target_sync").get<std::size_t>();
    ck.dqn.epsilon_start = s.at("epsilon_start").get<double>();
    ck.dqn.epsilon_end = s.at("epsilon_end").get<double>();
    ck.dqn.epsilon_decay = s.at("epsilon_decay").get<double>();
    ck.dqn.episodes = s.at("episodes").get<std::size_t>();
    ck.epsilon = s.at("epsilon").get<double>();
    ck.episodes_done = s.at("episodes_done").get<std::size_t>();
    ck.train_steps = s.at("train_steps").get<std::size_t>();
    ck.master_seed = j.at("master_seed").get<std::uint64_t>();
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path);
  out << to_json(ck).dump(2) << '\n';
  if (!out) throw CheckpointError("failed writing checkpoint: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path + ": " + e.what());
  }
  try {
    return checkpoint_from_json(j);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path + ": " + e.what());
  }
}

}  // namespace ecsim
