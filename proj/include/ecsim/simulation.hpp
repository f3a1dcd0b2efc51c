#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ecsim/config.hpp"
#include "ecsim/graph.hpp"
#include "ecsim/random.hpp"

namespace ecsim {

enum class Opinion { A, B, C };

inline constexpr double kOpinionBMax = 0.33;
inline constexpr double kOpinionAMin = 0.66;

// B on [0, 0.33], C on (0.33, 0.66), A on [0.66, 1].
inline Opinion classify_opinion(double om) {
  if (!(om >= 0.0 && om <= 1.0))
    throw std::domain_error("opinion metric outside [0, 1]");
  if (om <= kOpinionBMax) return Opinion::B;
  if (om < kOpinionAMin) return Opinion::C;
  return Opinion::A;
}

enum class Direction { toward_a, toward_b };

struct AgentState {
  double om = 0.5;
  double theta = 0.0;
  bool is_in_cluster = false;
  bool is_a_active = false;
  bool is_b_active = false;
  bool warning = false;
  std::size_t reiterate_remaining = 0;
  bool is_opinion_b_static = false;
};

struct ChamberStats {
  std::size_t candidates = 0;  // E' edges examined
  std::size_t rewired = 0;
  std::size_t skipped = 0;  // boundary edges with no free chamber endpoint
};

inline Graph generate_network(const SimConfig& c, Rng& rng) {
  switch (c.network) {
    case NetworkKind::erdos_renyi:
      return gen_erdos_renyi(c.nb_nodes, static_cast<double>(c.k_value), rng);
    case NetworkKind::small_world:
      return gen_small_world(c.nb_nodes, c.k_value, c.rewire_probability, rng);
    case NetworkKind::preferential_attachment:
      return gen_preferential_attachment(c.nb_nodes, std::max<std::size_t>(1, c.k_value / 2), rng);
  }
  throw std::invalid_argument("unknown network kind");
}

// Full state of one run. Single owner; every mutation goes through the
// members below and consumes the simulation's own random stream.
class Simulation {
 public:
  Simulation(SimConfig config, Graph graph, Rng rng)
      : config_(std::move(config)),
        graph_(std::move(graph)),
        agents_(graph_.node_count()),
        rng_(std::move(rng)) {
    for (auto& a : agents_) {
      a.om = config_.initial_opinion_metric;
      a.theta = config_.theta;
    }
    refresh_all_flags();
  }

  // Graph, echo chamber, seeds and thresholds, all drawn from `config.seed`.
  static Simulation create(const SimConfig& config) {
    validate(config);
    Rng rng(config.seed);
    Graph g = generate_network(config, rng);
    Simulation sim(config, std::move(g), std::move(rng));
    sim.build_echo_chamber();
    sim.seed_opinions();
    sim.assign_thresholds();
    return sim;
  }

  const SimConfig& config() const noexcept { return config_; }
  const Graph& graph() const noexcept { return graph_; }
  const std::vector<AgentState>& agents() const noexcept { return agents_; }
  const AgentState& agent(NodeId i) const { return agents_.at(i); }
  std::size_t node_count() const noexcept { return agents_.size(); }
  std::size_t current_tick() const noexcept { return tick_; }
  bool finished() const noexcept { return tick_ >= config_.total_ticks; }
  const ChamberStats& chamber_stats() const noexcept { return chamber_stats_; }
  Rng& rng() noexcept { return rng_; }

  // Test hook: overwrite an agent's opinion metric; flags follow the band.
  void set_opinion(NodeId i, double om) {
    auto& a = agents_.at(i);
    a.om = om;
    refresh_flags(a);
  }

  // ---- construction -------------------------------------------------------

  // Flags round(N * ECF) random nodes as the chamber, then examines
  // E' = round(E * P_N) random edges: each one with exactly one chamber
  // endpoint T is replaced by an edge from T to a chamber node not yet
  // adjacent to T. The edge count is unchanged.
  void build_echo_chamber() {
    const double ecf = config_.echo_chamber_fraction;
    if (!(ecf >= 0 && ecf <= 1))
      throw std::invalid_argument("echo-chamber-fraction outside [0, 1]");
    const std::size_t n = node_count();
    const std::size_t c = std::min(n, round_count(static_cast<double>(n) * ecf));

    std::vector<NodeId> perm(n);
    std::iota(perm.begin(), perm.end(), NodeId{0});
    for (std::size_t i = 0; i < c; ++i)
      std::swap(perm[i], perm[i + rng_.below(n - i)]);
    for (auto& a : agents_) a.is_in_cluster = false;
    chamber_.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(c));
    std::sort(chamber_.begin(), chamber_.end());
    for (NodeId id : chamber_) agents_[id].is_in_cluster = true;

    const std::size_t e = graph_.edge_count();
    const std::size_t pool = std::min(e, round_count(static_cast<double>(e) * config_.p_n));
    std::vector<std::size_t> edge_ids(e);
    std::iota(edge_ids.begin(), edge_ids.end(), std::size_t{0});
    for (std::size_t i = 0; i < pool; ++i)
      std::swap(edge_ids[i], edge_ids[i + rng_.below(e - i)]);

    chamber_stats_ = {};
    chamber_stats_.candidates = pool;
    std::vector<NodeId> free;
    for (std::size_t s = 0; s < pool; ++s) {
      const std::size_t index = edge_ids[s];
      const Edge edge = graph_.edges()[index];
      const bool in_u = agents_[edge.u].is_in_cluster;
      const bool in_v = agents_[edge.v].is_in_cluster;
      if (in_u == in_v) continue;
      const NodeId t = in_u ? edge.u : edge.v;
      free.clear();
      for (NodeId w : chamber_)
        if (w != t && !graph_.has_edge(t, w)) free.push_back(w);
      if (free.empty()) {
        ++chamber_stats_.skipped;
        continue;
      }
      graph_.replace_edge(index, t, free[rng_.below(free.size())]);
      ++chamber_stats_.rewired;
    }
    ranking_cache_ = {};
  }

  // A seed: a random chamber node plus its neighbours, om uniform in the A
  // band. B seed: mirrored from a random outside node. On overlap the chamber
  // side of the boundary keeps A, the outside keeps B.
  void seed_opinions() {
    std::vector<NodeId> outside;
    for (NodeId i = 0; i < node_count(); ++i)
      if (!agents_[i].is_in_cluster) outside.push_back(i);
    if (chamber_.empty()) throw std::invalid_argument("seed_opinions: echo chamber is empty");
    if (outside.empty())
      throw std::invalid_argument("seed_opinions: no nodes outside the echo chamber to seed B");

    const NodeId init_a = chamber_[rng_.below(chamber_.size())];
    const NodeId init_b = outside[rng_.below(outside.size())];
    seed_nodes_ = {init_a, init_b};
    std::vector<Opinion> seeded(node_count(), Opinion::C);
    auto mark = [&](NodeId i, Opinion op) {
      if (seeded[i] == Opinion::C) {
        seeded[i] = op;
        return;
      }
      if (seeded[i] != op) seeded[i] = agents_[i].is_in_cluster ? Opinion::A : Opinion::B;
    };
    mark(init_a, Opinion::A);
    for (NodeId w : graph_.neighbors(init_a)) mark(w, Opinion::A);
    mark(init_b, Opinion::B);
    for (NodeId w : graph_.neighbors(init_b)) mark(w, Opinion::B);

    for (NodeId i = 0; i < node_count(); ++i) {
      auto& a = agents_[i];
      switch (seeded[i]) {
        case Opinion::A: a.om = rng_.uniform(kOpinionAMin, 1.0); break;
        case Opinion::B: a.om = rng_.uniform(0.0, kOpinionBMax); break;
        case Opinion::C: a.om = config_.initial_opinion_metric; break;
      }
      refresh_flags(a);
    }
  }

  void assign_thresholds() {
    const double inside = config_.theta - config_.p_o;
    if (inside < 0.0) throw std::invalid_argument("activation-threshold - p_o is negative");
    for (auto& a : agents_) a.theta = a.is_in_cluster ? inside : config_.theta;
  }

  // ---- dynamics -----------------------------------------------------------

  // One exposure of agent `id` to an opinion. Locked agents ignore it; warned
  // agents let it through only when a uniform draw is <= warning-impact.
  void influence_attempt(NodeId id, Direction dir) {
    auto& a = agents_.at(id);
    if (a.is_opinion_b_static) return;
    if (a.warning) {
      const double gate = config_.warning_impact;
      // The draw is skipped at the degenerate gates 0 and 1 so that the outcome
      // (and the stream) match an unwarned agent when the gate always passes.
      if (gate <= 0.0) return;
      if (gate < 1.0 && !(rng_.uniform() <= gate)) return;
    }
    const double step = config_.opinion_metric_step;
    a.om = std::clamp(dir == Direction::toward_a ? a.om + step : a.om - step, 0.0, 1.0);
    refresh_flags(a);
  }

  // Synchronous update over the pre-tick activity flags, followed by pending
  // reiterated B exposures.
  void tick() {
    if (finished()) throw std::logic_error("tick: simulation already finished");
    const std::size_t n = node_count();
    snapshot_a_.resize(n);
    snapshot_b_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      snapshot_a_[i] = agents_[i].is_a_active;
      snapshot_b_[i] = agents_[i].is_b_active;
    }

    for (NodeId i = 0; i < n; ++i) {
      const auto& nbrs = graph_.neighbors(i);
      if (nbrs.empty()) continue;
      std::size_t count_a = 0, count_b = 0;
      for (NodeId w : nbrs) {
        count_a += snapshot_a_[w];
        count_b += snapshot_b_[w];
      }
      const double deg = static_cast<double>(nbrs.size());
      const double frac_a = static_cast<double>(count_a) / deg;
      const double frac_b = static_cast<double>(count_b) / deg;
      const double theta = agents_[i].theta;
      const bool over_a = frac_a > theta, over_b = frac_b > theta;
      if (over_a && (!over_b || frac_a > frac_b))
        influence_attempt(i, Direction::toward_a);
      else if (over_b)
        influence_attempt(i, Direction::toward_b);
    }

    for (NodeId i = 0; i < n; ++i) {
      auto& a = agents_[i];
      if (a.reiterate_remaining == 0) continue;
      if (rng_.uniform() < a.theta) influence_attempt(i, Direction::toward_b);
      --a.reiterate_remaining;
      if (classify_opinion(a.om) == Opinion::B) a.reiterate_remaining = 0;
    }
    ++tick_;
  }

  void run_to_end() {
    while (!finished()) tick();
  }

  // ---- interventions ------------------------------------------------------

  void apply_warning_all() {
    for (auto& a : agents_) a.warning = true;
  }

  void apply_warning(std::span<const NodeId> targets) {
    for (NodeId t : targets) agents_.at(t).warning = true;
  }

  // Each target receives one B exposure per tick for as many ticks as it has
  // neighbours, stopping early once it reaches band B.
  void apply_reiterate(std::span<const NodeId> targets) {
    for (NodeId t : targets) agents_.at(t).reiterate_remaining = graph_.degree(t);
  }

  // Locks the round(fraction * N) most central nodes into opinion B.
  void apply_forcing(CentralityMethod method, double fraction) {
    if (!(fraction >= 0 && fraction <= 1))
      throw std::invalid_argument("apply_forcing: fraction outside [0, 1]");
    const auto& order = ranking(method);
    const std::size_t count = std::min(order.size(), round_count(fraction * static_cast<double>(node_count())));
    for (std::size_t r = 0; r < count; ++r) {
      auto& a = agents_[order[r]];
      a.om = 0.0;
      a.is_opinion_b_static = true;
      refresh_flags(a);
    }
  }

  // The `count` currently A-active nodes ranked highest under `method`.
  std::vector<NodeId> top_a_active(CentralityMethod method, std::size_t count) const {
    std::vector<NodeId> out;
    for (NodeId id : ranking(method)) {
      if (out.size() >= count) break;
      if (agents_[id].is_a_active) out.push_back(id);
    }
    return out;
  }

  // Node ids by descending centrality, ties by ascending id. Cached: the
  // topology is fixed once the echo chamber has been built.
  const std::vector<NodeId>& ranking(CentralityMethod method) const {
    auto& slot = ranking_cache_[static_cast<std::size_t>(method)];
    if (!slot) slot = rank_nodes(centrality(graph_, method).scores);
    return *slot;
  }

  const std::vector<NodeId>& chamber() const noexcept { return chamber_; }

  // (A seed, B seed) chosen by seed_opinions.
  std::pair<NodeId, NodeId> seed_nodes() const noexcept { return seed_nodes_; }

  // Flag/band consistency and locking invariants for every agent.
  bool invariants_hold() const {
    for (const auto& a : agents_) {
      if (!(a.om >= 0 && a.om <= 1)) return false;
      const Opinion op = classify_opinion(a.om);
      if ((op == Opinion::A) != a.is_a_active) return false;
      if ((op == Opinion::B) != a.is_b_active) return false;
      if (a.is_opinion_b_static && !(a.om == 0.0 && a.is_b_active)) return false;
    }
    return true;
  }

 private:
  static void refresh_flags(AgentState& a) {
    const Opinion op = classify_opinion(a.om);
    a.is_a_active = op == Opinion::A;
    a.is_b_active = op == Opinion::B;
  }

  void refresh_all_flags() {
    for (auto& a : agents_) refresh_flags(a);
  }

  SimConfig config_;
  Graph graph_;
  std::vector<AgentState> agents_;
  Rng rng_;
  std::size_t tick_ = 0;
  std::vector<NodeId> chamber_;
  ChamberStats chamber_stats_;
  std::pair<NodeId, NodeId> seed_nodes_{0, 0};
  std::vector<char> snapshot_a_, snapshot_b_;
  mutable std::array<std::optional<std::vector<NodeId>>, 3> ranking_cache_;
};

}  // namespace ecsim
