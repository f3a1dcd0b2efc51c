#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ecsim/simulation.hpp"

namespace ecsim {

// What the Super-Agent sees at a decision point.
struct Observation {
  double gc = 0.0;   // global cascade
  double gom = 0.0;  // global opinion metric
  double mia = 0.0;  // A-active share among the most central nodes
};

// Final outcome of one run plus the parameters that produced it.
struct RunRecord {
  double final_gc = 0.0;
  std::vector<double> gc_trace;  // one entry per tick, including tick 0
  double theta = 0.0;
  double p_n = 0.0;
  double p_o = 0.0;
  std::size_t sa_delay = 0;  // 0: no Super-Agent
  std::uint64_t seed = 0;
};

// Fraction of A-active agents.
inline double global_cascade(const Simulation& sim) {
  std::size_t active = 0;
  for (const auto& a : sim.agents()) active += a.is_a_active;
  return static_cast<double>(active) / static_cast<double>(sim.node_count());
}

// Mean opinion metric over all agents.
inline double global_opinion_metric(const Simulation& sim) {
  double sum = 0.0;
  for (const auto& a : sim.agents()) sum += a.om;
  return sum / static_cast<double>(sim.node_count());
}

// Share of A-active agents among the round(fraction * N) top-ranked nodes
// under `method`. Zero when the selection is empty.
inline double most_influent_a(const Simulation& sim, CentralityMethod method, double fraction) {
  if (!(fraction > 0 && fraction <= 1))
    throw std::invalid_argument("most_influent_a: fraction must be in (0, 1]");
  const auto& order = sim.ranking(method);
  const std::size_t count =
      std::min(order.size(), round_count(fraction * static_cast<double>(sim.node_count())));
  if (count == 0) return 0.0;
  std::size_t active = 0;
  for (std::size_t r = 0; r < count; ++r) active += sim.agent(order[r]).is_a_active;
  return static_cast<double>(active) / static_cast<double>(count);
}

inline Observation observe(const Simulation& sim) {
  return {global_cascade(sim), global_opinion_metric(sim),
          most_influent_a(sim, sim.config().mia_method, sim.config().node_range)};
}

// Fraction of runs whose final GC is strictly above 0.5.
inline double virality(std::span<const double> final_gcs) {
  if (final_gcs.empty()) throw std::invalid_argument("virality: no runs");
  std::size_t viral = 0;
  for (double gc : final_gcs) viral += gc > 0.5;
  return static_cast<double>(viral) / static_cast<double>(final_gcs.size());
}

inline double virality(std::span<const RunRecord> records) {
  if (records.empty()) throw std::invalid_argument("virality: no runs");
  std::vector<double> gcs;
  gcs.reserve(records.size());
  for (const auto& r : records) gcs.push_back(r.final_gc);
  return virality(std::span<const double>(gcs));
}

// Runs a simulation with no Super-Agent to the end.
inline RunRecord run_baseline(const SimConfig& config) {
  Simulation sim = Simulation::create(config);
  RunRecord rec{0.0, {}, config.theta, config.p_n, config.p_o, 0, config.seed};
  rec.gc_trace.reserve(config.total_ticks + 1);
  rec.gc_trace.push_back(global_cascade(sim));
  while (!sim.finished()) {
    sim.tick();
    rec.gc_trace.push_back(global_cascade(sim));
  }
  rec.final_gc = rec.gc_trace.back();
  return rec;
}

}  // namespace ecsim
