#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ecsim/graph.hpp"

namespace ecsim {

enum class NetworkKind { erdos_renyi, small_world, preferential_attachment };

inline std::string_view to_string(NetworkKind k) {
  switch (k) {
    case NetworkKind::erdos_renyi: return "erdos-renyi";
    case NetworkKind::small_world: return "small-world";
    case NetworkKind::preferential_attachment: return "preferential-attachment";
  }
  return "?";
}

// Parameters of a single simulation run. Defaults are the desk-scale
// experiment defaults (100 nodes, 100 ticks, k = 8, echo chamber of 20%).
struct SimConfig {
  std::size_t nb_nodes = 100;
  std::size_t total_ticks = 100;
  NetworkKind network = NetworkKind::erdos_renyi;
  std::size_t k_value = 8;
  double rewire_probability = 0.1;  // small-world only
  double p_o = 0.0;
  double p_n = 0.0;
  double initial_opinion_metric = 0.5;
  double opinion_metric_step = 0.10;
  double theta = 0.270;
  double echo_chamber_fraction = 0.20;
  double node_range = 0.10;
  double node_range_static_b = 0.05;
  bool global_warning = true;
  CentralityMethod choose_method = CentralityMethod::degree;
  CentralityMethod mia_method = CentralityMethod::betweenness;
  double warning_impact = 0.10;
  std::size_t sa_delay = 5;
  std::uint64_t seed = 0;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void validate(const SimConfig& c) {
  auto fraction = [](double x, const char* name) {
    if (!(x >= 0.0 && x <= 1.0))
      throw ConfigError(std::string(name) + " must be in [0, 1]");
  };
  if (c.nb_nodes < 2) throw ConfigError("nb-nodes must be at least 2");
  if (c.total_ticks < 1) throw ConfigError("total-ticks must be positive");
  if (c.sa_delay < 1) throw ConfigError("sa-delay must be positive");
  fraction(c.p_o, "p_o");
  fraction(c.p_n, "p_n");
  fraction(c.theta, "activation-threshold");
  fraction(c.echo_chamber_fraction, "echo-chamber-fraction");
  fraction(c.node_range, "node-range");
  fraction(c.node_range_static_b, "node-range-static-b");
  fraction(c.warning_impact, "warning-impact");
  fraction(c.initial_opinion_metric, "initial-opinion-metric-value");
  fraction(c.opinion_metric_step, "opinion-metric-step");
  fraction(c.rewire_probability, "rewire-probability");
  if (c.theta - c.p_o < 0.0)
    throw ConfigError("activation-threshold - p_o must be non-negative");
}

// Deep Q-learning hyperparameters. None of these are fixed by the model; the
// defaults are conventional DQN settings.
struct DqnConfig {
  double gamma = 0.95;
  double learning_rate = 1e-3;
  std::size_t batch_size = 128;
  std::size_t replay_capacity = 10000;
  std::size_t target_sync = 100;  // training steps between hard syncs
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay = 0.995;  // per episode, multiplicative
  std::size_t episodes = 500;
};

// Everything a configuration file can describe: one base run plus the grids
// swept by the harness.
struct ExperimentConfig {
  SimConfig sim;
  DqnConfig dqn;
  std::vector<double> thetas{0.270, 0.342, 0.414};
  std::vector<double> p_n_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> p_o_values{0.0};
  std::vector<std::size_t> sa_delays{5, 4, 2};
  std::size_t replicates = 300;
};

namespace detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(',', start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double to_double(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad number for " + key + ": '" + s + "'");
  }
}

inline std::uint64_t to_uint(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    if (!s.empty() && s[0] == '-') throw std::invalid_argument(s);
    unsigned long long v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad integer for " + key + ": '" + s + "'");
  }
}

inline bool to_bool(std::string s, const std::string& key) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("bad boolean for " + key + ": '" + s + "'");
}

// "a:b:step" expands to an inclusive grid; anything else is a comma list.
inline std::vector<double> to_double_list(const std::string& s, const std::string& key) {
  if (s.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(trim(part));
    if (parts.size() != 3) throw ConfigError("range for " + key + " must be lo:hi:step");
    const double lo = to_double(parts[0], key), hi = to_double(parts[1], key),
                 step = to_double(parts[2], key);
    if (!(step > 0) || hi < lo) throw ConfigError("bad range for " + key);
    std::vector<double> out;
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t i = 0; i <= count; ++i) {
      // Snap to 1e-9 so 0.1 * 3 prints and compares as 0.3.
      out.push_back(std::round((lo + step * static_cast<double>(i)) * 1e9) / 1e9);
    }
    return out;
  }
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(to_double(item, key));
  return out;
}

}  // namespace detail

// Parses the `key = value` configuration format. Keys are the simulation
// attribute names (nb-nodes, total-ticks, network, k-value, p_o, p_n, ...);
// `#` starts a comment. List-valued keys (p_n, p_o, activation-threshold,
// sa-delay) accept comma lists or lo:hi:step ranges, and the first entry
// becomes the base run's value.
inline ExperimentConfig parse_config(std::istream& in) {
  using namespace detail;
  ExperimentConfig cfg;
  SimConfig& s = cfg.sim;
  DqnConfig& q = cfg.dqn;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (value.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": empty value for " + key);

    if (key == "nb-nodes") s.nb_nodes = to_uint(value, key);
    else if (key == "total-ticks") s.total_ticks = to_uint(value, key);
    else if (key == "network") {
      std::string v = value;
      std::transform(v.begin(), v.end(), v.begin(),
                     [](unsigned char ch) { return std::tolower(ch); });
      std::replace(v.begin(), v.end(), '_', '-');
      if (v == "erdos-renyi" || v == "erdős-rényi") s.network = NetworkKind::erdos_renyi;
      else if (v == "small-world") s.network = NetworkKind::small_world;
      else if (v == "preferential-attachment") s.network = NetworkKind::preferential_attachment;
      else throw ConfigError("unknown network: " + value);
    }
    else if (key == "k-value") s.k_value = to_uint(value, key);
    else if (key == "rewire-probability") s.rewire_probability = to_double(value, key);
    else if (key == "p_o") cfg.p_o_values = to_double_list(value, key);
    else if (key == "p_n") cfg.p_n_grid = to_double_list(value, key);
    else if (key == "activation-threshold") cfg.thetas = to_double_list(value, key);
    else if (key == "initial-opinion-metric-value") s.initial_opinion_metric = to_double(value, key);
    else if (key == "opinion-metric-step") s.opinion_metric_step = to_double(value, key);
    else if (key == "echo-chamber-fraction") s.echo_chamber_fraction = to_double(value, key);
    else if (key == "node-range") s.node_range = to_double(value, key);
    else if (key == "node-range-static-b") s.node_range_static_b = to_double(value, key);
    else if (key == "global-warning") s.global_warning = to_bool(value, key);
    else if (key == "choose-method") {
      try { s.choose_method = parse_centrality_method(value); }
      catch (const std::invalid_argument& e) { throw ConfigError(e.what()); }
    }
    else if (key == "mia-method") {
      try { s.mia_method = parse_centrality_method(value); }
      catch (const std::invalid_argument& e) { throw ConfigError(e.what()); }
    }
    else if (key == "warning-impact") s.warning_impact = to_double(value, key);
    else if (key == "sa-delay") {
      cfg.sa_delays.clear();
      for (const auto& item : split_list(value)) cfg.sa_delays.push_back(to_uint(item, key));
    }
    else if (key == "seed") s.seed = to_uint(value, key);
    else if (key == "replicates") cfg.replicates = to_uint(value, key);
    else if (key == "gamma") q.gamma = to_double(value, key);
    else if (key == "learning-rate") q.learning_rate = to_double(value, key);
    else if (key == "batch-size") q.batch_size = to_uint(value, key);
    else if (key == "replay-capacity") q.replay_capacity = to_uint(value, key);
    else if (key == "target-sync") q.target_sync = to_uint(value, key);
    else if (key == "epsilon-start") q.epsilon_start = to_double(value, key);
    else if (key == "epsilon-end") q.epsilon_end = to_double(value, key);
    else if (key == "epsilon-decay") q.epsilon_decay = to_double(value, key);
    else if (key == "episodes") q.episodes = to_uint(value, key);
    else throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }

  if (cfg.thetas.empty() || cfg.p_n_grid.empty() || cfg.p_o_values.empty() ||
      cfg.sa_delays.empty())
    throw ConfigError("grids must be non-empty");
  if (cfg.replicates < 1) throw ConfigError("replicates must be at least 1");
  s.theta = cfg.thetas.front();
  s.p_n = cfg.p_n_grid.front();
  s.p_o = cfg.p_o_values.front();
  s.sa_delay = cfg.sa_delays.front();
  for (double th : cfg.thetas)
    for (double po : cfg.p_o_values) {
      SimConfig probe = s;
      probe.theta = th;
      probe.p_o = po;
      for (double pn : cfg.p_n_grid) {
        probe.p_n = pn;
        validate(probe);
      }
    }
  for (std::size_t d : cfg.sa_delays) {
    SimConfig probe = s;
    probe.sa_delay = d;
    validate(probe);
  }
  if (!(q.gamma >= 0 && q.gamma < 1)) throw ConfigError("gamma must be in [0, 1)");
  if (q.batch_size < 1 || q.replay_capacity < q.batch_size)
    throw ConfigError("replay-capacity must be >= batch-size >= 1");
  if (q.target_sync < 1) throw ConfigError("target-sync must be positive");
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return parse_config(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace ecsim
