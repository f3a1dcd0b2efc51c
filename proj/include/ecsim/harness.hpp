#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "ecsim/config.hpp"
#include "ecsim/metrics.hpp"
#include "ecsim/superagent.hpp"

namespace ecsim {

struct SweepSpec {
  SimConfig base;
  std::vector<double> thetas;
  std::vector<double> p_n_grid;
  double p_o = 0.0;
  std::optional<std::size_t> sa_delay;  // empty: no Super-Agent
  std::size_t replicates = 300;
  std::uint64_t master_seed = 0;
  std::optional<std::string> checkpoint_path;
};

struct SweepRow {
  double theta = 0.0;
  double p_n = 0.0;
  double p_o = 0.0;
  std::optional<std::size_t> sa_delay;
  std::size_t replicates = 0;
  double virality = 0.0;
  double mean_final_gc = 0.0;
  double std_final_gc = 0.0;
  std::vector<double> final_gcs;  // per replicate, in replicate order
  std::vector<std::uint64_t> seeds;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

class HarnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runs fn(0) .. fn(count - 1) on `jobs` threads. Work is handed out by index,
// so callers that write results by index get an order-independent join.
template <class Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn&& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> workers;
    workers.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next = count;
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

// Mean and sample standard deviation (n - 1; zero for a single run).
inline std::pair<double, double> mean_and_std(std::span<const double> xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

namespace detail {

inline SimConfig grid_config(const SweepSpec& spec, std::size_t ti, std::size_t pi,
                             std::size_t rep) {
  SimConfig c = spec.base;
  c.theta = spec.thetas[ti];
  c.p_n = spec.p_n_grid[pi];
  c.p_o = spec.p_o;
  if (spec.sa_delay) c.sa_delay = *spec.sa_delay;
  c.seed = derive_seed(spec.master_seed, ti, pi, rep);
  return c;
}

inline void check_spec(const SweepSpec& spec) {
  if (spec.replicates < 1) throw ConfigError("replicates must be at least 1");
  if (spec.thetas.empty() || spec.p_n_grid.empty()) throw ConfigError("sweep grids must be non-empty");
  for (std::size_t ti = 0; ti < spec.thetas.size(); ++ti)
    for (std::size_t pi = 0; pi < spec.p_n_grid.size(); ++pi) {
      const SimConfig c = grid_config(spec, ti, pi, 0);
      validate(c);
      // Construction needs both an echo chamber and an outside.
      const std::size_t chamber = round_count(static_cast<double>(c.nb_nodes) * c.echo_chamber_fraction);
      if (chamber == 0 || chamber >= c.nb_nodes)
        throw ConfigError("echo-chamber-fraction leaves no room to seed both opinions");
    }
}

// Runs every (theta, p_n, replicate) through `run_one` and aggregates.
template <class RunOne>
SweepResult sweep(const SweepSpec& spec, std::size_t jobs, RunOne&& run_one) {
  check_spec(spec);
  const std::size_t nt = spec.thetas.size(), np = spec.p_n_grid.size(), t = spec.replicates;
  std::vector<double> final_gc(nt * np * t);
  parallel_for(final_gc.size(), jobs, [&](std::size_t job) {
    const std::size_t rep = job % t, pi = (job / t) % np, ti = job / (t * np);
    final_gc[job] = run_one(grid_config(spec, ti, pi, rep));
  });

  SweepResult out;
  for (std::size_t ti = 0; ti < nt; ++ti)
    for (std::size_t pi = 0; pi < np; ++pi) {
      SweepRow row;
      row.theta = spec.thetas[ti];
      row.p_n = spec.p_n_grid[pi];
      row.p_o = spec.p_o;
      row.sa_delay = spec.sa_delay;
      row.replicates = t;
      const auto begin = final_gc.begin() + static_cast<std::ptrdiff_t>((ti * np + pi) * t);
      row.final_gcs.assign(begin, begin + static_cast<std::ptrdiff_t>(t));
      for (std::size_t rep = 0; rep < t; ++rep)
        row.seeds.push_back(derive_seed(spec.master_seed, ti, pi, rep));
      row.virality = virality(std::span<const double>(row.final_gcs));
      std::tie(row.mean_final_gc, row.std_final_gc) = mean_and_std(row.final_gcs);
      out.rows.push_back(std::move(row));
    }
  return out;
}

}  // namespace detail

inline SweepResult run_baseline_sweep(const SweepSpec& spec, std::size_t jobs = 1) {
  if (spec.sa_delay || spec.checkpoint_path)
    throw ConfigError("baseline sweep must not set sa-delay or a checkpoint");
  return detail::sweep(spec, jobs, [](const SimConfig& c) { return run_baseline(c).final_gc; });
}

// Frozen greedy policy acting every sa_delay ticks.
inline SweepResult run_sa_sweep(const SweepSpec& spec, const QNetwork& net, std::size_t jobs = 1) {
  if (!spec.sa_delay) throw ConfigError("Super-Agent sweep needs an sa-delay");
  return detail::sweep(spec, jobs, [&net](const SimConfig& c) {
    return run_episode(c, greedy_policy(net)).record.final_gc;
  });
}

inline SweepResult run_sa_sweep(const SweepSpec& spec, std::size_t jobs = 1) {
  if (!spec.checkpoint_path) throw ConfigError("Super-Agent sweep needs a checkpoint");
  const Checkpoint ck = load_checkpoint(*spec.checkpoint_path);
  return run_sa_sweep(spec, ck.net, jobs);
}

// Concatenates results and orders rows by (theta, p_n, p_o, sa_delay), with
// baseline rows before Super-Agent rows.
inline SweepResult merge(std::vector<SweepResult> parts) {
  SweepResult out;
  for (auto& p : parts)
    for (auto& r : p.rows) out.rows.push_back(std::move(r));
  std::stable_sort(out.rows.begin(), out.rows.end(), [](const SweepRow& a, const SweepRow& b) {
    auto key = [](const SweepRow& r) {
      return std::make_tuple(r.theta, r.p_n, r.p_o, r.sa_delay.has_value(), r.sa_delay.value_or(0));
    };
    return key(a) < key(b);
  });
  return out;
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* kCsvHeader =
    "theta,p_n,p_o,sa_delay,replicates,virality,mean_final_gc,std_final_gc";

inline std::string fixed6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

inline std::string to_csv(const SweepResult& result) {
  std::vector<const SweepRow*> rows;
  for (const auto& r : result.rows) rows.push_back(&r);
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow* a, const SweepRow* b) {
    return std::tie(a->theta, a->p_n) < std::tie(b->theta, b->p_n);
  });
  std::string out = kCsvHeader;
  out += '\n';
  for (const SweepRow* r : rows) {
    out += fixed6(r->theta) + ',' + fixed6(r->p_n) + ',' + fixed6(r->p_o) + ',';
    if (r->sa_delay) out += std::to_string(*r->sa_delay);
    out += ',' + std::to_string(r->replicates) + ',' + fixed6(r->virality) + ',' +
           fixed6(r->mean_final_gc) + ',' + fixed6(r->std_final_gc) + '\n';
  }
  return out;
}

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw HarnessError("cannot open for writing: " + path);
  out << contents;
  out.flush();
  if (!out) throw HarnessError("write failed: " + path);
}

inline void emit_csv(const SweepResult& result, const std::string& path) {
  write_file(path, to_csv(result));
}

// Per-replicate final GC values; the virality column can be recomputed from
// these exactly.
inline std::string to_runs_csv(const SweepResult& result) {
  std::string out = "theta,p_n,p_o,sa_delay,replicate,seed,final_gc\n";
  char buf[64];
  for (const auto& r : result.rows)
    for (std::size_t i = 0; i < r.final_gcs.size(); ++i) {
      out += fixed6(r.theta) + ',' + fixed6(r.p_n) + ',' + fixed6(r.p_o) + ',';
      if (r.sa_delay) out += std::to_string(*r.sa_delay);
      std::snprintf(buf, sizeof buf, ",%zu,%llu,%.17g\n", i,
                    static_cast<unsigned long long>(r.seeds.at(i)), r.final_gcs[i]);
      out += buf;
    }
  return out;
}

struct CsvRow {
  double theta = 0.0;
  double p_n = 0.0;
  double p_o = 0.0;
  std::optional<std::size_t> sa_delay;
  std::size_t replicates = 0;
  double virality = 0.0;
  double mean_final_gc = 0.0;
  double std_final_gc = 0.0;
};

// Parses a sweep CSV. Errors name the source and the offending line.
inline std::vector<CsvRow> parse_csv(std::istream& in, const std::string& source) {
  std::vector<CsvRow> rows;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& why) {
    throw HarnessError(source + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != kCsvHeader) fail("unexpected header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (cells.size() != 8) fail("expected 8 fields, got " + std::to_string(cells.size()));
    auto number = [&](const std::string& s) {
      try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
      } catch (const std::exception&) {
        fail("bad number '" + s + "'");
      }
      return 0.0;
    };
    CsvRow r;
    r.theta = number(cells[0]);
    r.p_n = number(cells[1]);
    r.p_o = number(cells[2]);
    if (!cells[3].empty()) r.sa_delay = static_cast<std::size_t>(number(cells[3]));
    r.replicates = static_cast<std::size_t>(number(cells[4]));
    r.virality = number(cells[5]);
    r.mean_final_gc = number(cells[6]);
    r.std_final_gc = number(cells[7]);
    if (!(r.virality >= 0 && r.virality <= 1)) fail("virality outside [0, 1]");
    rows.push_back(r);
  }
  if (line_no == 0) throw HarnessError(source + ": empty CSV");
  if (rows.empty()) throw HarnessError(source + ": no data rows");
  return rows;
}

inline std::vector<CsvRow> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw HarnessError("cannot read CSV: " + path);
  return parse_csv(in, path);
}

// ---------------------------------------------------------------------------
// SVG

// One polyline per (theta, p_o, sa_delay) series: x = p_n, y = virality, with
// the 0.5 critical level drawn as a dashed reference line.
inline std::string render_virality_svg(const std::vector<CsvRow>& rows) {
  if (rows.empty()) throw HarnessError("plot: no data");
  using Key = std::tuple<double, double, bool, std::size_t>;
  std::map<Key, std::vector<std::pair<double, double>>> series;
  for (const auto& r : rows)
    series[{r.theta, r.p_o, r.sa_delay.has_value(), r.sa_delay.value_or(0)}].emplace_back(r.p_n, r.virality);

  std::set<double> grid;
  for (const auto& [key, pts] : series) {
    std::set<double> xs;
    for (const auto& p : pts) xs.insert(p.first);
    if (grid.empty()) grid = xs;
    else if (xs != grid) throw HarnessError("plot: series do not share the same p_n grid");
  }
  const double x_lo = std::min(0.0, *grid.begin());
  const double x_hi = std::max(1.0, *grid.rbegin());

  const double width = 720, left = 60, right = 200, top = 30, bottom = 50;
  const double pw = width - left - right, ph = 360;
  const double legend_bottom = top + 18.0 * static_cast<double>(series.size()) + 10;
  const double height = std::max(top + ph + bottom, legend_bottom);
  auto sx = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto sy = [&](double y) { return top + (1.0 - std::clamp(y, 0.0, 1.0)) * ph; };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                            "#9467bd", "#8c564b", "#e377c2", "#17becf"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<line class=\"axis\" x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw
      << "\" y2=\"" << top + ph << "\" stroke=\"black\"/>\n";
  svg << "<line class=\"axis\" x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
      << "\" y2=\"" << top + ph << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 10; ++i) {
    const double v = i / 10.0;
    const double xv = x_lo + (x_hi - x_lo) * v;
    svg << "<text x=\"" << num(sx(xv)) << "\" y=\"" << top + ph + 16
        << "\" text-anchor=\"middle\">" << num(xv) << "</text>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << num(sy(v) + 4)
        << "\" text-anchor=\"end\">" << num(v) << "</text>\n";
  }
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\">P_N</text>\n";
  svg << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << top + ph / 2 << ")\">Virality</text>\n";
  svg << "<line class=\"reference\" x1=\"" << left << "\" y1=\"" << num(sy(0.5)) << "\" x2=\""
      << left + pw << "\" y2=\"" << num(sy(0.5)) << "\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n";

  std::size_t index = 0;
  for (auto& [key, pts] : series) {
    std::sort(pts.begin(), pts.end());
    const char* color = kColors[index % std::size(kColors)];
    svg << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i)
      svg << (i ? " " : "") << num(sx(pts[i].first)) << ',' << num(sy(pts[i].second));
    svg << "\"/>\n";

    const auto& [theta, p_o, has_delay, delay] = key;
    std::string label = "theta=" + fixed6(theta).substr(0, 5) + " p_o=" + num(p_o) +
                        (has_delay ? " sa-delay=" + std::to_string(delay) : " no SA");
    const double ly = top + 10 + 18.0 * static_cast<double>(index);
    svg << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 32
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text class=\"legend\" x=\"" << left + pw + 36 << "\" y=\"" << ly + 4 << "\">" << label
        << "</text>\n";
    ++index;
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

inline void plot_virality(const std::vector<std::string>& csv_paths, const std::string& out_path) {
  if (csv_paths.empty()) throw HarnessError("plot: no CSV inputs");
  std::vector<CsvRow> rows;
  for (const auto& p : csv_paths) {
    auto part = read_csv(p);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  write_file(out_path, render_virality_svg(rows));
}

// ---------------------------------------------------------------------------
// Specs from a configuration file

inline SweepSpec baseline_spec(const ExperimentConfig& cfg, double p_o, std::uint64_t master_seed,
                               std::size_t replicates) {
  SweepSpec s;
  s.base = cfg.sim;
  s.thetas = cfg.thetas;
  s.p_n_grid = cfg.p_n_grid;
  s.p_o = p_o;
  s.replicates = replicates;
  s.master_seed = master_seed;
  return s;
}

inline SweepSpec sa_spec(const ExperimentConfig& cfg, double p_o, std::size_t sa_delay,
                         std::uint64_t master_seed, std::size_t replicates) {
  SweepSpec s = baseline_spec(cfg, p_o, master_seed, replicates);
  s.sa_delay = sa_delay;
  return s;
}

}  // namespace ecsim
