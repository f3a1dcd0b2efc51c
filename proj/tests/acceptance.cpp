// Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails. All tolerances are fixed below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "ecsim/ecsim.hpp"
#include "oracles.hpp"

using namespace ecsim;

namespace {

constexpr std::uint64_t kMasterSeed = 42;
constexpr std::size_t kReplicates = 300;
constexpr std::size_t kJobs = 4;

// Tolerances.
constexpr double kHighViralityFloor = 0.80 - 0.10;  // criterion 1
constexpr double kLowViralityCeiling = 0.20 + 0.05;  // criterion 2
constexpr double kSaMeanCeiling = 0.5;               // criterion 4
constexpr double kProfileTolerance = 0.05;           // criterion 6
constexpr double kGradRelTolerance = 1e-4;           // criterion 9
constexpr double kGradStep = 1e-5;                   // criterion 9
constexpr double kBetweennessTolerance = 1e-9;       // criterion 12
constexpr double kPagerankSumTolerance = 1e-9;       // criterion 12

struct Verdict {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const Verdict& v) {
  std::printf("[%s] criterion %2d: %s -- %s\n", v.pass ? "PASS" : "FAIL", id, title.c_str(),
              v.detail.c_str());
  std::fflush(stdout);
  if (!v.pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

ExperimentConfig defaults() { return ExperimentConfig{}; }

// Virality per P_N at one theta.
std::vector<double> profile(const SweepResult& r, double theta) {
  std::vector<double> v;
  for (const auto& row : r.rows)
    if (row.theta == theta) v.push_back(row.virality);
  return v;
}

double mean(const std::vector<double>& xs) {
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Standard error of the grid-mean of independent binomial proportions.
double mean_se(const std::vector<double>& v, std::size_t t) {
  double var = 0;
  for (double p : v) var += p * (1 - p) / static_cast<double>(t);
  return std::sqrt(var) / static_cast<double>(v.size());
}

void print_profile(const char* label, const std::vector<double>& p_n, const std::vector<double>& v) {
  std::printf("    %-28s", label);
  for (std::size_t i = 0; i < v.size(); ++i) std::printf(" %.1f:%.3f", p_n[i], v[i]);
  std::printf("\n");
}

SweepResult baseline(const ExperimentConfig& cfg, double p_o) {
  return run_baseline_sweep(baseline_spec(cfg, p_o, kMasterSeed, kReplicates), kJobs);
}

SweepResult with_agent(const ExperimentConfig& cfg, const QNetwork& net, double theta,
                       std::size_t delay) {
  SweepSpec s = sa_spec(cfg, 0.0, delay, kMasterSeed, kReplicates);
  s.thetas = {theta};
  return run_sa_sweep(s, net, kJobs);
}

}  // namespace

int main() {
  const auto started = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = defaults();
  const auto& grid = cfg.p_n_grid;
  std::printf("acceptance: N=%zu, ticks=%zu, T=%zu replicates, master seed %llu\n", cfg.sim.nb_nodes,
              cfg.sim.total_ticks, kReplicates, static_cast<unsigned long long>(kMasterSeed));

  // Baseline sweeps shared by criteria 1-3 and 6.
  const SweepResult base0 = baseline(cfg, 0.0);
  const SweepResult base27 = baseline(cfg, 0.27);
  for (double th : cfg.thetas) {
    print_profile(("baseline theta=" + fmt("%.3f", th) + " p_o=0").c_str(), grid, profile(base0, th));
    print_profile(("baseline theta=" + fmt("%.3f", th) + " p_o=0.27").c_str(), grid, profile(base27, th));
  }

  // 1. High virality at theta = 0.27 over the middle of the grid, falling off
  //    strictly beyond P_N = 0.8.
  {
    const auto v = profile(base0, 0.270);
    double worst = 1.0;
    bool ok = true;
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (grid[i] >= 0.2 - 1e-9 && grid[i] <= 0.8 + 1e-9) {
        worst = std::min(worst, v[i]);
        ok = ok && v[i] >= kHighViralityFloor;
      }
    bool decreasing = true;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
      if (grid[i] >= 0.8 - 1e-9) decreasing = decreasing && v[i + 1] < v[i];
    report(1, "baseline theta=0.270 p_o=0: V>=0.70 on P_N 0.2..0.8, strictly decreasing past 0.8",
           {ok && decreasing, fmt("min V on 0.2..0.8 = %.3f (floor %.2f)", worst, kHighViralityFloor) +
                                  (decreasing ? ", tail decreasing" : ", tail NOT strictly decreasing")});
  }

  // 2. Low virality at theta = 0.414.
  {
    const auto v = profile(base0, 0.414);
    const double worst = *std::max_element(v.begin(), v.end());
    report(2, "baseline theta=0.414 p_o=0: V<=0.25 on the full P_N grid",
           {worst <= kLowViralityCeiling, fmt("max V = %.3f (ceiling %.2f)", worst, kLowViralityCeiling)});
  }

  // 3. Opinion polarization raises virality, point by point within one
  //    binomial standard error of the difference.
  {
    int violations = 0;
    double worst_gap = 1e9;
    std::string where;
    for (std::size_t i = 0; i < base0.rows.size(); ++i) {
      const double a = base0.rows[i].virality, b = base27.rows[i].virality;
      const double se = std::sqrt(a * (1 - a) / kReplicates + b * (1 - b) / kReplicates);
      const double gap = (b - a) + se;
      if (gap < worst_gap) {
        worst_gap = gap;
        where = fmt("theta=%.3f P_N=%.1f", base0.rows[i].theta, base0.rows[i].p_n) +
                fmt(" (V0=%.3f V27=%.3f SE=%.3f)", a, b, se);
      }
      if (gap < 0) ++violations;
    }
    report(3, "baseline V(p_o=0.27) >= V(p_o=0) - 1 SE at every (theta, P_N)",
           {violations == 0, std::to_string(violations) + " of " + std::to_string(base0.rows.size()) +
                                 " points violate; tightest " + where});
  }

  // Train the Super-Agent once for criteria 4-7.
  const auto trained = train(cfg, cfg.dqn.episodes, kMasterSeed);
  const QNetwork& net = trained.checkpoint.net;
  std::printf("    trained %zu episodes, %zu train steps\n", trained.checkpoint.episodes_done,
              trained.checkpoint.train_steps);

  // 4. Acting every two ticks keeps theta = 0.27 below the viral level.
  {
    const auto v = profile(with_agent(cfg, net, 0.270, 2), 0.270);
    print_profile("super-agent theta=0.270 d=2", grid, v);
    const double m = mean(v);
    report(4, "super-agent theta=0.270 sa-delay=2: mean V over P_N grid < 0.5",
           {m < kSaMeanCeiling, fmt("mean V = %.3f (500 training episodes)", m)});
  }

  // 5. More frequent intervention does not raise virality at theta = 0.342.
  {
    const auto v5 = profile(with_agent(cfg, net, 0.342, 5), 0.342);
    const auto v4 = profile(with_agent(cfg, net, 0.342, 4), 0.342);
    const auto v2 = profile(with_agent(cfg, net, 0.342, 2), 0.342);
    print_profile("super-agent theta=0.342 d=5", grid, v5);
    print_profile("super-agent theta=0.342 d=4", grid, v4);
    print_profile("super-agent theta=0.342 d=2", grid, v2);
    const double m5 = mean(v5), m4 = mean(v4), m2 = mean(v2);
    const double se24 = std::hypot(mean_se(v2, kReplicates), mean_se(v4, kReplicates));
    const double se45 = std::hypot(mean_se(v4, kReplicates), mean_se(v5, kReplicates));
    const bool ok = m2 <= m4 + se24 && m4 <= m5 + se45;
    report(5, "super-agent theta=0.342: mean V(d=2) <= V(d=4) <= V(d=5) within 1 SE",
           {ok, fmt("means d2=%.4f d4=%.4f d5=%.4f", m2, m4, m5) +
                    fmt(", SE(2,4)=%.4f SE(4,5)=%.4f", se24, se45)});
  }

  // 6. At theta = 0.414 the agent leaves the (already low) profile unchanged.
  {
    const auto vb = profile(base0, 0.414);
    double worst = 0;
    for (std::size_t d : cfg.sa_delays) {
      const auto v = profile(with_agent(cfg, net, 0.414, d), 0.414);
      print_profile(("super-agent theta=0.414 d=" + std::to_string(d)).c_str(), grid, v);
      for (std::size_t i = 0; i < v.size(); ++i) worst = std::max(worst, std::abs(v[i] - vb[i]));
    }
    report(6, "super-agent theta=0.414: |V_sa - V_baseline| <= 0.05 at every P_N, all sa-delays",
           {worst <= kProfileTolerance, fmt("max deviation = %.3f", worst)});
  }

  // 7. Byte-identical CSVs for the same seed, any worker count.
  {
    auto run = [&](std::size_t jobs) {
      SweepSpec b = baseline_spec(cfg, 0.0, 7, 20);
      SweepSpec s = sa_spec(cfg, 0.0, 2, 7, 20);
      std::vector<SweepResult> parts{run_baseline_sweep(b, jobs), run_sa_sweep(s, net, jobs)};
      const auto merged = merge(std::move(parts));
      return to_csv(merged) + to_runs_csv(merged);
    };
    const std::string one = run(1), again = run(1), eight = run(8), three = run(3);
    const bool ok = one == again && one == eight && one == three;
    report(7, "determinism: identical config and seed give byte-identical CSV for jobs 1/3/8",
           {ok, std::to_string(one.size()) + " bytes compared across 4 runs"});
  }

  // 8. Reward against the table oracle on a 1,000-point grid.
  {
    const double ars[] = {-1.0, -0.37, -0.1, -0.01, 0.0, 1e-9, 0.02, 0.13, 0.5, 1.0};
    const double aws[] = {2.0, 3.3, 17.25, 101.0, 200.0};
    const double gcs[] = {0.0, 0.31, 0.5, 0.5000001, 1.0};
    std::size_t points = 0, mismatches = 0;
    for (std::size_t ai = 0; ai < std::size(ars); ++ai)
      for (double aw : aws)
        for (double gc : gcs)
          for (int f = 0; f < 4; ++f) {
            const Action action = kAllActions[(ai + static_cast<std::size_t>(f)) % 4];
            EpisodeFlags flags;
            flags.warning_done = f & 1;
            flags.forcing_done = f & 2;
            ++points;
            if (reward(ars[ai], aw, action, flags, gc) !=
                oracle::reward(ars[ai], aw, action, flags.warning_done, flags.forcing_done, gc))
              ++mismatches;
          }
    report(8, "reward matches the table oracle exactly on a 1,000-point grid",
           {points == 1000 && mismatches == 0,
            std::to_string(mismatches) + " mismatches over " + std::to_string(points) + " points"});
  }

  // 9. Backprop against central finite differences.
  {
    Rng rng(2718);
    double worst = 0;
    for (int draw = 0; draw < 100; ++draw) {
      const QNetwork q = QNetwork::random(rng);
      const QNetwork target = QNetwork::random(rng);
      std::vector<Transition> batch(5);
      for (auto& t : batch) {
        t.state = {rng.uniform(), rng.uniform(), rng.uniform()};
        t.next_state = {rng.uniform(), rng.uniform(), rng.uniform()};
        t.action = kAllActions[rng.below(4)];
        t.reward = rng.uniform(-2.0, 5.0);
        t.terminal = rng.bernoulli(0.2);
      }
      std::vector<double> grad;
      loss_and_gradient(q, target, batch, 0.9, grad);
      std::vector<double> p = q.parameters();
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double saved = p[i];
        p[i] = saved + kGradStep;
        const double up = oracle::reference_loss(p, target, batch, 0.9);
        p[i] = saved - kGradStep;
        const double down = oracle::reference_loss(p, target, batch, 0.9);
        p[i] = saved;
        const double numeric = (up - down) / (2 * kGradStep);
        worst = std::max(worst, std::abs(numeric - grad[i]) /
                                    std::max({std::abs(numeric), std::abs(grad[i]), 1e-6}));
      }
    }
    report(9, "gradient check: backprop vs central differences (h=1e-5), 100 draws",
           {worst < kGradRelTolerance, fmt("max relative error = %.3g", worst)});
  }

  // 10. Observing-only agent reproduces the baseline tick for tick.
  {
    std::size_t runs = 0, mismatched = 0;
    for (double theta : cfg.thetas)
      for (std::size_t pi = 0; pi < grid.size(); ++pi)
        for (std::size_t delay : cfg.sa_delays) {
          SimConfig c = cfg.sim;
          c.theta = theta;
          c.p_n = grid[pi];
          c.sa_delay = delay;
          c.seed = derive_seed(kMasterSeed, 10, pi, delay);
          const auto sa = run_episode(c, constant_policy(Action::observing));
          ++runs;
          if (sa.record.gc_trace != run_baseline(c).gc_trace) ++mismatched;
        }
    report(10, "observing-only agent reproduces the no-agent GC trajectory tick for tick",
           {mismatched == 0, std::to_string(mismatched) + " of " + std::to_string(runs) + " runs differ"});
  }

  // 11. Construction invariants and flag/band consistency.
  {
    bool ok = true;
    std::string why;
    std::size_t builds = 0;
    for (NetworkKind kind : {NetworkKind::erdos_renyi, NetworkKind::small_world,
                             NetworkKind::preferential_attachment})
      for (std::size_t n : {37u, 100u, 250u})
        for (double ecf : {0.05, 0.2, 0.5, 0.9})
          for (double pn : {0.0, 0.5, 1.0}) {
            SimConfig c;
            c.network = kind;
            c.nb_nodes = n;
            c.echo_chamber_fraction = ecf;
            c.p_n = pn;
            c.seed = builds;
            Rng rng(c.seed);
            Graph g = generate_network(c, rng);
            const std::size_t edges = g.edge_count();
            Simulation sim(c, std::move(g), std::move(rng));
            sim.build_echo_chamber();
            std::size_t members = 0;
            for (const auto& a : sim.agents()) members += a.is_in_cluster;
            ++builds;
            if (members != round_count(static_cast<double>(n) * ecf) || sim.graph().edge_count() != edges) {
              ok = false;
              why = "build " + std::to_string(builds);
            }
          }

    Rng meta(11);
    std::size_t steps = 0;
    for (std::uint64_t seed = 0; steps < 10000; ++seed) {
      SimConfig c;
      c.seed = seed;
      c.theta = cfg.thetas[meta.below(cfg.thetas.size())];
      c.p_o = meta.bernoulli(0.5) ? 0.27 : 0.0;
      c.p_n = grid[meta.below(grid.size())];
      c.global_warning = meta.bernoulli(0.5);
      c.choose_method = static_cast<CentralityMethod>(meta.below(3));
      auto sim = Simulation::create(c);
      while (!sim.finished() && steps < 10000) {
        if (meta.bernoulli(0.2)) apply_action(sim, kAllActions[meta.below(4)]);
        sim.tick();
        ++steps;
        if (!sim.invariants_hold()) {
          ok = false;
          why = "invariant broken at step " + std::to_string(steps);
        }
      }
    }
    report(11, "construction invariants over " + std::to_string(builds) +
                   " builds; flag/band consistency over 10,000 randomized steps",
           {ok, ok ? std::to_string(steps) + " steps checked" : why});
  }

  // 12. Betweenness against brute force on small graphs; PageRank mass.
  {
    Rng rng(12);
    double worst_b = 0, worst_pr = 0;
    for (int seed = 0; seed < 200; ++seed) {
      const std::size_t n = 2 + rng.below(7);
      const double max_k = static_cast<double>(n - 1);
      const Graph g = gen_erdos_renyi(n, max_k * rng.uniform(), rng);
      const auto fast = betweenness(g).scores;
      const auto slow = oracle::brute_force_betweenness(g);
      for (std::size_t i = 0; i < n; ++i) worst_b = std::max(worst_b, std::abs(fast[i] - slow[i]));
      const auto pr = pagerank(g).scores;
      worst_pr = std::max(worst_pr, std::abs(std::accumulate(pr.begin(), pr.end(), 0.0) - 1.0));
    }
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      SimConfig c;
      c.seed = seed;
      c.network = static_cast<NetworkKind>(seed % 3);
      const auto sim = Simulation::create(c);
      const auto pr = pagerank(sim.graph()).scores;
      worst_pr = std::max(worst_pr, std::abs(std::accumulate(pr.begin(), pr.end(), 0.0) - 1.0));
    }
    report(12, "betweenness equals brute force on 200 graphs with n<=8; PageRank sums to 1",
           {worst_b <= kBetweennessTolerance && worst_pr <= kPagerankSumTolerance,
            fmt("max betweenness error %.3g, max |sum PR - 1| %.3g", worst_b, worst_pr)});
  }

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  std::printf("acceptance: %d criteria failed, %.1f s\n", failures, secs);
  return failures == 0 ? 0 : 1;
}
