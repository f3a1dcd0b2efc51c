#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ecsim/random.hpp"

namespace ecsim {

using NodeId = std::uint32_t;

struct Edge {
  NodeId u;
  NodeId v;
  friend bool operator==(const Edge&, const Edge&) = default;
};

// Undirected simple graph. Edges are stored once with u < v, in creation
// order; the adjacency lists mirror the edge list.
class Graph {
 public:
  Graph() = default;
  explicit Graph(std::size_t node_count) : adjacency_(node_count) {}

  std::size_t node_count() const noexcept { return adjacency_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<NodeId>& neighbors(NodeId i) const { return adjacency_[i]; }
  std::size_t degree(NodeId i) const { return adjacency_[i].size(); }

  bool has_edge(NodeId a, NodeId b) const {
    const auto& small = adjacency_[a].size() <= adjacency_[b].size()
                            ? adjacency_[a]
                            : adjacency_[b];
    const NodeId other = &small == &adjacency_[a] ? b : a;
    return std::find(small.begin(), small.end(), other) != small.end();
  }

  // Returns false (and leaves the graph untouched) for self-loops and
  // duplicates.
  bool add_edge(NodeId a, NodeId b) {
    if (a == b || has_edge(a, b)) return false;
    edges_.push_back(normalized(a, b));
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
    return true;
  }

  // Replaces the edge at `index` with {a, b} in place, so the edge count and
  // the position of every other edge are unchanged.
  void replace_edge(std::size_t index, NodeId a, NodeId b) {
    if (a == b || has_edge(a, b))
      throw std::invalid_argument("replace_edge: self-loop or duplicate edge");
    const Edge old = edges_.at(index);
    unlink(old.u, old.v);
    unlink(old.v, old.u);
    edges_[index] = normalized(a, b);
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }

 private:
  static Edge normalized(NodeId a, NodeId b) {
    return a < b ? Edge{a, b} : Edge{b, a};
  }

  void unlink(NodeId from, NodeId to) {
    auto& list = adjacency_[from];
    list.erase(std::find(list.begin(), list.end(), to));
  }

  std::vector<std::vector<NodeId>> adjacency_;
  std::vector<Edge> edges_;
};

// Round half up, used for every fraction-to-count conversion.
inline std::size_t round_count(double x) {
  return static_cast<std::size_t>(std::floor(x + 0.5));
}

// ---------------------------------------------------------------------------
// Generators

// G(n, M) with M = round(n*k/2): M distinct unordered pairs drawn uniformly
// without replacement, so the edge count is deterministic.
inline Graph gen_erdos_renyi(std::size_t n, double k, Rng& rng) {
  if (n < 2) throw std::invalid_argument("erdos_renyi: need at least 2 nodes");
  if (k < 0 || k > static_cast<double>(n - 1))
    throw std::invalid_argument("erdos_renyi: average degree must be in [0, n-1]");
  const std::uint64_t pairs = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t m = std::min<std::uint64_t>(
      round_count(static_cast<double>(n) * k / 2.0), pairs);

  // Floyd's sampling of m distinct pair indices out of `pairs`.
  std::unordered_set<std::uint64_t> chosen;
  std::vector<std::uint64_t> order;
  chosen.reserve(m * 2);
  order.reserve(m);
  for (std::uint64_t j = pairs - m; j < pairs; ++j) {
    const std::uint64_t t = rng.below(j + 1);
    const std::uint64_t pick = chosen.insert(t).second ? t : j;
    if (pick == j) chosen.insert(j);
    order.push_back(pick);
  }

  Graph g(n);
  for (std::uint64_t index : order) {
    // Decode the row-major upper-triangle index into (a, b), a < b.
    std::uint64_t a = 0, row = n - 1, rest = index;
    while (rest >= row) {
      rest -= row;
      ++a;
      --row;
    }
    g.add_edge(static_cast<NodeId>(a), static_cast<NodeId>(a + 1 + rest));
  }
  return g;
}

// Watts-Strogatz: ring lattice of even degree k, then every lattice edge has
// its far endpoint rewired with probability `rewire_prob`.
inline Graph gen_small_world(std::size_t n, std::size_t k, double rewire_prob,
                             Rng& rng) {
  if (k % 2 != 0) throw std::invalid_argument("small_world: k must be even");
  if (k >= n) throw std::invalid_argument("small_world: k must be < n");
  if (rewire_prob < 0 || rewire_prob > 1)
    throw std::invalid_argument("small_world: rewire probability outside [0,1]");

  Graph g(n);
  for (std::size_t j = 1; j <= k / 2; ++j)
    for (std::size_t u = 0; u < n; ++u)
      g.add_edge(static_cast<NodeId>(u), static_cast<NodeId>((u + j) % n));

  for (std::size_t index = 0; index < g.edge_count(); ++index) {
    if (!rng.bernoulli(rewire_prob)) continue;
    const NodeId u = g.edges()[index].u;
    if (g.degree(u) >= n - 1) continue;  // nowhere to go
    NodeId w;
    do {
      w = static_cast<NodeId>(rng.below(n));
    } while (w == u || g.has_edge(u, w));
    g.replace_edge(index, u, w);
  }
  return g;
}

// Barabasi-Albert growth from an m-node clique. Each arriving node attaches
// to m distinct existing nodes with probability proportional to degree.
inline Graph gen_preferential_attachment(std::size_t n, std::size_t m, Rng& rng) {
  if (m < 1 || m >= n)
    throw std::invalid_argument("preferential_attachment: need 1 <= m < n");

  Graph g(n);
  std::vector<NodeId> endpoints;  // node i appears deg(i) times
  for (NodeId a = 0; a < m; ++a)
    for (NodeId b = a + 1; b < m; ++b) {
      g.add_edge(a, b);
      endpoints.push_back(a);
      endpoints.push_back(b);
    }

  std::vector<NodeId> targets;
  for (auto v = static_cast<NodeId>(m); v < n; ++v) {
    targets.clear();
    while (targets.size() < m) {
      // An edgeless seed (m == 1) has no degree mass yet: fall back to uniform.
      const NodeId t = endpoints.empty()
                           ? static_cast<NodeId>(rng.below(v))
                           : endpoints[rng.below(endpoints.size())];
      if (std::find(targets.begin(), targets.end(), t) == targets.end())
        targets.push_back(t);
    }
    for (NodeId t : targets) {
      g.add_edge(v, t);
      endpoints.push_back(v);
      endpoints.push_back(t);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Centrality

enum class CentralityMethod { degree, betweenness, pagerank };

inline std::string_view to_string(CentralityMethod m) {
  switch (m) {
    case CentralityMethod::degree: return "degree";
    case CentralityMethod::betweenness: return "betweenness";
    case CentralityMethod::pagerank: return "page-rank";
  }
  return "?";
}

inline CentralityMethod parse_centrality_method(std::string_view s) {
  if (s == "degree") return CentralityMethod::degree;
  if (s == "betweenness") return CentralityMethod::betweenness;
  if (s == "page-rank" || s == "pagerank") return CentralityMethod::pagerank;
  throw std::invalid_argument("unknown centrality method: " + std::string(s));
}

struct CentralityScores {
  CentralityMethod method;
  std::vector<double> scores;
};

inline CentralityScores degree(const Graph& g) {
  CentralityScores out{CentralityMethod::degree, std::vector<double>(g.node_count())};
  for (NodeId i = 0; i < g.node_count(); ++i)
    out.scores[i] = static_cast<double>(g.degree(i));
  return out;
}

// Brandes' algorithm on unweighted shortest paths. Scores are unnormalized
// and count each unordered (s, t) pair once. Only the ranking is consumed
// downstream, so no normalization is applied.
inline CentralityScores betweenness(const Graph& g) {
  const std::size_t n = g.node_count();
  std::vector<double> cb(n, 0.0);
  std::vector<NodeId> stack;
  std::vector<std::vector<NodeId>> pred(n);
  std::vector<double> sigma(n), delta(n);
  std::vector<long> dist(n);
  std::queue<NodeId> queue;

  for (NodeId s = 0; s < n; ++s) {
    stack.clear();
    for (auto& p : pred) p.clear();
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    std::fill(dist.begin(), dist.end(), -1L);
    sigma[s] = 1.0;
    dist[s] = 0;
    queue.push(s);
    while (!queue.empty()) {
      const NodeId v = queue.front();
      queue.pop();
      stack.push_back(v);
      for (NodeId w : g.neighbors(v)) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          pred[w].push_back(v);
        }
      }
    }
    while (!stack.empty()) {
      const NodeId w = stack.back();
      stack.pop_back();
      for (NodeId v : pred[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) cb[w] += delta[w];
    }
  }
  for (double& x : cb) x /= 2.0;  // undirected: every pair was seen twice
  return {CentralityMethod::betweenness, std::move(cb)};
}

// Power iteration treating every undirected edge as two links. Mass held by
// isolated nodes is spread uniformly.
inline CentralityScores pagerank(const Graph& g, double damping = 0.85,
                                 double tol = 1e-8, int max_iter = 100) {
  if (!(damping > 0 && damping < 1))
    throw std::invalid_argument("pagerank: damping must be in (0, 1)");
  const std::size_t n = g.node_count();
  if (n == 0) return {CentralityMethod::pagerank, {}};
  const double nn = static_cast<double>(n);
  std::vector<double> rank(n, 1.0 / nn), next(n);

  for (int iter = 0; iter < max_iter; ++iter) {
    double dangling = 0.0;
    for (NodeId i = 0; i < n; ++i)
      if (g.degree(i) == 0) dangling += rank[i];
    const double base = (1.0 - damping) / nn + damping * dangling / nn;
    std::fill(next.begin(), next.end(), base);
    for (NodeId j = 0; j < n; ++j) {
      if (g.degree(j) == 0) continue;
      const double share = damping * rank[j] / static_cast<double>(g.degree(j));
      for (NodeId i : g.neighbors(j)) next[i] += share;
    }
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change += std::abs(next[i] - rank[i]);
    rank.swap(next);
    if (change < tol) break;
  }
  const double total = std::accumulate(rank.begin(), rank.end(), 0.0);
  for (double& x : rank) x /= total;
  return {CentralityMethod::pagerank, std::move(rank)};
}

inline CentralityScores centrality(const Graph& g, CentralityMethod method) {
  switch (method) {
    case CentralityMethod::degree: return degree(g);
    case CentralityMethod::betweenness: return betweenness(g);
    case CentralityMethod::pagerank: return pagerank(g);
  }
  throw std::invalid_argument("centrality: bad method");
}

// Node ids ordered by descending score, ties by ascending id.
inline std::vector<NodeId> rank_nodes(const std::vector<double>& scores) {
  std::vector<NodeId> order(scores.size());
  std::iota(order.begin(), order.end(), NodeId{0});
  std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    return scores[a] > scores[b];
  });
  return order;
}

}  // namespace ecsim
