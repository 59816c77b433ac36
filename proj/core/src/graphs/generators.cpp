#include "tango/graphs/generators.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace tango::graphs {

std::string_view family_name(Family f) noexcept {
  switch (f) {
    case Family::ErdosRenyi: return "erdos-renyi";
    case Family::BarabasiAlbert: return "barabasi-albert";
    case Family::Caveman: return "caveman";
    case Family::Tree: return "tree";
    case Family::Grid: return "grid";
    case Family::Line: return "line";
    case Family::Star: return "star";
    case Family::Caterpillar: return "caterpillar";
    case Family::Lobster: return "lobster";
  }
  return "unknown";
}

std::optional<Family> parse_family(std::string_view name) noexcept {
  for (const auto f : kAllFamilies) {
    if (family_name(f) == name) return f;
  }
  return std::nullopt;
}

namespace {

using Edges = std::vector<Edge>;

std::int32_t id(std::size_t v) { return static_cast<std::int32_t>(v); }

void require(bool ok, Family f, std::size_t n, const char* why) {
  if (!ok) {
    throw GraphError(std::string(family_name(f)) + " infeasible for n=" + std::to_string(n) + ": " + why);
  }
}

Edges path_edges(std::size_t n) {
  Edges e;
  for (std::size_t v = 1; v < n; ++v) e.push_back({id(v - 1), id(v)});
  return e;
}

Edges random_tree_edges(std::size_t n, Rng& rng) {
  Edges e;
  for (std::size_t v = 1; v < n; ++v) e.push_back({id(rng.below(v)), id(v)});
  return e;
}

Graph erdos_renyi(std::size_t n, Rng& rng) {
  // Above the ln(n)/n connectivity threshold; resample until connected.
  const double p = std::min(1.0, 1.5 * std::log(static_cast<double>(std::max<std::size_t>(n, 2))) /
                                     static_cast<double>(n));
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Edges e;
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = u + 1; v < n; ++v)
        if (rng.bernoulli(p)) e.push_back({id(u), id(v)});
    Graph g(n, std::move(e));
    if (g.connected()) return g;
  }
  throw GraphError("erdos-renyi: no connected sample found");
}

Graph barabasi_albert(std::size_t n, Rng& rng) {
  constexpr std::size_t m = 2;
  require(n >= m + 1, Family::BarabasiAlbert, n, "needs at least 3 nodes");
  Edges e;
  std::vector<std::int32_t> targets;  // node repeated once per incident edge
  for (std::size_t u = 0; u <= m; ++u) {
    for (std::size_t v = u + 1; v <= m; ++v) {
      e.push_back({id(u), id(v)});
      targets.push_back(id(u));
      targets.push_back(id(v));
    }
  }
  for (std::size_t v = m + 1; v < n; ++v) {
    std::set<std::int32_t> chosen;
    while (chosen.size() < m) chosen.insert(targets[rng.below(targets.size())]);
    for (const auto u : chosen) {
      e.push_back({u, id(v)});
      targets.push_back(u);
      targets.push_back(id(v));
    }
  }
  return Graph(n, std::move(e));
}

Graph caveman(std::size_t n) {
  require(n >= 2, Family::Caveman, n, "needs at least 2 nodes");
  // Cliques of about five nodes, sizes differing by at most one, linked in a
  // ring (a chain for two cliques) through one edge between neighbors.
  const std::size_t cliques = std::max<std::size_t>(1, (n + 2) / 5);
  std::vector<std::size_t> start(cliques + 1, 0);
  for (std::size_t c = 0; c < cliques; ++c) start[c + 1] = start[c] + n / cliques + (c < n % cliques ? 1 : 0);
  Edges e;
  for (std::size_t c = 0; c < cliques; ++c) {
    for (std::size_t u = start[c]; u < start[c + 1]; ++u)
      for (std::size_t v = u + 1; v < start[c + 1]; ++v) e.push_back({id(u), id(v)});
  }
  const std::size_t links = cliques >= 3 ? cliques : cliques - 1;
  for (std::size_t c = 0; c < links; ++c) {
    const std::size_t next = (c + 1) % cliques;
    e.push_back({id(start[c + 1] - 1), id(start[next])});
  }
  return Graph(n, std::move(e));
}

Graph grid(std::size_t n) {
  const auto width = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  Edges e;
  for (std::size_t v = 0; v < n; ++v) {
    if ((v + 1) % width != 0 && v + 1 < n) e.push_back({id(v), id(v + 1)});
    if (v + width < n) e.push_back({id(v), id(v + width)});
  }
  return Graph(n, std::move(e));
}

Graph star(std::size_t n) {
  Edges e;
  for (std::size_t v = 1; v < n; ++v) e.push_back({0, id(v)});
  return Graph(n, std::move(e));
}

Graph caterpillar(std::size_t n, Rng& rng) {
  require(n >= 2, Family::Caterpillar, n, "needs at least 2 nodes");
  const auto spine = static_cast<std::size_t>(rng.between(std::max<std::int64_t>(1, static_cast<std::int64_t>(n) / 4),
                                                          std::max<std::int64_t>(1, static_cast<std::int64_t>(n) / 2)));
  Edges e = path_edges(spine);
  for (std::size_t v = spine; v < n; ++v) e.push_back({id(rng.below(spine)), id(v)});
  return Graph(n, std::move(e));
}

Graph lobster(std::size_t n, Rng& rng) {
  require(n >= 3, Family::Lobster, n, "needs at least 3 nodes");
  const auto spine = static_cast<std::size_t>(rng.between(std::max<std::int64_t>(1, static_cast<std::int64_t>(n) / 4),
                                                          std::max<std::int64_t>(1, static_cast<std::int64_t>(n) / 3)));
  Edges e = path_edges(spine);
  std::vector<std::int32_t> legs;  // nodes at distance one from the spine
  for (std::size_t v = spine; v < n; ++v) {
    if (legs.empty() || rng.bernoulli(0.5)) {
      e.push_back({id(rng.below(spine)), id(v)});
      legs.push_back(id(v));
    } else {
      e.push_back({legs[rng.below(legs.size())], id(v)});
    }
  }
  return Graph(n, std::move(e));
}

}  // namespace

Graph generate_family(Family family, std::size_t n, Rng& rng) {
  if (n == 0) throw GraphError(std::string(family_name(family)) + " infeasible for n=0");
  switch (family) {
    case Family::ErdosRenyi: return erdos_renyi(n, rng);
    case Family::BarabasiAlbert: return barabasi_albert(n, rng);
    case Family::Caveman: return caveman(n);
    case Family::Tree: return Graph(n, random_tree_edges(n, rng));
    case Family::Grid: return grid(n);
    case Family::Line: return Graph(n, path_edges(n));
    case Family::Star: return star(n);
    case Family::Caterpillar: return caterpillar(n, rng);
    case Family::Lobster: return lobster(n, rng);
  }
  throw GraphError("unknown family");
}

Graph barbell_graph(std::size_t k) {
  if (k < 3) throw GraphError("barbell: clique size must be at least 3, got " + std::to_string(k));
  Edges e;
  for (std::size_t side = 0; side < 2; ++side) {
    const std::size_t base = side * k;
    for (std::size_t u = 0; u < k; ++u)
      for (std::size_t v = u + 1; v < k; ++v) e.push_back({id(base + u), id(base + v)});
  }
  e.push_back({id(k - 1), id(k)});
  return Graph(2 * k, std::move(e));
}

Graph random_sparse_graph(std::size_t n, std::size_t num_edges, Rng& rng) {
  if (n < 2) throw GraphError("random_sparse_graph: needs at least 2 nodes");
  const std::size_t max_edges = n * (n - 1) / 2;
  if (num_edges < n - 1 || num_edges > max_edges) {
    throw GraphError("random_sparse_graph: edge count outside [n-1, n(n-1)/2]");
  }
  Edges e = random_tree_edges(n, rng);
  std::set<std::pair<std::int32_t, std::int32_t>> seen;
  for (const auto& x : e) seen.emplace(std::min(x.u, x.v), std::max(x.u, x.v));
  while (e.size() < num_edges) {
    auto u = id(rng.below(n));
    auto v = id(rng.below(n));
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (seen.emplace(u, v).second) e.push_back({u, v});
  }
  return Graph(n, std::move(e));
}

}  // namespace tango::graphs
