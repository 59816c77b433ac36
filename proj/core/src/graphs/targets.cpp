#include "tango/graphs/targets.hpp"

#include <algorithm>
#include <queue>
#include <string>

namespace tango::graphs {

std::vector<int> bfs_distances(const Graph& g, std::size_t source) {
  if (source >= g.num_nodes()) {
    throw GraphError("source " + std::to_string(source) + " out of range for " +
                     std::to_string(g.num_nodes()) + " nodes");
  }
  std::vector<int> dist(g.num_nodes(), -1);
  std::queue<std::size_t> q;
  dist[source] = 0;
  q.push(source);
  while (!q.empty()) {
    const auto v = q.front();
    q.pop();
    for (const auto u : g.neighbors(v)) {
      auto& du = dist[static_cast<std::size_t>(u)];
      if (du < 0) {
        du = dist[v] + 1;
        q.push(static_cast<std::size_t>(u));
      }
    }
  }
  return dist;
}

Targets compute_targets(const Graph& g, std::size_t source) {
  const std::size_t n = g.num_nodes();
  Targets t;
  const auto from_source = bfs_distances(g, source);  // also rejects a bad source
  t.sssp.assign(from_source.begin(), from_source.end());
  t.eccentricity.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    const auto dist = bfs_distances(g, v);
    if (std::find(dist.begin(), dist.end(), -1) != dist.end()) {
      throw GraphError("compute_targets: graph is disconnected");
    }
    t.eccentricity[v] = *std::max_element(dist.begin(), dist.end());
  }
  t.diameter = *std::max_element(t.eccentricity.begin(), t.eccentricity.end());
  return t;
}

}  // namespace tango::graphs
