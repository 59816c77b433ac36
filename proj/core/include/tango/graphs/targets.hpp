#pragma once

#include <vector>

#include "tango/graphs/graph.hpp"

namespace tango::graphs {

struct Targets {
  double diameter = 0.0;
  std::vector<double> sssp;          // hop distance from the source
  std::vector<double> eccentricity;  // max hop distance from each node
};

/// Hop distances from `source` by breadth-first search; -1 marks unreachable nodes.
std::vector<int> bfs_distances(const Graph& g, std::size_t source);

/// All three property targets, one BFS per node. Throws GraphError when g is
/// disconnected or source is out of range.
Targets compute_targets(const Graph& g, std::size_t source);

}  // namespace tango::graphs
