#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "tango/autodiff/tape.hpp"

namespace tango::graphs {

class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Edge {
  std::int32_t u = 0;
  std::int32_t v = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Immutable undirected simple graph with compressed neighbor lists.
///
/// Edges are stored with u < v in insertion order. The directed arc arrays
/// (each undirected edge in both directions) drive sparse gather/scatter
/// message passing on a tape.
class Graph {
 public:
  Graph() = default;
  /// Throws GraphError on self-loops, duplicate edges or out-of-range endpoints.
  Graph(std::size_t num_nodes, std::vector<Edge> edges);

  std::size_t num_nodes() const noexcept { return n_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  std::span<const Edge> edges() const noexcept { return edges_; }

  std::span<const std::int32_t> neighbors(std::size_t v) const {
    return {neighbors_.data() + offsets_[v], neighbors_.data() + offsets_[v + 1]};
  }
  std::size_t degree(std::size_t v) const { return offsets_[v + 1] - offsets_[v]; }
  std::size_t max_degree() const noexcept;

  /// Arc sources/targets: arc e carries a message from arc_src[e] to arc_dst[e].
  const ad::Index& arc_src() const noexcept { return arc_src_; }
  const ad::Index& arc_dst() const noexcept { return arc_dst_; }
  std::size_t num_arcs() const noexcept { return 2 * edges_.size(); }

  bool connected() const;

  /// Relabels node v as perm[v].
  Graph permuted(std::span<const std::int32_t> perm) const;

  friend bool operator==(const Graph& a, const Graph& b) { return a.n_ == b.n_ && a.edges_ == b.edges_; }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::int32_t> neighbors_;
  ad::Index arc_src_;
  ad::Index arc_dst_;
};

/// (D - A) H for the combinatorial Laplacian; H must have num_nodes() rows.
ad::Tensor laplacian_apply(const Graph& g, const ad::Tensor& h);

/// 1/2 * sum over edges of ||h_u - h_v||^2.
double dirichlet_energy(const Graph& g, const ad::Tensor& h);

/// Largest Laplacian eigenvalue by power iteration from a fixed start vector.
double laplacian_lambda_max(const Graph& g, int iterations = 200);

}  // namespace tango::graphs
