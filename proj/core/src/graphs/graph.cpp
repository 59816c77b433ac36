#include "tango/graphs/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <string>

namespace tango::graphs {

Graph::Graph(std::size_t num_nodes, std::vector<Edge> edges) : n_(num_nodes) {
  std::set<std::pair<std::int32_t, std::int32_t>> seen;
  std::vector<std::size_t> deg(n_, 0);
  for (auto& e : edges) {
    if (e.u < 0 || e.v < 0 || static_cast<std::size_t>(e.u) >= n_ ||
        static_cast<std::size_t>(e.v) >= n_) {
      throw GraphError("edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                       ") out of range for " + std::to_string(n_) + " nodes");
    }
    if (e.u == e.v) throw GraphError("self-loop at node " + std::to_string(e.u));
    if (e.u > e.v) std::swap(e.u, e.v);
    if (!seen.emplace(e.u, e.v).second) {
      throw GraphError("duplicate edge (" + std::to_string(e.u) + "," + std::to_string(e.v) + ")");
    }
    ++deg[static_cast<std::size_t>(e.u)];
    ++deg[static_cast<std::size_t>(e.v)];
  }
  edges_ = std::move(edges);

  offsets_.assign(n_ + 1, 0);
  for (std::size_t v = 0; v < n_; ++v) offsets_[v + 1] = offsets_[v] + deg[v];
  neighbors_.assign(offsets_[n_], 0);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (const auto& e : edges_) {
    neighbors_[fill[static_cast<std::size_t>(e.u)]++] = e.v;
    neighbors_[fill[static_cast<std::size_t>(e.v)]++] = e.u;
  }
  for (std::size_t v = 0; v < n_; ++v) {
    std::sort(neighbors_.begin() + static_cast<std::ptrdiff_t>(offsets_[v]),
              neighbors_.begin() + static_cast<std::ptrdiff_t>(offsets_[v + 1]));
  }

  std::vector<std::int32_t> src, dst;
  src.reserve(neighbors_.size());
  dst.reserve(neighbors_.size());
  for (std::size_t v = 0; v < n_; ++v) {
    for (const auto u : neighbors(v)) {
      src.push_back(u);
      dst.push_back(static_cast<std::int32_t>(v));
    }
  }
  arc_src_ = ad::make_index(std::move(src));
  arc_dst_ = ad::make_index(std::move(dst));
}

std::size_t Graph::max_degree() const noexcept {
  std::size_t m = 0;
  for (std::size_t v = 0; v < n_; ++v) m = std::max(m, degree(v));
  return m;
}

bool Graph::connected() const {
  if (n_ == 0) return true;
  std::vector<char> seen(n_, 0);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = 1;
  std::size_t count = 1;
  while (!q.empty()) {
    const auto v = q.front();
    q.pop();
    for (const auto u : neighbors(v)) {
      if (!seen[static_cast<std::size_t>(u)]) {
        seen[static_cast<std::size_t>(u)] = 1;
        ++count;
        q.push(static_cast<std::size_t>(u));
      }
    }
  }
  return count == n_;
}

Graph Graph::permuted(std::span<const std::int32_t> perm) const {
  if (perm.size() != n_) throw GraphError("permutation size mismatch");
  std::vector<Edge> out;
  out.reserve(edges_.size());
  for (const auto& e : edges_) {
    out.push_back({perm[static_cast<std::size_t>(e.u)], perm[static_cast<std::size_t>(e.v)]});
  }
  return Graph(n_, std::move(out));
}

ad::Tensor laplacian_apply(const Graph& g, const ad::Tensor& h) {
  if (h.rows() != g.num_nodes()) {
    throw GraphError("laplacian_apply: " + std::to_string(h.rows()) + " rows for " +
                     std::to_string(g.num_nodes()) + " nodes");
  }
  const std::size_t d = h.cols();
  // Summing differences keeps constant inputs exactly in the kernel.
  ad::Tensor out(h.rows(), d);
  for (std::size_t v = 0; v < g.num_nodes(); ++v) {
    for (const auto u : g.neighbors(v)) {
      for (std::size_t c = 0; c < d; ++c) out(v, c) += h(v, c) - h(static_cast<std::size_t>(u), c);
    }
  }
  return out;
}

double dirichlet_energy(const Graph& g, const ad::Tensor& h) {
  if (h.rows() != g.num_nodes()) throw GraphError("dirichlet_energy: row count mismatch");
  double s = 0.0;
  for (const auto& e : g.edges()) {
    for (std::size_t c = 0; c < h.cols(); ++c) {
      const double diff = h(static_cast<std::size_t>(e.u), c) - h(static_cast<std::size_t>(e.v), c);
      s += diff * diff;
    }
  }
  return 0.5 * s;
}

double laplacian_lambda_max(const Graph& g, int iterations) {
  const std::size_t n = g.num_nodes();
  if (n == 0 || g.num_edges() == 0) return 0.0;
  ad::Tensor x(n, 1);
  for (std::size_t v = 0; v < n; ++v) {
    x[v] = ((v % 2 == 0) ? 1.0 : -1.0) + 0.01 * static_cast<double>(v + 1) / static_cast<double>(n);
  }
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double norm = ad::frobenius_norm(x);
    if (norm == 0.0) break;
    x = (1.0 / norm) * x;
    const ad::Tensor lx = laplacian_apply(g, x);
    lambda = ad::frobenius_dot(x, lx);
    x = lx;
  }
  return lambda;
}

}  // namespace tango::graphs
