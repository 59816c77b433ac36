#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "tango/graphs/graph.hpp"
#include "tango/rng.hpp"

namespace tango::graphs {

enum class Family {
  ErdosRenyi,
  BarabasiAlbert,
  Caveman,
  Tree,
  Grid,
  Line,
  Star,
  Caterpillar,
  Lobster,
};

inline constexpr std::array<Family, 9> kAllFamilies{
    Family::ErdosRenyi, Family::BarabasiAlbert, Family::Caveman,     Family::Tree,    Family::Grid,
    Family::Line,       Family::Star,           Family::Caterpillar, Family::Lobster,
};

std::string_view family_name(Family f) noexcept;
std::optional<Family> parse_family(std::string_view name) noexcept;

/// Connected graph of the requested family with nodes 0..n-1.
///
/// Layouts are canonical: line is the path 0-1-...-(n-1), star is centered at
/// 0, grid fills a ceil(sqrt(n))-wide lattice row by row. Random families
/// (Erdos-Renyi, Barabasi-Albert, tree, caterpillar, lobster) consume `rng`.
/// Throws GraphError when the family cannot be built with n nodes.
Graph generate_family(Family family, std::size_t n, Rng& rng);

/// Two k-cliques joined by the bridge (k-1, k). Requires k >= 3.
Graph barbell_graph(std::size_t clique_size);

/// Random sparse connected graph for scaling runs: a random recursive tree
/// plus uniformly drawn extra edges until `num_edges` edges exist.
Graph random_sparse_graph(std::size_t n, std::size_t num_edges, Rng& rng);

}  // namespace tango::graphs
