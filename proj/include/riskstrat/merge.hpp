// Phase two: recursive graph decomposition. Leaves whose pairwise test
// cannot tell them apart (p > alpha_prime) are connected, components are
// merged greedily by descending p-value, and the process repeats on the
// merged vertices until the target floor or an edgeless state is reached.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "riskstrat/partition.hpp"
#include "riskstrat/stats.hpp"

namespace riskstrat {

struct MergeConfig {
  double alpha_prime = 0.025;
  TestMethod method = TestMethod::logrank();
  std::size_t n_leaf = 1;  // floor on the final region count

  void validate() const;
};

// A tree leaf (or merged vertex) with its attached records.
struct LeafGroup {
  Region region;
  std::vector<int> records;
};

struct SimilarityGraph {
  PValueMatrix pvalues;                 // symmetric, diagonal 1
  std::vector<std::vector<int>> edges;  // adjacency, edge iff p > alpha_prime
  double alpha_prime = 0.0;

  std::size_t size() const { return edges.size(); }
  bool has_edge() const;
};

// Pairwise tests over the leaves' attached data (degenerate pairs count as
// p = 1, hence merge-eligible edges).
SimilarityGraph build_similarity_graph(const Dataset& data,
                                       std::span<const LeafGroup> leaves,
                                       const MergeConfig& config);

// Maximal connected components via BFS; singletons included; components
// ordered by smallest member, members ascending.
std::vector<std::vector<int>> connected_components(const SimilarityGraph& g);

// One Step-4 pass over a component: every vertex joins the merged vertex of
// its highest-p neighbour (ties: lowest vertex id). Returns the groups of
// input vertex ids, in creation order.
std::vector<std::vector<int>> merge_pass(std::span<const int> component,
                                         const SimilarityGraph& graph);

// Full recursion with the n_leaf floor; when a pass would drop the vertex
// count below n_leaf, merge events execute in descending edge-p order and
// stop exactly at n_leaf. Output leaves carry cube unions, provenance and
// concatenated records.
std::vector<LeafGroup> merge_leaves(const Dataset& data,
                                    std::vector<LeafGroup> leaves,
                                    const MergeConfig& config);

// Assembles the merged leaves into a fitted Partition (regions ordered by
// ascending risk at t_star).
Partition to_partition(const Dataset& data, std::vector<LeafGroup> leaves,
                       double t_star);

}  // namespace riskstrat
