// Phase one: greedy recursive partitioning. Each node is split along the
// axis-aligned threshold whose two children differ most significantly, or
// kept whole when no candidate reaches alpha_prime.
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "riskstrat/partition.hpp"
#include "riskstrat/stats.hpp"
#include "riskstrat/survival.hpp"

namespace riskstrat {

struct GrowConfig {
  double alpha = 0.05;
  // Defaults to alpha / d at grow time when unset.
  std::optional<double> alpha_prime;
  TestMethod method = TestMethod::logrank();
  // 0 = auto: max(25, ceil(0.005 * N)).
  std::size_t min_node = 0;
  // Optional empirical-distance gate between children (off by default).
  std::optional<double> delta;
  std::optional<int> max_depth;
  // Truncation horizon for the integrated distance used by the delta gate
  // under log-rank; defaults to the node's maximum observed time.
  std::optional<double> horizon;

  double resolved_alpha_prime(std::size_t d) const;
  std::size_t resolved_min_node(std::size_t n) const;
  void validate(std::size_t d, std::size_t n) const;
};

struct TreeNode {
  Hypercube region;
  std::vector<int> record_idx;
  int split_dim = -1;        // -1 while the node is a leaf
  int split_threshold = -1;  // left child takes levels [lo..threshold]
  double split_pvalue = 1.0;
  int left = -1;
  int right = -1;
  int leaf_id = -1;          // depth-first, left-first numbering
  bool is_leaf() const { return split_dim < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::vector<int> leaf_node_index;  // arena index per leaf id

  std::size_t leaf_count() const { return leaf_node_index.size(); }
  // One single-cube region per leaf, id = leaf id, provenance = {leaf id}.
  std::vector<Region> leaf_regions() const;
  std::vector<std::vector<int>> leaf_record_groups() const;
};

struct SplitCandidate {
  int dim = -1;
  int threshold = -1;  // split into [lo..threshold] | [threshold+1..hi]
};

// All axis-aligned threshold splits of `bounds` where both children would
// hold >= min_node of the given records. May be empty.
std::vector<SplitCandidate> enumerate_splits(const Dataset& data,
                                             std::span<const int> record_idx,
                                             const Hypercube& bounds,
                                             std::size_t min_node);

struct SplitEval {
  SplitCandidate cand;
  double p_value = 1.0;
  double child_distance = 0.0;  // only filled when the delta gate is on
  bool eligible = false;
};

// Evaluates every candidate (OpenMP-parallel over candidates; result is
// byte-identical to the serial reference since selection happens after).
std::vector<SplitEval> evaluate_splits(const Dataset& data,
                                       std::span<const int> record_idx,
                                       const Hypercube& bounds,
                                       const GrowConfig& config,
                                       double alpha_prime,
                                       std::size_t min_node);
std::vector<SplitEval> evaluate_splits_serial(const Dataset& data,
                                              std::span<const int> record_idx,
                                              const Hypercube& bounds,
                                              const GrowConfig& config,
                                              double alpha_prime,
                                              std::size_t min_node);

struct ChosenSplit {
  SplitCandidate cand;
  double p_value = 1.0;
};

// The most significant eligible candidate; ties broken by lowest dimension
// index then lowest threshold. nullopt when the node is a theta fixpoint.
std::optional<ChosenSplit> choose_split(std::span<const SplitEval> evals);

// Convenience wrapper matching the two-or-one-region split contract.
std::optional<ChosenSplit> theta_split(const Dataset& data,
                                       std::span<const int> record_idx,
                                       const Hypercube& bounds,
                                       const GrowConfig& config);

// Grows the full tree; leaves are returned in depth-first left-first order
// and always form a valid partition of the covariate space.
// Throws DataError on an empty dataset.
Tree grow_tree(const Dataset& data, const GrowConfig& config);

}  // namespace riskstrat
