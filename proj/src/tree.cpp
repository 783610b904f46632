#include "riskstrat/tree.hpp"

#include <algorithm>
#include <cmath>

#include "riskstrat/errors.hpp"

namespace riskstrat {

double GrowConfig::resolved_alpha_prime(std::size_t d) const {
  if (alpha_prime) return *alpha_prime;
  return alpha / static_cast<double>(d);
}

std::size_t GrowConfig::resolved_min_node(std::size_t n) const {
  if (min_node > 0) return min_node;
  const auto scaled =
      static_cast<std::size_t>(std::ceil(0.005 * static_cast<double>(n)));
  return std::max<std::size_t>(25, scaled);
}

void GrowConfig::validate(std::size_t d, std::size_t n) const {
  method.validate();
  const double ap = resolved_alpha_prime(d);
  if (!(ap > 0.0) || !(ap <= alpha) || !(alpha < 1.0))
    throw UsageError("grow config requires 0 < alpha_prime <= alpha < 1");
  if (resolved_min_node(n) < 1) throw UsageError("min_node must be >= 1");
  if (delta && *delta < 0.0) throw UsageError("delta must be >= 0");
  if (horizon && !(*horizon > 0.0)) throw UsageError("horizon must be > 0");
}

std::vector<Region> Tree::leaf_regions() const {
  std::vector<Region> regions;
  regions.reserve(leaf_node_index.size());
  for (int node_idx : leaf_node_index) {
    const auto& node = nodes[node_idx];
    Region r;
    r.id = node.leaf_id;
    r.cubes = {node.region};
    r.provenance = {node.leaf_id};
    regions.push_back(std::move(r));
  }
  return regions;
}

std::vector<std::vector<int>> Tree::leaf_record_groups() const {
  std::vector<std::vector<int>> groups;
  groups.reserve(leaf_node_index.size());
  for (int node_idx : leaf_node_index)
    groups.push_back(nodes[node_idx].record_idx);
  return groups;
}

std::vector<SplitCandidate> enumerate_splits(const Dataset& data,
                                             std::span<const int> record_idx,
                                             const Hypercube& bounds,
                                             std::size_t min_node) {
  std::vector<SplitCandidate> out;
  for (std::size_t dim = 0; dim < bounds.bounds.size(); ++dim) {
    const auto [lo, hi] = bounds.bounds[dim];
    if (lo >= hi) continue;
    // Count records per level once per dimension.
    std::vector<std::size_t> level_counts(hi - lo + 1, 0);
    for (int idx : record_idx) {
      const int level = data.records[idx].covariates[dim];
      ++level_counts[level - lo];
    }
    std::size_t left = 0;
    for (int t = lo; t < hi; ++t) {
      left += level_counts[t - lo];
      const std::size_t right = record_idx.size() - left;
      if (left >= min_node && right >= min_node)
        out.push_back({static_cast<int>(dim), t});
    }
  }
  return out;
}

namespace {

std::vector<SplitEval> evaluate_impl(const Dataset& data,
                                     std::span<const int> record_idx,
                                     const Hypercube& bounds,
                                     const GrowConfig& config,
                                     double alpha_prime, std::size_t min_node,
                                     bool parallel) {
  config.method.validate();
  const auto candidates = enumerate_splits(data, record_idx, bounds, min_node);
  std::vector<SplitEval> evals(candidates.size());

  const bool gate = config.delta.has_value();
  const long long total = static_cast<long long>(candidates.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long long k = 0; k < total; ++k) {
    const auto cand = candidates[static_cast<std::size_t>(k)];
    std::vector<Obs> left, right;
    left.reserve(record_idx.size());
    right.reserve(record_idx.size());
    for (int idx : record_idx) {
      const auto& rec = data.records[idx];
      if (rec.covariates[cand.dim] <= cand.threshold)
        left.push_back({rec.time, rec.event});
      else
        right.push_back({rec.time, rec.event});
    }
    SplitEval eval;
    eval.cand = cand;
    const auto res = compare_groups(left, right, config.method);
    eval.p_value = res.p_value;
    eval.eligible = !res.degenerate && res.p_value <= alpha_prime;
    if (gate && eval.eligible) {
      const auto curve_l = km_estimate(std::span<const Obs>(left));
      const auto curve_r = km_estimate(std::span<const Obs>(right));
      if (config.method.kind == TestKind::UTest) {
        eval.child_distance =
            distance_at_time(curve_l, curve_r, *config.method.t_star);
      } else {
        const double horizon = config.horizon.value_or(std::max(
            curve_l.max_observed_time, curve_r.max_observed_time));
        eval.child_distance =
            horizon > 0.0 ? distance_integrated(curve_l, curve_r, horizon)
                          : 0.0;
      }
      eval.eligible = eval.child_distance >= *config.delta;
    }
    evals[static_cast<std::size_t>(k)] = std::move(eval);
  }
  return evals;
}

}  // namespace

std::vector<SplitEval> evaluate_splits(const Dataset& data,
                                       std::span<const int> record_idx,
                                       const Hypercube& bounds,
                                       const GrowConfig& config,
                                       double alpha_prime,
                                       std::size_t min_node) {
  return evaluate_impl(data, record_idx, bounds, config, alpha_prime, min_node,
                       true);
}

std::vector<SplitEval> evaluate_splits_serial(const Dataset& data,
                                              std::span<const int> record_idx,
                                              const Hypercube& bounds,
                                              const GrowConfig& config,
                                              double alpha_prime,
                                              std::size_t min_node) {
  return evaluate_impl(data, record_idx, bounds, config, alpha_prime, min_node,
                       false);
}

std::optional<ChosenSplit> choose_split(std::span<const SplitEval> evals) {
  // Candidates are generated in (dim, threshold) order, so keeping the first
  // strict minimum gives the documented tie-break for free.
  std::optional<ChosenSplit> best;
  for (const auto& e : evals) {
    if (!e.eligible) continue;
    if (!best || e.p_value < best->p_value) best = ChosenSplit{e.cand, e.p_value};
  }
  return best;
}

std::optional<ChosenSplit> theta_split(const Dataset& data,
                                       std::span<const int> record_idx,
                                       const Hypercube& bounds,
                                       const GrowConfig& config) {
  const double ap = config.resolved_alpha_prime(data.schema.size());
  const std::size_t mn = config.resolved_min_node(data.records.size());
  const auto evals =
      evaluate_splits(data, record_idx, bounds, config, ap, mn);
  return choose_split(evals);
}

namespace {

void grow_recursive(const Dataset& data, const GrowConfig& config,
                    double alpha_prime, std::size_t min_node, Tree& tree,
                    int node_idx, int depth) {
  const bool depth_capped = config.max_depth && depth >= *config.max_depth;
  std::optional<ChosenSplit> split;
  if (!depth_capped &&
      tree.nodes[node_idx].record_idx.size() >= 2 * min_node) {
    const auto evals = evaluate_splits(data, tree.nodes[node_idx].record_idx,
                                       tree.nodes[node_idx].region, config,
                                       alpha_prime, min_node);
    split = choose_split(evals);
  }
  if (!split) {
    tree.nodes[node_idx].leaf_id = static_cast<int>(tree.leaf_node_index.size());
    tree.leaf_node_index.push_back(node_idx);
    return;
  }

  const auto [dim, threshold] = split->cand;
  Hypercube left_cube = tree.nodes[node_idx].region;
  Hypercube right_cube = tree.nodes[node_idx].region;
  left_cube.bounds[dim].hi = threshold;
  right_cube.bounds[dim].lo = threshold + 1;

  std::vector<int> left_idx, right_idx;
  for (int idx : tree.nodes[node_idx].record_idx) {
    if (data.records[idx].covariates[dim] <= threshold)
      left_idx.push_back(idx);
    else
      right_idx.push_back(idx);
  }

  tree.nodes[node_idx].split_dim = dim;
  tree.nodes[node_idx].split_threshold = threshold;
  tree.nodes[node_idx].split_pvalue = split->p_value;

  const int left = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back({std::move(left_cube), std::move(left_idx)});
  tree.nodes[node_idx].left = left;
  grow_recursive(data, config, alpha_prime, min_node, tree, left, depth + 1);

  const int right = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back({std::move(right_cube), std::move(right_idx)});
  tree.nodes[node_idx].right = right;
  grow_recursive(data, config, alpha_prime, min_node, tree, right, depth + 1);
}

}  // namespace

Tree grow_tree(const Dataset& data, const GrowConfig& config) {
  if (data.records.empty()) throw DataError("grow_tree: empty dataset");
  config.validate(data.schema.size(), data.records.size());
  const double ap = config.resolved_alpha_prime(data.schema.size());
  const std::size_t mn = config.resolved_min_node(data.records.size());

  Tree tree;
  std::vector<int> all(data.records.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  tree.nodes.push_back({full_space(data.schema), std::move(all)});
  grow_recursive(data, config, ap, mn, tree, 0, 0);
  return tree;
}

}  // namespace riskstrat
