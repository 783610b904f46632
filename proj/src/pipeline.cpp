#include "riskstrat/pipeline.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include "riskstrat/errors.hpp"

namespace riskstrat {

TestMethod resolve_method(const Dataset& data, const RunConfig& config) {
  const auto followed_up = [&](double t_star) {
    for (const auto& rec : data.records)
      if (!rec.event && rec.time < t_star) return false;
    return true;
  };
  switch (config.method) {
    case MethodChoice::LogRank:
      return TestMethod::logrank();
    case MethodChoice::UTest:
      if (!followed_up(config.t_star))
        throw DataError(
            "u-test requires every record's follow-up to reach t_star; "
            "data contains censoring before t_star");
      return TestMethod::utest(config.t_star);
    case MethodChoice::Auto:
      return followed_up(config.t_star) ? TestMethod::utest(config.t_star)
                                        : TestMethod::logrank();
  }
  return TestMethod::logrank();
}

FitResult fit_risk_stratify(const Dataset& data, const RunConfig& config) {
  if (data.records.empty()) throw DataError("fit: empty dataset");

  FitResult result;
  result.method = resolve_method(data, config);

  GrowConfig grow;
  grow.alpha = config.alpha;
  grow.alpha_prime = config.alpha_prime;
  grow.method = result.method;
  grow.min_node = config.min_node;
  grow.delta = config.delta;
  grow.horizon = config.horizon;
  result.tree = grow_tree(data, grow);

  const double alpha_prime = grow.resolved_alpha_prime(data.schema.size());
  MergeConfig merge;
  merge.alpha_prime = alpha_prime;
  merge.method = result.method;
  merge.n_leaf = config.n_leaf;

  std::vector<LeafGroup> leaves;
  {
    auto regions = result.tree.leaf_regions();
    auto groups = result.tree.leaf_record_groups();
    leaves.reserve(regions.size());
    for (std::size_t i = 0; i < regions.size(); ++i)
      leaves.push_back({std::move(regions[i]), std::move(groups[i])});
  }
  auto merged = merge_leaves(data, std::move(leaves), merge);
  result.partition = to_partition(data, std::move(merged), config.t_star);

  result.leaf_to_region.assign(result.tree.leaf_count(), -1);
  for (const auto& region : result.partition.regions)
    for (int leaf_id : region.provenance)
      result.leaf_to_region[leaf_id] = region.id;
  return result;
}

void set_thread_cap(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

}  // namespace riskstrat
