// End-to-end fit: Phase-1 tree growth followed by Phase-2 leaf merging,
// under one run configuration mirroring the CLI flags.
#pragma once

#include <cstdint>
#include <optional>

#include "riskstrat/merge.hpp"
#include "riskstrat/tree.hpp"

namespace riskstrat {

enum class MethodChoice { Auto, LogRank, UTest };

struct RunConfig {
  double t_star = 5.0;
  double alpha = 0.05;
  std::optional<double> alpha_prime;  // default: alpha / d
  std::size_t n_leaf = 10;
  std::size_t min_node = 0;  // 0 = auto: max(25, ceil(0.005 N))
  MethodChoice method = MethodChoice::Auto;
  std::optional<double> delta;
  std::optional<double> horizon;
  std::uint64_t seed = 0;
  std::size_t runs = 10;
};

// Auto picks the U-test when every record's follow-up reaches t_star (no
// censoring before t_star), else the log-rank test. An explicit UTest on
// data censored before t_star is a DataError.
TestMethod resolve_method(const Dataset& data, const RunConfig& config);

struct FitResult {
  Tree tree;
  Partition partition;            // fitted, regions ascending by risk
  std::vector<int> leaf_to_region;  // final region id per tree leaf id
  TestMethod method;
};

FitResult fit_risk_stratify(const Dataset& data, const RunConfig& config);

// Caps the OpenMP worker count (never changes results). 0 = leave as is.
void set_thread_cap(int threads);

}  // namespace riskstrat
