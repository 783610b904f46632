// Out-of-sample FDR estimation with Bonferroni-adjusted pairwise tests,
// repeated-split cross-validation, and the quantile bucket partitioner for
// externally supplied risk scores.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskstrat/partition.hpp"
#include "riskstrat/stats.hpp"

namespace riskstrat {

struct PairVerdict {
  int region_a = 0;
  int region_b = 0;
  double p_value = 1.0;
  bool declared_true = false;  // rejected at the Bonferroni-adjusted level
  bool untestable = false;     // a side had no holdout records
};

struct FdrReport {
  std::size_t comparisons = 0;    // |P| (|P|-1) / 2
  std::size_t declared_false = 0; // W
  double fdr = 0.0;               // W / comparisons, 0 when comparisons = 0
  std::vector<PairVerdict> per_pair;
};

// Assigns holdout records to regions and runs every region pair at
// significance alpha / comparisons. Failures to reject count as false
// positives, as do pairs with an empty holdout side (a claimed separation
// that cannot be exhibited out of sample).
FdrReport estimate_fdr(const Partition& partition, const Dataset& holdout,
                       double alpha, const TestMethod& method);

// Same protocol over pre-assigned groups (used by the score-bucket path).
FdrReport fdr_from_groups(std::span<const std::vector<Obs>> groups,
                          double alpha, const TestMethod& method);

struct CvSummary {
  std::size_t runs_requested = 0;
  std::size_t runs_failed = 0;
  std::vector<double> run_fdrs;          // successful runs, by run index
  std::vector<std::size_t> run_regions;  // region counts per successful run
  double mean_fdr = 0.0;
  double ci95_halfwidth = 0.0;
  bool ci_defined = false;  // false when fewer than 2 successful runs
  double mean_region_count = 0.0;
};

using FitProcedure = std::function<Partition(const Dataset&)>;

// Seeded 50/50 splits (odd N: the fit half gets the smaller part); fit on
// half A, estimate_fdr on half B. Runs execute in parallel with per-run
// seeds derived from `seed`; the summary is identical to the serial result.
// A run whose fit throws FitError/DataError is recorded as failed.
CvSummary cross_validate(const Dataset& data, const FitProcedure& fit,
                         double alpha, const TestMethod& method,
                         std::size_t runs, std::uint64_t seed);

// Records sorted by (score, record index) and cut into k contiguous buckets
// whose sizes differ by at most one; earlier (lower-score) buckets take the
// extra records. Throws UsageError on k < 1, empty scores, or k > N.
std::vector<std::vector<int>> quantile_partition(
    std::span<const std::pair<int, double>> scores, std::size_t k);

// Cross-validation for external risk scores: per run, bucket boundaries come
// from the fit half's quantiles and the holdout is assigned by those
// boundaries, then scored with fdr_from_groups.
CvSummary cross_validate_scores(const Dataset& data,
                                std::span<const double> scores, std::size_t k,
                                double alpha, const TestMethod& method,
                                std::size_t runs, std::uint64_t seed);

// Report rendering shared by the CLI and the acceptance suite.
std::string format_fdr_report(const FdrReport& report);
std::string format_cv_summary(const CvSummary& summary);
std::string machine_row(const CvSummary& summary);

}  // namespace riskstrat
