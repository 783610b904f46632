#include "riskstrat/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "riskstrat/errors.hpp"
#include "riskstrat/rng.hpp"

namespace riskstrat {

FdrReport fdr_from_groups(std::span<const std::vector<Obs>> groups,
                          double alpha, const TestMethod& method) {
  method.validate();
  FdrReport report;
  const std::size_t k = groups.size();
  if (k < 2) return report;  // nothing to compare

  report.comparisons = k * (k - 1) / 2;
  const double adjusted = alpha / static_cast<double>(report.comparisons);

  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      PairVerdict verdict;
      verdict.region_a = static_cast<int>(i);
      verdict.region_b = static_cast<int>(j);
      if (groups[i].empty() || groups[j].empty()) {
        verdict.untestable = true;
        verdict.p_value = 1.0;
      } else {
        verdict.p_value = compare_groups(groups[i], groups[j], method).p_value;
        verdict.declared_true = verdict.p_value <= adjusted;
      }
      if (!verdict.declared_true) ++report.declared_false;
      report.per_pair.push_back(verdict);
    }
  }
  report.fdr = static_cast<double>(report.declared_false) /
               static_cast<double>(report.comparisons);
  return report;
}

FdrReport estimate_fdr(const Partition& partition, const Dataset& holdout,
                       double alpha, const TestMethod& method) {
  std::vector<std::vector<Obs>> groups(partition.regions.size());
  for (const auto& rec : holdout.records) {
    const std::size_t r = assign(partition, rec.covariates);
    groups[r].push_back({rec.time, rec.event});
  }
  auto report = fdr_from_groups(groups, alpha, method);
  // Map pair indices to region ids for the report.
  for (auto& pair : report.per_pair) {
    pair.region_a = partition.regions[pair.region_a].id;
    pair.region_b = partition.regions[pair.region_b].id;
  }
  return report;
}

namespace {

struct RunOutcome {
  bool failed = true;
  double fdr = 0.0;
  std::size_t regions = 0;
};

void summarize(CvSummary& summary) {
  const auto& fdrs = summary.run_fdrs;
  if (fdrs.empty()) return;
  summary.mean_fdr =
      std::accumulate(fdrs.begin(), fdrs.end(), 0.0) / fdrs.size();
  double regions = 0.0;
  for (auto r : summary.run_regions) regions += static_cast<double>(r);
  summary.mean_region_count = regions / summary.run_regions.size();
  if (fdrs.size() >= 2) {
    double ss = 0.0;
    for (double f : fdrs) ss += (f - summary.mean_fdr) * (f - summary.mean_fdr);
    const double sd = std::sqrt(ss / (fdrs.size() - 1));
    const double tq =
        student_t_quantile(0.975, static_cast<double>(fdrs.size() - 1));
    summary.ci95_halfwidth = tq * sd / std::sqrt(static_cast<double>(fdrs.size()));
    summary.ci_defined = true;
  }
}

template <typename RunFn>
CvSummary run_cv(std::size_t runs, RunFn&& run_one) {
  if (runs < 1) throw UsageError("cross_validate: runs must be >= 1");
  std::vector<RunOutcome> outcomes(runs);

  const long long total = static_cast<long long>(runs);
#pragma omp parallel for schedule(dynamic)
  for (long long r = 0; r < total; ++r)
    outcomes[static_cast<std::size_t>(r)] = run_one(static_cast<std::size_t>(r));

  CvSummary summary;
  summary.runs_requested = runs;
  for (const auto& out : outcomes) {
    if (out.failed) {
      ++summary.runs_failed;
      continue;
    }
    summary.run_fdrs.push_back(out.fdr);
    summary.run_regions.push_back(out.regions);
  }
  summarize(summary);
  return summary;
}

// Deterministic 50/50 split of record indices for one run.
std::pair<std::vector<int>, std::vector<int>> split_half(
    std::size_t n, std::uint64_t master_seed, std::size_t run) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(master_seed, run));
  rng.shuffle(idx);
  const std::size_t half = n / 2;
  std::vector<int> fit_idx(idx.begin(), idx.begin() + half);
  std::vector<int> holdout_idx(idx.begin() + half, idx.end());
  return {std::move(fit_idx), std::move(holdout_idx)};
}

Dataset subset(const Dataset& data, std::span<const int> idx) {
  Dataset out;
  out.schema = data.schema;
  out.records.reserve(idx.size());
  for (int i : idx) out.records.push_back(data.records[i]);
  return out;
}

}  // namespace

CvSummary cross_validate(const Dataset& data, const FitProcedure& fit,
                         double alpha, const TestMethod& method,
                         std::size_t runs, std::uint64_t seed) {
  if (data.records.size() < 2)
    throw UsageError("cross_validate: need at least 2 records");
  method.validate();

  return run_cv(runs, [&](std::size_t run) {
    RunOutcome out;
    const auto [fit_idx, holdout_idx] =
        split_half(data.records.size(), seed, run);
    try {
      const Dataset train = subset(data, fit_idx);
      const Dataset holdout = subset(data, holdout_idx);
      const Partition partition = fit(train);
      const auto report = estimate_fdr(partition, holdout, alpha, method);
      out.failed = false;
      out.fdr = report.fdr;
      out.regions = partition.regions.size();
    } catch (const FitError&) {
    } catch (const DataError&) {
    }
    return out;
  });
}

std::vector<std::vector<int>> quantile_partition(
    std::span<const std::pair<int, double>> scores, std::size_t k) {
  if (k < 1) throw UsageError("quantile_partition: k must be >= 1");
  if (scores.empty()) throw UsageError("quantile_partition: empty scores");
  if (k > scores.size())
    throw UsageError("quantile_partition: k exceeds the number of records");

  std::vector<std::pair<int, double>> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second < b.second;
              return a.first < b.first;
            });

  const std::size_t n = sorted.size();
  const std::size_t base = n / k;
  const std::size_t extra = n % k;  // earliest buckets take the extra

  std::vector<std::vector<int>> buckets(k);
  std::size_t pos = 0;
  for (std::size_t b = 0; b < k; ++b) {
    const std::size_t size = base + (b < extra ? 1 : 0);
    buckets[b].reserve(size);
    for (std::size_t i = 0; i < size; ++i)
      buckets[b].push_back(sorted[pos++].first);
  }
  return buckets;
}

CvSummary cross_validate_scores(const Dataset& data,
                                std::span<const double> scores, std::size_t k,
                                double alpha, const TestMethod& method,
                                std::size_t runs, std::uint64_t seed) {
  if (scores.size() != data.records.size())
    throw DataError("scores row count does not match the dataset");
  if (data.records.size() < 2)
    throw UsageError("cross_validate_scores: need at least 2 records");
  method.validate();
  if (k < 1) throw UsageError("cross_validate_scores: k must be >= 1");

  return run_cv(runs, [&](std::size_t run) {
    RunOutcome out;
    const auto [fit_idx, holdout_idx] =
        split_half(data.records.size(), seed, run);
    if (fit_idx.size() < k) return out;  // cannot form k buckets

    std::vector<std::pair<int, double>> train_scores;
    train_scores.reserve(fit_idx.size());
    for (int i : fit_idx) train_scores.emplace_back(i, scores[i]);
    const auto buckets = quantile_partition(train_scores, k);

    // Bucket upper cutpoints = max fit-half score per bucket; the holdout
    // record goes to the first bucket whose cutpoint covers its score.
    std::vector<double> cuts(k);
    for (std::size_t b = 0; b < k; ++b) {
      double hi = -std::numeric_limits<double>::infinity();
      for (int i : buckets[b]) hi = std::max(hi, scores[i]);
      cuts[b] = hi;
    }
    std::vector<std::vector<Obs>> groups(k);
    for (int i : holdout_idx) {
      std::size_t b = 0;
      while (b + 1 < k && scores[i] > cuts[b]) ++b;
      groups[b].push_back({data.records[i].time, data.records[i].event});
    }
    const auto report = fdr_from_groups(groups, alpha, method);
    out.failed = false;
    out.fdr = report.fdr;
    out.regions = k;
    return out;
  });
}

std::string format_fdr_report(const FdrReport& report) {
  std::ostringstream os;
  os << "pairwise comparisons: " << report.comparisons
     << "  declared false: " << report.declared_false << "  FDR: ";
  os.precision(4);
  os << std::fixed << report.fdr << "\n";
  for (const auto& pair : report.per_pair) {
    os << "  regions " << pair.region_a << " vs " << pair.region_b << ": p=";
    os.precision(6);
    os << pair.p_value
       << (pair.untestable ? "  [untestable -> false positive]"
                           : (pair.declared_true ? "  [true positive]"
                                                 : "  [false positive]"))
       << "\n";
  }
  return os.str();
}

std::string format_cv_summary(const CvSummary& summary) {
  std::ostringstream os;
  os.precision(4);
  os << std::fixed;
  os << "runs: " << summary.runs_requested
     << " (failed: " << summary.runs_failed << ")\n";
  os << "mean FDR: " << summary.mean_fdr;
  if (summary.ci_defined)
    os << "  95% CI half-width: " << summary.ci95_halfwidth;
  else
    os << "  95% CI half-width: undefined (fewer than 2 runs)";
  os << "\nmean region count: " << summary.mean_region_count << "\n";
  return os.str();
}

std::string machine_row(const CvSummary& summary) {
  std::ostringstream os;
  os.precision(10);
  os << "RESULT\tmean_fdr=" << summary.mean_fdr
     << "\tci95=" << (summary.ci_defined ? summary.ci95_halfwidth : 0.0)
     << "\tci_defined=" << (summary.ci_defined ? 1 : 0)
     << "\tmean_regions=" << summary.mean_region_count
     << "\truns=" << summary.runs_requested
     << "\tfailed=" << summary.runs_failed << "\tfdrs=";
  for (std::size_t i = 0; i < summary.run_fdrs.size(); ++i)
    os << (i ? "," : "") << summary.run_fdrs[i];
  return os.str();
}

}  // namespace riskstrat
