// Data model for censored survival data, the Kaplan-Meier estimator and the
// two distances between survival curves.
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace riskstrat {

// One dimension of the covariate space: an ordered categorical axis.
struct DimensionSpec {
  std::string name;
  std::vector<std::string> levels;  // ordered; >= 2, labels unique
};

class CovariateSchema {
 public:
  CovariateSchema() = default;
  // Throws DataError if a dimension has < 2 levels, duplicate level labels,
  // or duplicate dimension names.
  explicit CovariateSchema(std::vector<DimensionSpec> dims);

  std::size_t size() const { return dims_.size(); }
  const DimensionSpec& dim(std::size_t i) const { return dims_[i]; }
  const std::vector<DimensionSpec>& dims() const { return dims_; }
  int level_count(std::size_t i) const {
    return static_cast<int>(dims_[i].levels.size());
  }
  // Total number of covariate combinations, saturating at `cap`.
  std::size_t combination_count(std::size_t cap) const;

  bool operator==(const CovariateSchema&) const = default;

 private:
  std::vector<DimensionSpec> dims_;
};

struct SurvivalRecord {
  std::vector<int> covariates;  // level index per schema dimension
  double time = 0.0;            // observed follow-up, >= 0, finite
  bool event = false;           // true = failure observed, false = censored
};

struct Dataset {
  CovariateSchema schema;
  std::vector<SurvivalRecord> records;

  // Throws DataError on any record violating the schema or time domain.
  void validate() const;
};

// Minimal observation for the estimators and tests; covariates dropped.
struct Obs {
  double time;
  bool event;
};

std::vector<Obs> to_obs(std::span<const SurvivalRecord> records);
std::vector<Obs> gather_obs(const Dataset& data, std::span<const int> idx);

struct CurveStep {
  double time;
  double survival;       // running product after the events at `time`
  long long at_risk;     // subjects at risk just before `time`
  long long events;      // failures at `time`
};

// Right-continuous step estimate of S(t). Steps exist only at distinct event
// times; survival is 1 before the first step. max_observed_time covers
// censoring times too, so evaluation beyond follow-up can be flagged.
struct SurvivalCurve {
  std::vector<CurveStep> steps;
  long long n_total = 0;
  double max_observed_time = 0.0;
};

// Product-limit estimator. Ties between an event and a censoring at the same
// time keep the censored subject in the at-risk set for that event time.
// Throws DataError("empty group") on empty input.
SurvivalCurve km_estimate(std::span<const Obs> obs);
SurvivalCurve km_estimate(std::span<const SurvivalRecord> records);

struct SurvivalValue {
  double value;
  bool extrapolated;  // t lay beyond the last observed (event or censor) time
};

// Step lookup: value at the largest step time <= t, 1 before the first step.
SurvivalValue survival_at_checked(const SurvivalCurve& curve, double t);
double survival_at(const SurvivalCurve& curve, double t);
double risk_at(const SurvivalCurve& curve, double t_star);

// |S_a(t*) - S_b(t*)|
double distance_at_time(const SurvivalCurve& a, const SurvivalCurve& b,
                        double t_star);

// Exact integral of |S_a - S_b| over [0, horizon], piecewise over the merged
// step grid. Throws DataError on horizon <= 0.
double distance_integrated(const SurvivalCurve& a, const SurvivalCurve& b,
                           double horizon);

}  // namespace riskstrat
