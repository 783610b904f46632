#include "riskstrat/survival.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "riskstrat/errors.hpp"

namespace riskstrat {

CovariateSchema::CovariateSchema(std::vector<DimensionSpec> dims)
    : dims_(std::move(dims)) {
  std::set<std::string> names;
  for (const auto& d : dims_) {
    if (d.levels.size() < 2)
      throw DataError("schema dimension '" + d.name + "' needs >= 2 levels");
    std::set<std::string> labels(d.levels.begin(), d.levels.end());
    if (labels.size() != d.levels.size())
      throw DataError("schema dimension '" + d.name + "' has duplicate levels");
    if (!names.insert(d.name).second)
      throw DataError("duplicate schema dimension name '" + d.name + "'");
  }
}

std::size_t CovariateSchema::combination_count(std::size_t cap) const {
  std::size_t total = 1;
  for (const auto& d : dims_) {
    total *= d.levels.size();
    if (total > cap) return cap + 1;
  }
  return total;
}

void Dataset::validate() const {
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.covariates.size() != schema.size())
      throw DataError("record " + std::to_string(r) +
                      ": covariate count does not match schema");
    for (std::size_t j = 0; j < schema.size(); ++j) {
      if (rec.covariates[j] < 0 || rec.covariates[j] >= schema.level_count(j))
        throw DataError("record " + std::to_string(r) + ": level index " +
                        std::to_string(rec.covariates[j]) +
                        " out of range for dimension '" + schema.dim(j).name +
                        "'");
    }
    if (!(rec.time >= 0.0) || !std::isfinite(rec.time))
      throw DataError("record " + std::to_string(r) +
                      ": time must be finite and >= 0");
  }
}

std::vector<Obs> to_obs(std::span<const SurvivalRecord> records) {
  std::vector<Obs> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r.time, r.event});
  return out;
}

std::vector<Obs> gather_obs(const Dataset& data, std::span<const int> idx) {
  std::vector<Obs> out;
  out.reserve(idx.size());
  for (int i : idx)
    out.push_back({data.records[i].time, data.records[i].event});
  return out;
}

SurvivalCurve km_estimate(std::span<const Obs> obs) {
  if (obs.empty()) throw DataError("empty group");

  std::vector<Obs> sorted(obs.begin(), obs.end());
  // Events before censorings at tied times: the censored subject stays in
  // the at-risk set for that event time.
  std::sort(sorted.begin(), sorted.end(), [](const Obs& a, const Obs& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.event > b.event;
  });

  SurvivalCurve curve;
  curve.n_total = static_cast<long long>(sorted.size());
  curve.max_observed_time = sorted.back().time;

  double survival = 1.0;
  long long at_risk = curve.n_total;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double t = sorted[i].time;
    long long deaths = 0, losses = 0;
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].time == t) {
      if (sorted[j].event)
        ++deaths;
      else
        ++losses;
      ++j;
    }
    if (deaths > 0) {
      survival *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
      curve.steps.push_back({t, survival, at_risk, deaths});
    }
    at_risk -= deaths + losses;
    i = j;
  }
  return curve;
}

SurvivalCurve km_estimate(std::span<const SurvivalRecord> records) {
  const auto obs = to_obs(records);
  return km_estimate(std::span<const Obs>(obs));
}

SurvivalValue survival_at_checked(const SurvivalCurve& curve, double t) {
  if (t < 0.0) throw DataError("survival_at: t must be >= 0");
  const bool extrapolated = t > curve.max_observed_time;
  // Last step with time <= t.
  double value = 1.0;
  auto it = std::upper_bound(
      curve.steps.begin(), curve.steps.end(), t,
      [](double x, const CurveStep& s) { return x < s.time; });
  if (it != curve.steps.begin()) value = std::prev(it)->survival;
  return {value, extrapolated};
}

double survival_at(const SurvivalCurve& curve, double t) {
  return survival_at_checked(curve, t).value;
}

double risk_at(const SurvivalCurve& curve, double t_star) {
  return 1.0 - survival_at(curve, t_star);
}

double distance_at_time(const SurvivalCurve& a, const SurvivalCurve& b,
                        double t_star) {
  return std::abs(survival_at(a, t_star) - survival_at(b, t_star));
}

double distance_integrated(const SurvivalCurve& a, const SurvivalCurve& b,
                           double horizon) {
  if (!(horizon > 0.0)) throw DataError("distance_integrated: horizon must be > 0");

  // Merged grid of step times inside (0, horizon); both curves are constant
  // between consecutive grid points, so the integral is a rectangle sum.
  std::vector<double> grid;
  grid.reserve(a.steps.size() + b.steps.size() + 2);
  grid.push_back(0.0);
  for (const auto& s : a.steps)
    if (s.time < horizon && s.time > 0.0) grid.push_back(s.time);
  for (const auto& s : b.steps)
    if (s.time < horizon && s.time > 0.0) grid.push_back(s.time);
  grid.push_back(horizon);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  double total = 0.0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double width = grid[k + 1] - grid[k];
    const double gap =
        std::abs(survival_at(a, grid[k]) - survival_at(b, grid[k]));
    total += width * gap;
  }
  return total;
}

}  // namespace riskstrat
