#include "riskstrat/partition.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "riskstrat/errors.hpp"
#include "riskstrat/rng.hpp"

namespace riskstrat {

bool Hypercube::contains(std::span<const int> x) const {
  if (x.size() != bounds.size()) return false;
  for (std::size_t j = 0; j < bounds.size(); ++j)
    if (x[j] < bounds[j].lo || x[j] > bounds[j].hi) return false;
  return true;
}

Hypercube full_space(const CovariateSchema& schema) {
  Hypercube cube;
  cube.bounds.reserve(schema.size());
  for (std::size_t j = 0; j < schema.size(); ++j)
    cube.bounds.push_back({0, schema.level_count(j) - 1});
  return cube;
}

bool cubes_overlap(const Hypercube& a, const Hypercube& b) {
  for (std::size_t j = 0; j < a.bounds.size(); ++j)
    if (a.bounds[j].hi < b.bounds[j].lo || b.bounds[j].hi < a.bounds[j].lo)
      return false;
  return true;
}

namespace {

void check_schema_point(const CovariateSchema& schema, std::span<const int> x) {
  if (x.size() != schema.size())
    throw DataError("covariate vector does not match schema dimension count");
  for (std::size_t j = 0; j < schema.size(); ++j)
    if (x[j] < 0 || x[j] >= schema.level_count(j))
      throw DataError("covariate level out of range for dimension '" +
                      schema.dim(j).name + "'");
}

std::string point_to_string(std::span<const int> x) {
  std::ostringstream os;
  os << "(";
  for (std::size_t j = 0; j < x.size(); ++j)
    os << (j ? "," : "") << x[j];
  os << ")";
  return os.str();
}

}  // namespace

bool region_contains(const Region& region, const CovariateSchema& schema,
                     std::span<const int> x) {
  check_schema_point(schema, x);
  for (const auto& cube : region.cubes)
    if (cube.contains(x)) return true;
  return false;
}

bool regions_overlap(const Region& a, const Region& b) {
  for (const auto& ca : a.cubes)
    for (const auto& cb : b.cubes)
      if (cubes_overlap(ca, cb)) return true;
  return false;
}

Region merge_regions(const Region& a, const Region& b) {
  if (regions_overlap(a, b))
    throw DataError("merge_regions: regions overlap");
  Region out;
  out.id = std::min(a.id, b.id);
  out.cubes = a.cubes;
  out.cubes.insert(out.cubes.end(), b.cubes.begin(), b.cubes.end());
  out.provenance = a.provenance;
  out.provenance.insert(out.provenance.end(), b.provenance.begin(),
                        b.provenance.end());
  std::sort(out.provenance.begin(), out.provenance.end());
  return out;
}

std::size_t assign(const Partition& partition, std::span<const int> x) {
  check_schema_point(partition.schema, x);
  for (std::size_t r = 0; r < partition.regions.size(); ++r) {
    for (const auto& cube : partition.regions[r].cubes)
      if (cube.contains(x)) return r;
  }
  throw DataError("assign: no region contains " + point_to_string(x) +
                  " (invalid partition)");
}

namespace {

int membership_count(const Partition& p, std::span<const int> x) {
  int hits = 0;
  for (const auto& region : p.regions)
    for (const auto& cube : region.cubes)
      if (cube.contains(x)) {
        ++hits;
        break;  // cubes within a region are disjoint; one hit per region
      }
  return hits;
}

}  // namespace

ValidationReport validate_partition(const Partition& partition) {
  constexpr std::size_t kExhaustiveCap = 1000000;
  ValidationReport report;
  const auto& schema = partition.schema;
  const std::size_t d = schema.size();

  const auto check_point = [&](std::span<const int> x) {
    const int hits = membership_count(partition, x);
    if (hits == 0)
      report.violations.push_back("uncovered " + point_to_string(x));
    else if (hits > 1)
      report.violations.push_back("overlap at " + point_to_string(x));
  };

  // Region-internal disjointness (cube lists must not self-overlap).
  for (const auto& region : partition.regions) {
    for (std::size_t i = 0; i < region.cubes.size(); ++i)
      for (std::size_t j = i + 1; j < region.cubes.size(); ++j)
        if (cubes_overlap(region.cubes[i], region.cubes[j]))
          report.violations.push_back(
              "region " + std::to_string(region.id) + " has overlapping cubes");
    if (region.cubes.empty())
      report.violations.push_back("region " + std::to_string(region.id) +
                                  " has no cubes");
  }

  const std::size_t total = schema.combination_count(kExhaustiveCap);
  std::vector<int> x(d, 0);
  if (total <= kExhaustiveCap) {
    // Odometer enumeration of every combination.
    bool done = d == 0;
    while (!done) {
      check_point(x);
      std::size_t j = 0;
      while (j < d) {
        if (++x[j] < schema.level_count(j)) break;
        x[j] = 0;
        ++j;
      }
      done = j == d;
      if (report.violations.size() > 100) break;  // enough to diagnose
    }
  } else {
    Rng rng(0);  // fixed seed: sampled validation is deterministic
    for (std::size_t it = 0; it < kExhaustiveCap; ++it) {
      for (std::size_t j = 0; j < d; ++j)
        x[j] = static_cast<int>(rng.below(schema.level_count(j)));
      check_point(x);
      if (report.violations.size() > 100) break;
    }
  }

  report.ok = report.violations.empty();
  return report;
}

void fit_partition(Partition& partition, const Dataset& data,
                   std::vector<std::vector<int>>& groups, double t_star) {
  if (groups.size() != partition.regions.size())
    throw UsageError("fit_partition: groups do not match regions");

  for (std::size_t r = 0; r < partition.regions.size(); ++r) {
    const auto obs = gather_obs(data, groups[r]);
    RegionFit fit;
    fit.curve = km_estimate(std::span<const Obs>(obs));
    fit.risk = risk_at(fit.curve, t_star);
    fit.t_star = t_star;
    fit.n = obs.size();
    partition.regions[r].fit = fit;
  }

  // Ascending risk for reporting determinism; tie-break on previous id.
  std::vector<std::size_t> order(partition.regions.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ra = partition.regions[a].fit->risk;
    const double rb = partition.regions[b].fit->risk;
    if (ra != rb) return ra < rb;
    return partition.regions[a].id < partition.regions[b].id;
  });

  std::vector<Region> regions;
  std::vector<std::vector<int>> reordered;
  regions.reserve(order.size());
  reordered.reserve(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    regions.push_back(std::move(partition.regions[order[k]]));
    regions.back().id = static_cast<int>(k);
    reordered.push_back(std::move(groups[order[k]]));
  }
  partition.regions = std::move(regions);
  groups = std::move(reordered);
}

}  // namespace riskstrat
