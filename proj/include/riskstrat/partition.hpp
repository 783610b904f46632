// Regions (unions of category hypercubes), partitions of the covariate
// space, membership, validation and merging.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskstrat/survival.hpp"

namespace riskstrat {

struct LevelRange {
  int lo = 0;
  int hi = 0;  // inclusive
  bool operator==(const LevelRange&) const = default;
};

// Axis-aligned box of level indices, one contiguous range per dimension.
struct Hypercube {
  std::vector<LevelRange> bounds;

  bool contains(std::span<const int> x) const;
  bool operator==(const Hypercube&) const = default;
};

Hypercube full_space(const CovariateSchema& schema);
bool cubes_overlap(const Hypercube& a, const Hypercube& b);

struct RegionFit {
  SurvivalCurve curve;
  double risk = 0.0;  // 1 - S(t_star)
  double t_star = 0.0;
  std::size_t n = 0;
};

// A union of pairwise-disjoint hypercubes; the unit of stratification.
struct Region {
  int id = 0;
  std::vector<Hypercube> cubes;   // non-empty
  std::vector<int> provenance;    // tree-leaf ids merged into this region
  std::optional<RegionFit> fit;
};

bool region_contains(const Region& region, const CovariateSchema& schema,
                     std::span<const int> x);
bool regions_overlap(const Region& a, const Region& b);

// Concatenates the cube lists (no geometric canonicalization) and unions
// provenance. Throws DataError on overlapping inputs.
Region merge_regions(const Region& a, const Region& b);

struct Partition {
  CovariateSchema schema;
  std::vector<Region> regions;
};

// Index into partition.regions of the unique region containing x.
// Throws DataError if x violates the schema or no region contains it.
std::size_t assign(const Partition& partition, std::span<const int> x);

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;
};

// Checks disjointness and cover, exhaustively when the combination count is
// <= 1e6 and by deterministic random sampling of 1e6 combinations otherwise.
ValidationReport validate_partition(const Partition& partition);

// Fits each region's pooled KM curve and risk at t_star from its record
// groups, then orders regions by ascending risk (ids renumbered to match).
// `groups` is parallel to partition.regions.
void fit_partition(Partition& partition, const Dataset& data,
                   std::vector<std::vector<int>>& groups, double t_star);

}  // namespace riskstrat
