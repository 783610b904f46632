// CSV ingestion with a declared covariate schema, tertile discretization of
// continuous columns, and dataset export.
#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "riskstrat/survival.hpp"

namespace riskstrat {

// Tertile cutpoints at the 33rd/66th percentiles (linear-interpolation
// percentile definition). Values at or below cut_low map to Low, values at
// or below cut_high to Medium, the rest to High (boundary values take the
// lower band).
struct TertileCuts {
  double cut_low = 0.0;
  double cut_high = 0.0;

  int band(double value) const {
    if (value <= cut_low) return 0;
    if (value <= cut_high) return 1;
    return 2;
  }
};

// Throws DataError on an empty or constant column.
TertileCuts tertile_cuts(const std::vector<double>& column);

struct IngestSpec {
  // Covariate columns in CSV order; empty = every column except time/event.
  std::vector<std::string> covariates;
  // Columns to parse as continuous reals and discretize into tertiles.
  std::set<std::string> tertile_columns;
};

struct IngestResult {
  Dataset data;
  std::map<std::string, TertileCuts> cuts;  // per tertile column
};

// Header row required; `time` must parse as a finite non-negative decimal,
// `event` as 0/1. Categorical levels are the distinct trimmed tokens,
// ordered numerically when every token parses as a number and
// lexicographically otherwise. Errors carry row/column locations.
IngestResult ingest_csv(std::istream& in, const IngestSpec& spec);
IngestResult ingest_csv_file(const std::string& path, const IngestSpec& spec);

// Re-encode a row of raw tokens against an existing schema (prediction path).
// Tertile columns parse as reals and go through `cuts`; categorical tokens
// must match a schema level. Throws DataError naming the offending value.
std::vector<int> encode_row(const CovariateSchema& schema,
                            const std::map<std::string, TertileCuts>& cuts,
                            const std::vector<std::string>& tokens,
                            const std::vector<std::string>& names);

void write_csv(std::ostream& out, const Dataset& data);
void write_csv_file(const std::string& path, const Dataset& data);

// Raw table access for the prediction path (schema comes from the model).
struct RawCsv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
RawCsv read_raw_csv(std::istream& in);
RawCsv read_raw_csv_file(const std::string& path);

}  // namespace riskstrat
