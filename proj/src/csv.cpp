#include "riskstrat/csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "riskstrat/errors.hpp"

namespace riskstrat {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::optional<double> parse_double(const std::string& token) {
  if (token.empty()) return std::nullopt;
  std::size_t consumed = 0;
  try {
    const double v = std::stod(token, &consumed);
    if (consumed != token.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (...) {
    return std::nullopt;
  }
}

// Linear-interpolation percentile on a sorted column, p in [0,1].
double percentile(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = p * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

const std::vector<std::string> kTertileLabels = {"Low", "Medium", "High"};

bool is_tertile_label_set(const std::set<std::string>& tokens) {
  for (const auto& t : tokens)
    if (std::find(kTertileLabels.begin(), kTertileLabels.end(), t) ==
        kTertileLabels.end())
      return false;
  return true;
}

}  // namespace

TertileCuts tertile_cuts(const std::vector<double>& column) {
  if (column.empty()) throw DataError("cannot tertile an empty column");
  std::vector<double> sorted(column);
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back())
    throw DataError("cannot tertile a constant column");
  TertileCuts cuts;
  cuts.cut_low = percentile(sorted, 0.33);
  cuts.cut_high = percentile(sorted, 0.66);
  return cuts;
}

RawCsv read_raw_csv(std::istream& in) {
  RawCsv raw;
  std::string line;
  if (!std::getline(in, line)) throw DataError("missing header row");
  raw.header = split_line(line);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto fields = split_line(line);
    if (fields.size() != raw.header.size())
      throw DataError("row " + std::to_string(row) + ": expected " +
                      std::to_string(raw.header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    raw.rows.push_back(std::move(fields));
  }
  return raw;
}

RawCsv read_raw_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_raw_csv(in);
}

IngestResult ingest_csv(std::istream& in, const IngestSpec& spec) {
  const RawCsv raw = read_raw_csv(in);

  const auto column_of = [&](const std::string& name) {
    for (std::size_t c = 0; c < raw.header.size(); ++c)
      if (raw.header[c] == name) return static_cast<long>(c);
    return -1L;
  };

  const long time_col = column_of("time");
  const long event_col = column_of("event");
  if (time_col < 0) throw DataError("missing required column 'time'");
  if (event_col < 0) throw DataError("missing required column 'event'");

  std::vector<std::string> covariates = spec.covariates;
  if (covariates.empty()) {
    for (const auto& name : raw.header)
      if (name != "time" && name != "event") covariates.push_back(name);
  }
  if (covariates.empty()) throw DataError("no covariate columns declared");

  std::vector<long> cov_cols;
  for (const auto& name : covariates) {
    const long c = column_of(name);
    if (c < 0) throw DataError("unknown column '" + name + "'");
    cov_cols.push_back(c);
  }
  for (const auto& name : spec.tertile_columns)
    if (std::find(covariates.begin(), covariates.end(), name) ==
        covariates.end())
      throw DataError("tertile column '" + name + "' is not a covariate");

  // First pass: per-column token/value collection with row diagnostics.
  const std::size_t n_rows = raw.rows.size();
  std::vector<std::set<std::string>> tokens(covariates.size());
  std::vector<std::vector<double>> reals(covariates.size());
  std::vector<double> times(n_rows);
  std::vector<bool> events(n_rows);

  for (std::size_t r = 0; r < n_rows; ++r) {
    const auto& fields = raw.rows[r];
    const std::string row_tag = "row " + std::to_string(r + 1);
    for (std::size_t k = 0; k < covariates.size(); ++k) {
      const std::string& tok = fields[cov_cols[k]];
      if (tok.empty())
        throw DataError(row_tag + ": missing value in column '" +
                        covariates[k] + "'");
      if (spec.tertile_columns.count(covariates[k])) {
        const auto v = parse_double(tok);
        if (!v)
          throw DataError(row_tag + ": column '" + covariates[k] +
                          "' must be numeric for tertile discretization, got '" +
                          tok + "'");
        reals[k].push_back(*v);
      } else {
        tokens[k].insert(tok);
      }
    }
    const auto t = parse_double(fields[time_col]);
    if (!t || *t < 0.0)
      throw DataError(row_tag + ": time must be a non-negative decimal, got '" +
                      fields[time_col] + "'");
    times[r] = *t;
    const std::string& ev = fields[event_col];
    if (ev == "0")
      events[r] = false;
    else if (ev == "1")
      events[r] = true;
    else
      throw DataError(row_tag + ": event must be 0 or 1, got '" + ev + "'");
  }
  if (n_rows == 0) throw DataError("no data rows");

  // Schema: tertile columns become ordered Low/Medium/High; categorical
  // columns order their distinct tokens numerically when every token parses
  // (ties are ambiguous), with Low/Medium/High recognised as already ordered
  // so written datasets round-trip.
  IngestResult result;
  std::vector<DimensionSpec> dims(covariates.size());
  std::vector<std::map<std::string, int>> level_of(covariates.size());
  for (std::size_t k = 0; k < covariates.size(); ++k) {
    dims[k].name = covariates[k];
    if (spec.tertile_columns.count(covariates[k])) {
      dims[k].levels = kTertileLabels;
      result.cuts[covariates[k]] = tertile_cuts(reals[k]);
      continue;
    }
    if (tokens[k].size() < 2)
      throw DataError("column '" + covariates[k] +
                      "' has fewer than 2 distinct values");
    std::vector<std::string> levels;
    if (is_tertile_label_set(tokens[k])) {
      for (const auto& lab : kTertileLabels)
        if (tokens[k].count(lab)) levels.push_back(lab);
    } else {
      bool all_numeric = true;
      std::vector<std::pair<double, std::string>> numeric;
      for (const auto& tok : tokens[k]) {
        const auto v = parse_double(tok);
        if (!v) {
          all_numeric = false;
          break;
        }
        numeric.emplace_back(*v, tok);
      }
      if (all_numeric) {
        std::sort(numeric.begin(), numeric.end());
        for (std::size_t i = 0; i + 1 < numeric.size(); ++i)
          if (numeric[i].first == numeric[i + 1].first)
            throw DataError("column '" + covariates[k] +
                            "' has distinct tokens with equal numeric value");
        for (const auto& [v, tok] : numeric) levels.push_back(tok);
      } else {
        levels.assign(tokens[k].begin(), tokens[k].end());  // lexicographic
      }
    }
    dims[k].levels = std::move(levels);
  }
  for (std::size_t k = 0; k < covariates.size(); ++k)
    for (std::size_t l = 0; l < dims[k].levels.size(); ++l)
      level_of[k][dims[k].levels[l]] = static_cast<int>(l);

  result.data.schema = CovariateSchema(std::move(dims));
  result.data.records.reserve(n_rows);
  std::vector<std::size_t> real_pos(covariates.size(), 0);
  for (std::size_t r = 0; r < n_rows; ++r) {
    SurvivalRecord rec;
    rec.covariates.resize(covariates.size());
    for (std::size_t k = 0; k < covariates.size(); ++k) {
      if (spec.tertile_columns.count(covariates[k])) {
        rec.covariates[k] =
            result.cuts[covariates[k]].band(reals[k][real_pos[k]++]);
      } else {
        rec.covariates[k] = level_of[k].at(raw.rows[r][cov_cols[k]]);
      }
    }
    rec.time = times[r];
    rec.event = events[r];
    result.data.records.push_back(std::move(rec));
  }
  return result;
}

IngestResult ingest_csv_file(const std::string& path, const IngestSpec& spec) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return ingest_csv(in, spec);
}

std::vector<int> encode_row(const CovariateSchema& schema,
                            const std::map<std::string, TertileCuts>& cuts,
                            const std::vector<std::string>& tokens,
                            const std::vector<std::string>& names) {
  if (tokens.size() != schema.size() || names.size() != schema.size())
    throw DataError("encode_row: token count does not match schema");
  std::vector<int> out(schema.size());
  for (std::size_t k = 0; k < schema.size(); ++k) {
    const auto it = cuts.find(names[k]);
    if (it != cuts.end()) {
      const auto v = parse_double(tokens[k]);
      if (!v)
        throw DataError("column '" + names[k] + "': expected a number, got '" +
                        tokens[k] + "'");
      out[k] = it->second.band(*v);
      continue;
    }
    const auto& levels = schema.dim(k).levels;
    const auto pos = std::find(levels.begin(), levels.end(), tokens[k]);
    if (pos == levels.end())
      throw DataError("column '" + names[k] + "': level '" + tokens[k] +
                      "' not present in the model schema");
    out[k] = static_cast<int>(pos - levels.begin());
  }
  return out;
}

void write_csv(std::ostream& out, const Dataset& data) {
  for (std::size_t j = 0; j < data.schema.size(); ++j)
    out << data.schema.dim(j).name << ",";
  out << "time,event\n";
  out.precision(17);
  for (const auto& rec : data.records) {
    for (std::size_t j = 0; j < data.schema.size(); ++j)
      out << data.schema.dim(j).levels[rec.covariates[j]] << ",";
    out << rec.time << "," << (rec.event ? 1 : 0) << "\n";
  }
}

void write_csv_file(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_csv(out, data);
}

}  // namespace riskstrat
