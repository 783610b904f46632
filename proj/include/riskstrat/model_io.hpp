// Versioned, human-diffable model file (JSON) with the fitted curves
// embedded so prediction needs no training data, plus the Graphviz export
// where merged leaves share a colour.
#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "riskstrat/csv.hpp"
#include "riskstrat/pipeline.hpp"

namespace riskstrat {

struct Model {
  int format_version = 1;
  RunConfig config;  // echo of the fitting configuration
  std::map<std::string, TertileCuts> cuts;
  Tree tree;  // record indices stripped on save
  std::vector<int> leaf_to_region;
  Partition partition;  // fitted regions, ascending risk
};

struct Prediction {
  int region_id = 0;
  double risk = 0.0;
  double survival = 0.0;
};

Prediction predict(const Model& model, std::span<const int> covariates);

void save_model(std::ostream& out, const Model& model);
void save_model_file(const std::string& path, const Model& model);
Model load_model(std::istream& in);
Model load_model_file(const std::string& path);

// Graphviz digraph of the tree; leaves are filled with one colour per final
// region so merged leaves are visually grouped.
std::string export_dot(const Model& model);

// Region table printed by the fit command.
std::string format_region_table(const Partition& partition);

}  // namespace riskstrat
