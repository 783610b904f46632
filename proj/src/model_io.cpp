#include "riskstrat/model_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "riskstrat/errors.hpp"

namespace riskstrat {

using nlohmann::json;

namespace {

json bounds_to_json(const Hypercube& cube) {
  json arr = json::array();
  for (const auto& range : cube.bounds) arr.push_back({range.lo, range.hi});
  return arr;
}

Hypercube bounds_from_json(const json& arr) {
  Hypercube cube;
  for (const auto& range : arr)
    cube.bounds.push_back({range.at(0).get<int>(), range.at(1).get<int>()});
  return cube;
}

json curve_to_json(const SurvivalCurve& curve) {
  json steps = json::array();
  for (const auto& s : curve.steps)
    steps.push_back({s.time, s.survival, s.at_risk, s.events});
  return {{"n_total", curve.n_total},
          {"max_observed_time", curve.max_observed_time},
          {"steps", steps}};
}

SurvivalCurve curve_from_json(const json& j) {
  SurvivalCurve curve;
  curve.n_total = j.at("n_total").get<long long>();
  curve.max_observed_time = j.at("max_observed_time").get<double>();
  for (const auto& s : j.at("steps"))
    curve.steps.push_back({s.at(0).get<double>(), s.at(1).get<double>(),
                           s.at(2).get<long long>(), s.at(3).get<long long>()});
  return curve;
}

std::string method_name(MethodChoice m) {
  switch (m) {
    case MethodChoice::Auto: return "auto";
    case MethodChoice::LogRank: return "logrank";
    case MethodChoice::UTest: return "utest";
  }
  return "auto";
}

MethodChoice method_from_name(const std::string& name) {
  if (name == "logrank") return MethodChoice::LogRank;
  if (name == "utest") return MethodChoice::UTest;
  if (name == "auto") return MethodChoice::Auto;
  throw DataError("model file: unknown method '" + name + "'");
}

std::string cube_list_to_string(const Partition& partition,
                                const Region& region) {
  std::ostringstream os;
  for (std::size_t c = 0; c < region.cubes.size(); ++c) {
    if (c) os << " u ";
    os << "{";
    const auto& cube = region.cubes[c];
    for (std::size_t j = 0; j < cube.bounds.size(); ++j) {
      if (j) os << " x ";
      const auto& dim = partition.schema.dim(j);
      const auto& [lo, hi] = cube.bounds[j];
      os << dim.name << ":";
      if (lo == hi)
        os << dim.levels[lo];
      else
        os << dim.levels[lo] << ".." << dim.levels[hi];
    }
    os << "}";
  }
  return os.str();
}

}  // namespace

Prediction predict(const Model& model, std::span<const int> covariates) {
  const std::size_t r = assign(model.partition, covariates);
  const auto& region = model.partition.regions[r];
  if (!region.fit) throw DataError("model region lacks a fitted curve");
  Prediction out;
  out.region_id = region.id;
  out.risk = region.fit->risk;
  out.survival = survival_at(region.fit->curve, region.fit->t_star);
  return out;
}

void save_model(std::ostream& out, const Model& model) {
  json j;
  j["format_version"] = model.format_version;

  json config;
  config["t_star"] = model.config.t_star;
  config["alpha"] = model.config.alpha;
  if (model.config.alpha_prime) config["alpha_prime"] = *model.config.alpha_prime;
  config["n_leaf"] = model.config.n_leaf;
  config["min_node"] = model.config.min_node;
  config["method"] = method_name(model.config.method);
  if (model.config.delta) config["delta"] = *model.config.delta;
  if (model.config.horizon) config["horizon"] = *model.config.horizon;
  config["seed"] = model.config.seed;
  j["config"] = config;

  json schema = json::array();
  for (const auto& dim : model.partition.schema.dims())
    schema.push_back({{"name", dim.name}, {"levels", dim.levels}});
  j["schema"] = schema;

  json cuts;
  for (const auto& [name, c] : model.cuts)
    cuts[name] = {{"cut_low", c.cut_low}, {"cut_high", c.cut_high}};
  j["tertile_cuts"] = cuts;

  json nodes = json::array();
  for (const auto& node : model.tree.nodes) {
    json n;
    n["bounds"] = bounds_to_json(node.region);
    n["leaf_id"] = node.leaf_id;
    if (!node.is_leaf()) {
      n["split_dim"] = node.split_dim;
      n["split_threshold"] = node.split_threshold;
      n["split_pvalue"] = node.split_pvalue;
      n["left"] = node.left;
      n["right"] = node.right;
    }
    nodes.push_back(n);
  }
  j["tree"] = {{"nodes", nodes},
               {"leaf_node_index", model.tree.leaf_node_index}};
  j["leaf_to_region"] = model.leaf_to_region;

  json regions = json::array();
  for (const auto& region : model.partition.regions) {
    json r;
    r["id"] = region.id;
    json cubes = json::array();
    for (const auto& cube : region.cubes) cubes.push_back(bounds_to_json(cube));
    r["cubes"] = cubes;
    r["provenance"] = region.provenance;
    if (region.fit) {
      r["n"] = region.fit->n;
      r["risk"] = region.fit->risk;
      r["t_star"] = region.fit->t_star;
      r["curve"] = curve_to_json(region.fit->curve);
    }
    regions.push_back(r);
  }
  j["regions"] = regions;

  out << j.dump(2) << "\n";
}

void save_model_file(const std::string& path, const Model& model) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  save_model(out, model);
}

Model load_model(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    Model model;
    model.format_version = j.at("format_version").get<int>();
    if (model.format_version != 1)
      throw DataError("unsupported model format version " +
                      std::to_string(model.format_version));

    const auto& config = j.at("config");
    model.config.t_star = config.at("t_star").get<double>();
    model.config.alpha = config.at("alpha").get<double>();
    if (config.contains("alpha_prime"))
      model.config.alpha_prime = config.at("alpha_prime").get<double>();
    model.config.n_leaf = config.at("n_leaf").get<std::size_t>();
    model.config.min_node = config.at("min_node").get<std::size_t>();
    model.config.method = method_from_name(config.at("method").get<std::string>());
    if (config.contains("delta"))
      model.config.delta = config.at("delta").get<double>();
    if (config.contains("horizon"))
      model.config.horizon = config.at("horizon").get<double>();
    model.config.seed = config.at("seed").get<std::uint64_t>();

    std::vector<DimensionSpec> dims;
    for (const auto& d : j.at("schema"))
      dims.push_back({d.at("name").get<std::string>(),
                      d.at("levels").get<std::vector<std::string>>()});
    model.partition.schema = CovariateSchema(std::move(dims));

    for (const auto& [name, c] : j.at("tertile_cuts").items())
      model.cuts[name] = {c.at("cut_low").get<double>(),
                          c.at("cut_high").get<double>()};

    for (const auto& n : j.at("tree").at("nodes")) {
      TreeNode node;
      node.region = bounds_from_json(n.at("bounds"));
      node.leaf_id = n.at("leaf_id").get<int>();
      if (n.contains("split_dim")) {
        node.split_dim = n.at("split_dim").get<int>();
        node.split_threshold = n.at("split_threshold").get<int>();
        node.split_pvalue = n.at("split_pvalue").get<double>();
        node.left = n.at("left").get<int>();
        node.right = n.at("right").get<int>();
      }
      model.tree.nodes.push_back(std::move(node));
    }
    model.tree.leaf_node_index =
        j.at("tree").at("leaf_node_index").get<std::vector<int>>();
    model.leaf_to_region = j.at("leaf_to_region").get<std::vector<int>>();

    for (const auto& r : j.at("regions")) {
      Region region;
      region.id = r.at("id").get<int>();
      for (const auto& cube : r.at("cubes"))
        region.cubes.push_back(bounds_from_json(cube));
      region.provenance = r.at("provenance").get<std::vector<int>>();
      if (r.contains("curve")) {
        RegionFit fit;
        fit.n = r.at("n").get<std::size_t>();
        fit.risk = r.at("risk").get<double>();
        fit.t_star = r.at("t_star").get<double>();
        fit.curve = curve_from_json(r.at("curve"));
        region.fit = fit;
      }
      model.partition.regions.push_back(std::move(region));
    }
    return model;
  } catch (const json::exception& e) {
    throw DataError(std::string("model file is missing fields: ") + e.what());
  }
}

Model load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return load_model(in);
}

std::string export_dot(const Model& model) {
  // One colour per final region, reused cyclically for larger partitions.
  static const char* kPalette[] = {
      "#a6cee3", "#fdbf6f", "#b2df8a", "#fb9a99", "#cab2d6", "#ffff99",
      "#1f78b4", "#33a02c", "#e31a1c", "#ff7f00", "#6a3d9a", "#b15928"};
  constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

  std::ostringstream os;
  os << "digraph risk_stratify {\n  node [shape=box, fontname=\"Helvetica\"];\n";
  for (std::size_t i = 0; i < model.tree.nodes.size(); ++i) {
    const auto& node = model.tree.nodes[i];
    if (node.is_leaf()) {
      const int region_id =
          node.leaf_id >= 0 &&
                  node.leaf_id < static_cast<int>(model.leaf_to_region.size())
              ? model.leaf_to_region[node.leaf_id]
              : -1;
      double risk = 0.0;
      for (const auto& region : model.partition.regions)
        if (region.id == region_id && region.fit) risk = region.fit->risk;
      os << "  n" << i << " [label=\"leaf " << node.leaf_id << "\\nregion "
         << region_id << "\\nrisk " << std::fixed;
      os.precision(4);
      os << risk << "\", style=filled, fillcolor=\""
         << kPalette[region_id >= 0 ? region_id % kPaletteSize : 0] << "\"];\n";
    } else {
      const auto& dim = model.partition.schema.dim(node.split_dim);
      os << "  n" << i << " [label=\"" << dim.name
         << " <= " << dim.levels[node.split_threshold] << "\\np=";
      os.precision(3);
      os << std::scientific << node.split_pvalue << "\"];\n";
      os << "  n" << i << " -> n" << node.left << " [label=\"yes\"];\n";
      os << "  n" << i << " -> n" << node.right << " [label=\"no\"];\n";
    }
  }
  os << "}\n";
  return os.str();
}

std::string format_region_table(const Partition& partition) {
  std::ostringstream os;
  os << "region  n       risk@t*   surv@t*   cubes\n";
  for (const auto& region : partition.regions) {
    os << std::left;
    os.width(8);
    os << region.id;
    os.width(8);
    os << (region.fit ? region.fit->n : 0);
    os << std::fixed;
    os.precision(4);
    os.width(10);
    os << (region.fit ? region.fit->risk : 0.0);
    os.width(10);
    os << (region.fit ? survival_at(region.fit->curve, region.fit->t_star)
                      : 1.0);
    os << cube_list_to_string(partition, region) << "\n";
  }
  return os.str();
}

}  // namespace riskstrat
