// Command-line front end: simulate / fit / predict / evaluate.
// Exit codes: 0 ok, 1 usage error, 2 data error, 3 fit error.
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "riskstrat/csv.hpp"
#include "riskstrat/errors.hpp"
#include "riskstrat/evaluate.hpp"
#include "riskstrat/model_io.hpp"
#include "riskstrat/pipeline.hpp"
#include "riskstrat/simulate.hpp"

namespace {

using namespace riskstrat;

MethodChoice parse_method(const std::string& name) {
  if (name == "auto") return MethodChoice::Auto;
  if (name == "logrank") return MethodChoice::LogRank;
  if (name == "utest") return MethodChoice::UTest;
  throw UsageError("unknown method '" + name + "' (auto|logrank|utest)");
}

struct CommonFitFlags {
  RunConfig config;
  std::string method = "auto";
  double alpha_prime = 0.0;  // 0 = auto (alpha / d)
  double delta = -1.0;       // < 0 = off
  double horizon = 0.0;      // 0 = auto
  std::string tertiles;      // comma-separated column names

  void add_to(CLI::App* cmd) {
    cmd->add_option("--t-star", config.t_star, "Risk horizon t* (default 5)");
    cmd->add_option("--alpha", config.alpha, "Confidence level alpha (default 0.05)");
    cmd->add_option("--alpha-prime", alpha_prime,
                    "Per-test threshold (default alpha / d)");
    cmd->add_option("--n-leaf", config.n_leaf,
                    "Floor on the final region count (default 10)");
    cmd->add_option("--min-node", config.min_node,
                    "Minimum records per child (default max(25, 0.5% of N))");
    cmd->add_option("--method", method, "auto|logrank|utest (default auto)");
    cmd->add_option("--delta", delta,
                    "Minimum empirical child distance gate (off by default)");
    cmd->add_option("--horizon", horizon,
                    "Integration horizon for the whole-curve distance");
    cmd->add_option("--seed", config.seed, "Random seed (default 0)");
    cmd->add_option("--tertiles", tertiles,
                    "Comma-separated continuous columns to discretize");
  }

  RunConfig resolve() {
    config.method = parse_method(method);
    if (alpha_prime > 0.0) config.alpha_prime = alpha_prime;
    if (delta >= 0.0) config.delta = delta;
    if (horizon > 0.0) config.horizon = horizon;
    return config;
  }

  IngestSpec ingest_spec() const {
    IngestSpec spec;
    std::string token;
    std::istringstream is(tertiles);
    while (std::getline(is, token, ','))
      if (!token.empty()) spec.tertile_columns.insert(token);
    return spec;
  }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
}

int run_simulate(const std::string& kind, std::size_t n, double rho,
                 double censor_rate, std::size_t d, std::uint64_t seed,
                 const std::string& output) {
  Dataset data;
  if (kind == "xor") {
    XorConfig config;
    config.n = n;
    config.rho = rho;
    config.censor_rate = censor_rate;
    config.seed = seed;
    data = generate_xor(config);
  } else if (kind == "null") {
    data = generate_null(n, d, seed);
  } else {
    throw UsageError("simulate kind must be xor or null");
  }
  if (output.empty())
    write_csv(std::cout, data);
  else
    write_csv_file(output, data);
  return 0;
}

int run_fit(const std::string& data_path, CommonFitFlags& flags,
            const std::string& model_path, const std::string& dot_path) {
  const RunConfig config = flags.resolve();
  const auto ingest = ingest_csv_file(data_path, flags.ingest_spec());

  Model model;
  model.config = config;
  model.cuts = ingest.cuts;
  try {
    auto fit = fit_risk_stratify(ingest.data, config);
    model.tree = std::move(fit.tree);
    model.partition = std::move(fit.partition);
    model.leaf_to_region = std::move(fit.leaf_to_region);
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& e) {
    throw FitError(e.what());
  }
  // Training record indices are not part of the model file.
  for (auto& node : model.tree.nodes) node.record_idx.clear();

  save_model_file(model_path, model);
  write_text(dot_path, export_dot(model));
  std::cout << format_region_table(model.partition);
  return 0;
}

int run_predict(const std::string& model_path, const std::string& data_path,
                const std::string& output) {
  const Model model = load_model_file(model_path);
  const RawCsv raw = read_raw_csv_file(data_path);

  std::vector<std::string> names;
  std::vector<long> cols;
  for (const auto& dim : model.partition.schema.dims()) {
    long col = -1;
    for (std::size_t c = 0; c < raw.header.size(); ++c)
      if (raw.header[c] == dim.name) col = static_cast<long>(c);
    if (col < 0) throw DataError("missing required column '" + dim.name + "'");
    names.push_back(dim.name);
    cols.push_back(col);
  }

  std::ostringstream os;
  os << "row,region,risk,survival\n";
  os.precision(10);
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    std::vector<std::string> tokens;
    tokens.reserve(names.size());
    for (long c : cols) tokens.push_back(raw.rows[r][c]);
    std::vector<int> x;
    try {
      x = encode_row(model.partition.schema, model.cuts, tokens, names);
    } catch (const DataError& e) {
      throw DataError("row " + std::to_string(r + 1) + ": " + e.what());
    }
    const auto pred = predict(model, x);
    os << (r + 1) << "," << pred.region_id << "," << pred.risk << ","
       << pred.survival << "\n";
  }
  if (output.empty())
    std::cout << os.str();
  else
    write_text(output, os.str());
  return 0;
}

int run_evaluate(const std::string& data_path, CommonFitFlags& flags,
                 std::size_t runs, const std::string& scores_path,
                 std::size_t k) {
  RunConfig config = flags.resolve();
  config.runs = runs;
  const auto ingest = ingest_csv_file(data_path, flags.ingest_spec());
  const TestMethod method = resolve_method(ingest.data, config);

  CvSummary summary;
  if (!scores_path.empty()) {
    if (k < 1) throw UsageError("--scores requires --k >= 1");
    const RawCsv raw = read_raw_csv_file(scores_path);
    long score_col = -1;
    for (std::size_t c = 0; c < raw.header.size(); ++c)
      if (raw.header[c] == "score") score_col = static_cast<long>(c);
    if (score_col < 0)
      throw DataError("scores file needs a 'score' column");
    std::vector<double> scores;
    scores.reserve(raw.rows.size());
    for (std::size_t r = 0; r < raw.rows.size(); ++r) {
      try {
        scores.push_back(std::stod(raw.rows[r][score_col]));
      } catch (...) {
        throw DataError("scores row " + std::to_string(r + 1) +
                        ": not a number");
      }
    }
    summary = cross_validate_scores(ingest.data, scores, k, config.alpha,
                                    method, config.runs, config.seed);
  } else {
    const FitProcedure fit = [&config](const Dataset& train) {
      return fit_risk_stratify(train, config).partition;
    };
    summary = cross_validate(ingest.data, fit, config.alpha, method,
                             config.runs, config.seed);
  }
  std::cout << format_cv_summary(summary) << machine_row(summary) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Risk-stratified partitioning of censored survival data"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Cap the worker thread count");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic CSV");
  std::string sim_kind;
  std::size_t sim_n = 1000, sim_d = 4;
  double sim_rho = 0.3, sim_censor = 0.0;
  std::uint64_t sim_seed = 0;
  std::string sim_output;
  simulate->add_option("kind", sim_kind, "xor|null")->required();
  simulate->add_option("--n", sim_n, "Number of records (default 1000)");
  simulate->add_option("--rho", sim_rho, "Marginal tilt for xor (default 0.3)");
  simulate->add_option("--censor-rate", sim_censor,
                       "Exponential censoring rate for xor (default 0)");
  simulate->add_option("--d", sim_d, "Covariate count for null (default 4)");
  simulate->add_option("--seed", sim_seed, "Random seed (default 0)");
  simulate->add_option("-o,--output", sim_output, "Output CSV (default stdout)");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit the two-phase partition");
  std::string fit_data, fit_model = "model.json", fit_dot = "tree.dot";
  CommonFitFlags fit_flags;
  fit->add_option("data", fit_data, "Input CSV")->required();
  fit_flags.add_to(fit);
  fit->add_option("-o,--output", fit_model, "Model file (default model.json)");
  fit->add_option("--dot", fit_dot, "Tree export (default tree.dot)");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Assign rows to regions");
  std::string pred_model, pred_data, pred_output;
  predict_cmd->add_option("model", pred_model, "Model file")->required();
  predict_cmd->add_option("data", pred_data, "Input CSV")->required();
  predict_cmd->add_option("-o,--output", pred_output,
                          "Output CSV (default stdout)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Cross-validated FDR report");
  std::string eval_data, eval_scores;
  std::size_t eval_runs = 10, eval_k = 0;
  CommonFitFlags eval_flags;
  evaluate->add_option("data", eval_data, "Input CSV")->required();
  eval_flags.add_to(evaluate);
  evaluate->add_option("--runs", eval_runs, "Cross-validation runs (default 10)");
  evaluate->add_option("--scores", eval_scores,
                       "External risk scores CSV (quantile-bucket mode)");
  evaluate->add_option("--k", eval_k, "Bucket count for --scores");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }

  try {
    riskstrat::set_thread_cap(threads);
    if (*simulate)
      return run_simulate(sim_kind, sim_n, sim_rho, sim_censor, sim_d,
                          sim_seed, sim_output);
    if (*fit) return run_fit(fit_data, fit_flags, fit_model, fit_dot);
    if (*predict_cmd) return run_predict(pred_model, pred_data, pred_output);
    if (*evaluate)
      return run_evaluate(eval_data, eval_flags, eval_runs, eval_scores,
                          eval_k);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const FitError& e) {
    std::cerr << "fit error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
