#include "riskstrat/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "riskstrat/errors.hpp"
#include "riskstrat/rng.hpp"

namespace riskstrat {

namespace {

CovariateSchema binary_schema(std::size_t d, const char* prefix) {
  std::vector<DimensionSpec> dims;
  dims.reserve(d);
  for (std::size_t j = 0; j < d; ++j)
    dims.push_back({prefix + std::to_string(j + 1), {"0", "1"}});
  return CovariateSchema(std::move(dims));
}

}  // namespace

double xor_true_survival(int xor_class, double t) {
  if (t < 0.0) return 1.0;
  const double raw =
      xor_class == 0 ? 5.0 / (1.0 + t) : 10.0 / (1.0 + 2.0 * t);
  return std::min(1.0, raw);
}

Dataset generate_xor(const XorConfig& config) {
  if (config.n < 1) throw UsageError("generate_xor: n must be >= 1");
  if (config.rho < -1.0 || config.rho > 1.0)
    throw UsageError("generate_xor: rho must lie in [-1, 1]");
  if (config.censor_rate < 0.0)
    throw UsageError("generate_xor: censor_rate must be >= 0");

  const double p_one =
      std::clamp((1.0 - 1.5 * config.rho) / 2.0, 0.0, 1.0);

  Dataset data;
  data.schema = binary_schema(2, "x");
  data.records.reserve(config.n);

  Rng rng(config.seed);
  for (std::size_t i = 0; i < config.n; ++i) {
    const int x1 = rng.bernoulli(p_one) ? 1 : 0;
    const int x2 = rng.bernoulli(p_one) ? 1 : 0;
    const int cls = x1 ^ x2;

    // Inverse transform on the clamped curve: U uniform on (0, 1].
    // class 0: T = 5/U - 1 (support [4, inf)); class 1: T = (10/U - 1)/2.
    const double u = rng.uniform_pos();
    const double t =
        cls == 0 ? 5.0 / u - 1.0 : (10.0 / u - 1.0) / 2.0;

    SurvivalRecord rec;
    rec.covariates = {x1, x2};
    if (config.censor_rate > 0.0) {
      const double c = rng.exponential(config.censor_rate);
      rec.time = std::min(t, c);
      rec.event = t <= c;
    } else {
      rec.time = t;
      rec.event = true;
    }
    data.records.push_back(std::move(rec));
  }
  return data;
}

Dataset generate_null(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw UsageError("generate_null: n and d must be >= 1");

  Dataset data;
  data.schema = binary_schema(d, "c");
  data.records.reserve(n);

  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    SurvivalRecord rec;
    rec.covariates.reserve(d);
    for (std::size_t j = 0; j < d; ++j)
      rec.covariates.push_back(rng.bernoulli(0.5) ? 1 : 0);
    rec.time = rng.exponential(1.0);
    rec.event = true;
    data.records.push_back(std::move(rec));
  }
  return data;
}

}  // namespace riskstrat
