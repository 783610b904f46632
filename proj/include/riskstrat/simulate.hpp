// Seeded generators for the two-covariate XOR survival model and for null
// cohorts used by the FDR-control property tests.
#pragma once

#include <cstdint>

#include "riskstrat/survival.hpp"

namespace riskstrat {

// Two binary covariates; the latent class is x1 XOR x2.
//   class 0: S(t) = min(1, 5 / (1 + t))   (risk at t=5 is 1/6)
//   class 1: S(t) = min(1, 10 / (1 + 2t)) (risk at t=5 is 1/11)
//
// rho tilts both covariate marginals away from 1/2:
//   P(x = 1) = clamp((1 - 1.5 * rho) / 2, 0, 1), i.i.d. over the two axes.
// At rho = 0 this is the balanced model (fair independent coins), where the
// XOR symmetry makes both axis splits uninformative at the root; tilting the
// marginals is what lets axis-aligned splits see the structure. The factor
// is sized so the default rho = 0.3 gives near-certain root detection at
// n = 10^4 with alpha' = 0.025.
//
// Draw order per record (fixed; part of the determinism contract):
//   u1 -> x1, u2 -> x2, u3 -> event time (inverse transform on the class
//   survival curve), u4 -> censoring time (only when censor_rate > 0).
struct XorConfig {
  std::size_t n = 0;
  double rho = 0.3;          // in [-1, 1]
  double censor_rate = 0.0;  // exponential censoring rate; 0 = no censoring
  std::uint64_t seed = 0;
};

Dataset generate_xor(const XorConfig& config);

// True class survival at time t (clamped model; evaluation helper).
double xor_true_survival(int xor_class, double t);

// d independent fair-coin covariates; times i.i.d. unit-rate exponential
// independent of the covariates; no censoring.
// Draw order per record: d covariate draws, then the time draw.
Dataset generate_null(std::size_t n, std::size_t d, std::uint64_t seed);

}  // namespace riskstrat
