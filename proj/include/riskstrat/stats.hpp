// Two-sample tests used by both phases (log-rank, Mann-Whitney U on
// event-by-t* outcomes) and self-contained tail-probability functions.
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "riskstrat/survival.hpp"

namespace riskstrat {

enum class TestKind { LogRank, UTest };

struct TestMethod {
  TestKind kind = TestKind::LogRank;
  std::optional<double> t_star;  // required for UTest, ignored by LogRank

  static TestMethod logrank() { return {TestKind::LogRank, std::nullopt}; }
  static TestMethod utest(double t_star) { return {TestKind::UTest, t_star}; }

  void validate() const;  // throws UsageError if UTest lacks t_star
};

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  TestMethod method;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  bool degenerate = false;  // test carried no information, p forced to 1
};

// Standard two-group log-rank over the pooled distinct event times:
// statistic = (sum(O_a - E_a))^2 / sum(V), p = chi_square_sf(statistic, 1).
// Tied events at one time are processed together (hypergeometric variance).
// Throws DataError("degenerate test") when the pooled data has no events.
TestResult logrank_test(std::span<const Obs> a, std::span<const Obs> b);

// Mann-Whitney U on the binary outcome "event with time <= t_star", normal
// approximation with tie correction, two-sided. Zero tie-corrected variance
// (all outcomes identical) gives p = 1. Callers must ensure every record's
// follow-up reaches t_star; this is not checkable from (time, event) alone.
TestResult u_test(std::span<const Obs> a, std::span<const Obs> b,
                  double t_star);

// Method dispatch that never throws on degenerate inputs: such pairs come
// back with p = 1 and the degenerate flag set, which is what the tree and
// merge phases want (and what lets the hot loops run under OpenMP).
TestResult compare_groups(std::span<const Obs> a, std::span<const Obs> b,
                          const TestMethod& method);

// Record-based wrappers.
TestResult logrank_test(std::span<const SurvivalRecord> a,
                        std::span<const SurvivalRecord> b);
TestResult u_test(std::span<const SurvivalRecord> a,
                  std::span<const SurvivalRecord> b, double t_star);

// --- tail probability functions (implemented in-repo, documented accuracy) --

// P(chi^2_df > x) via the regularized incomplete gamma function.
// Absolute error <= 1e-10 over x >= 0. Throws DataError on x < 0 or df < 1.
double chi_square_sf(double x, int df);

// P(Z > z), standard normal, via erfc. Absolute error <= 1e-12.
double normal_sf(double z);

// Regularized incomplete gamma Q(a, x) = Gamma(a, x)/Gamma(a) (series /
// continued fraction). Exposed for the test oracles.
double gamma_q(double a, double x);

// Regularized incomplete beta I_x(a, b); used by the Student-t helpers.
double beta_inc(double a, double b, double x);

// P(T_df > t) and the two-sided (1 - p)-quantile helpers for the CV report.
double student_t_sf(double t, double df);
double student_t_quantile(double prob, double df);  // P(T <= q) = prob

// --- pairwise p-value kernel -------------------------------------------------

// Symmetric matrix of pairwise p-values, diagonal 1, degenerate pairs 1.
class PValueMatrix {
 public:
  PValueMatrix() = default;
  explicit PValueMatrix(std::size_t n) : n_(n), v_(n * n, 1.0) {}
  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return v_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double p) {
    v_[i * n_ + j] = p;
    v_[j * n_ + i] = p;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> v_;
};

// Entry (i,j) = p-value of `method` on groups i and j. OpenMP-parallel over
// pairs; identical output to the serial reference. Throws UsageError with
// fewer than 2 groups or any empty group.
PValueMatrix pairwise_pvalues(std::span<const std::vector<Obs>> groups,
                              const TestMethod& method);
// Serial reference kept for testing and benchmarking.
PValueMatrix pairwise_pvalues_serial(std::span<const std::vector<Obs>> groups,
                                     const TestMethod& method);

}  // namespace riskstrat
