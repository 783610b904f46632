#include "riskstrat/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "riskstrat/errors.hpp"

namespace riskstrat {

void TestMethod::validate() const {
  if (kind == TestKind::UTest && !t_star)
    throw UsageError("u-test requires t_star");
  if (t_star && !(*t_star >= 0.0))
    throw UsageError("t_star must be >= 0");
}

namespace {

struct LogRankAccum {
  double observed_a = 0.0;
  double expected_a = 0.0;
  double variance = 0.0;
  long long pooled_events = 0;
};

LogRankAccum logrank_accumulate(std::span<const Obs> a, std::span<const Obs> b) {
  struct Tagged {
    double time;
    bool event;
    bool in_a;
  };
  std::vector<Tagged> pooled;
  pooled.reserve(a.size() + b.size());
  for (const auto& o : a) pooled.push_back({o.time, o.event, true});
  for (const auto& o : b) pooled.push_back({o.time, o.event, false});
  std::sort(pooled.begin(), pooled.end(), [](const Tagged& x, const Tagged& y) {
    if (x.time != y.time) return x.time < y.time;
    return x.event > y.event;
  });

  LogRankAccum acc;
  long long n_at = static_cast<long long>(pooled.size());
  long long na_at = static_cast<long long>(a.size());
  std::size_t i = 0;
  while (i < pooled.size()) {
    const double t = pooled[i].time;
    long long d = 0, d_a = 0, c = 0, c_a = 0;
    std::size_t j = i;
    while (j < pooled.size() && pooled[j].time == t) {
      if (pooled[j].event) {
        ++d;
        if (pooled[j].in_a) ++d_a;
      } else {
        ++c;
        if (pooled[j].in_a) ++c_a;
      }
      ++j;
    }
    if (d > 0) {
      const double n = static_cast<double>(n_at);
      const double na = static_cast<double>(na_at);
      acc.pooled_events += d;
      acc.observed_a += static_cast<double>(d_a);
      acc.expected_a += d * na / n;
      if (n_at > 1) {
        acc.variance += d * (na / n) * (1.0 - na / n) *
                        (n - static_cast<double>(d)) / (n - 1.0);
      }
    }
    n_at -= d + c;
    na_at -= d_a + c_a;
    i = j;
  }
  return acc;
}

}  // namespace

TestResult logrank_test(std::span<const Obs> a, std::span<const Obs> b) {
  if (a.empty() || b.empty()) throw DataError("log-rank: empty group");
  const auto acc = logrank_accumulate(a, b);
  if (acc.pooled_events == 0) throw DataError("degenerate test");

  TestResult res;
  res.method = TestMethod::logrank();
  res.n_a = a.size();
  res.n_b = b.size();
  if (acc.variance <= 0.0) {
    // All events fell where only one group was at risk; no comparison left.
    res.statistic = 0.0;
    res.p_value = 1.0;
    res.degenerate = true;
    return res;
  }
  const double diff = acc.observed_a - acc.expected_a;
  res.statistic = diff * diff / acc.variance;
  res.p_value = chi_square_sf(res.statistic, 1);
  return res;
}

TestResult u_test(std::span<const Obs> a, std::span<const Obs> b,
                  double t_star) {
  if (a.empty() || b.empty()) throw DataError("u-test: empty group");

  const auto outcome_count = [t_star](std::span<const Obs> g) {
    long long ones = 0;
    for (const auto& o : g)
      if (o.event && o.time <= t_star) ++ones;
    return ones;
  };
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  const double x1 = static_cast<double>(outcome_count(a));
  const double x2 = static_cast<double>(outcome_count(b));
  const double n = n1 + n2;
  const double ones = x1 + x2;
  const double zeros = n - ones;

  TestResult res;
  res.method = TestMethod::utest(t_star);
  res.n_a = a.size();
  res.n_b = b.size();

  // Two tie groups (all zeros, all ones). Tie-corrected variance of U:
  // n1*n2/12 * ((n+1) - sum(t^3 - t)/(n*(n-1))) which reduces to
  // n1*n2*ones*zeros / (4*(n-1)). Zero when all outcomes are identical.
  if (ones == 0.0 || zeros == 0.0 || n < 2.0) {
    res.statistic = 0.0;
    res.p_value = 1.0;
    res.degenerate = true;
    return res;
  }
  const double u_minus_mean = 0.5 * (x1 * n2 - x2 * n1);
  const double variance = n1 * n2 * ones * zeros / (4.0 * (n - 1.0));
  const double z = u_minus_mean / std::sqrt(variance);
  res.statistic = z;
  res.p_value = std::min(1.0, 2.0 * normal_sf(std::abs(z)));
  return res;
}

TestResult compare_groups(std::span<const Obs> a, std::span<const Obs> b,
                          const TestMethod& method) {
  method.validate();
  TestResult res;
  res.method = method;
  res.n_a = a.size();
  res.n_b = b.size();
  if (a.empty() || b.empty()) {
    res.degenerate = true;
    return res;
  }
  if (method.kind == TestKind::UTest) return u_test(a, b, *method.t_star);

  // Log-rank: absorb the zero-pooled-events error into p = 1; two
  // event-free groups are indistinguishable in risk.
  bool any_event = false;
  for (const auto& o : a) any_event = any_event || o.event;
  for (const auto& o : b) any_event = any_event || o.event;
  if (!any_event) {
    res.degenerate = true;
    return res;
  }
  return logrank_test(a, b);
}

TestResult logrank_test(std::span<const SurvivalRecord> a,
                        std::span<const SurvivalRecord> b) {
  const auto oa = to_obs(a), ob = to_obs(b);
  return logrank_test(std::span<const Obs>(oa), std::span<const Obs>(ob));
}

TestResult u_test(std::span<const SurvivalRecord> a,
                  std::span<const SurvivalRecord> b, double t_star) {
  const auto oa = to_obs(a), ob = to_obs(b);
  return u_test(std::span<const Obs>(oa), std::span<const Obs>(ob), t_star);
}

// --------------------------------------------------------------- tails

namespace {

// Regularized incomplete gamma by series (x < a+1) or Lentz continued
// fraction (x >= a+1). Relative error ~1e-14 in double precision.
double gamma_p_series(double a, double x) {
  const double gln = std::lgamma(a);
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int it = 0; it < 500; ++it) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16)
      break;
  }
  return sum * std::exp(-x + a * std::log(x) - gln);
}

double gamma_q_contfrac(double a, double x) {
  const double gln = std::lgamma(a);
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - gln) * h;
}

}  // namespace

double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw DataError("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_contfrac(a, x);
}

double chi_square_sf(double x, int df) {
  if (x < 0.0) throw DataError("chi_square_sf: x must be >= 0");
  if (df < 1) throw DataError("chi_square_sf: df must be >= 1");
  return gamma_q(0.5 * df, 0.5 * x);
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

namespace {

double beta_contfrac(double a, double b, double x) {
  const double tiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return h;
}

}  // namespace

double beta_inc(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_beta =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  const double front = std::exp(ln_beta + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_contfrac(a, b, x) / a;
  return 1.0 - front * beta_contfrac(b, a, 1.0 - x) / b;
}

double student_t_sf(double t, double df) {
  const double x = df / (df + t * t);
  const double half_tail = 0.5 * beta_inc(0.5 * df, 0.5, x);
  return t >= 0.0 ? half_tail : 1.0 - half_tail;
}

double student_t_quantile(double prob, double df) {
  if (!(prob > 0.0 && prob < 1.0))
    throw DataError("student_t_quantile: prob must lie in (0,1)");
  if (prob == 0.5) return 0.0;
  // Monotone bisection on the CDF; plenty for reporting purposes.
  double lo = -1e8, hi = 1e8;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (1.0 - student_t_sf(mid, df) < prob)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// --------------------------------------------------------- pairwise kernel

namespace {

PValueMatrix pairwise_impl(std::span<const std::vector<Obs>> groups,
                           const TestMethod& method, bool parallel) {
  method.validate();
  if (groups.size() < 2) throw UsageError("pairwise_pvalues: need >= 2 groups");
  for (const auto& g : groups)
    if (g.empty()) throw UsageError("pairwise_pvalues: empty group");

  const std::size_t n = groups.size();
  PValueMatrix m(n);
  // Flattened upper-triangle index so the parallel loop is a plain range.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);

  const long long total = static_cast<long long>(pairs.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long long k = 0; k < total; ++k) {
    const auto [i, j] = pairs[static_cast<std::size_t>(k)];
    const auto res = compare_groups(groups[i], groups[j], method);
    m.set(i, j, res.p_value);
  }
  return m;
}

}  // namespace

PValueMatrix pairwise_pvalues(std::span<const std::vector<Obs>> groups,
                              const TestMethod& method) {
  return pairwise_impl(groups, method, true);
}

PValueMatrix pairwise_pvalues_serial(std::span<const std::vector<Obs>> groups,
                                     const TestMethod& method) {
  return pairwise_impl(groups, method, false);
}

}  // namespace riskstrat
