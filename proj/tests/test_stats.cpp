#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "riskstrat/errors.hpp"
#include "riskstrat/rng.hpp"
#include "riskstrat/stats.hpp"

using namespace riskstrat;

namespace {

std::vector<Obs> events_at(std::initializer_list<double> times) {
  std::vector<Obs> obs;
  for (double t : times) obs.push_back({t, true});
  return obs;
}

// Independent O(n^2) log-rank statistic for the permutation oracle. Counts
// at-risk sets by brute force instead of a sweep.
double oracle_logrank_stat(const std::vector<double>& times,
                           const std::vector<bool>& in_a) {
  std::vector<double> distinct(times);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()),
                 distinct.end());
  double O = 0, E = 0, V = 0;
  for (double t : distinct) {
    double n_at = 0, na_at = 0, d = 0, da = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (times[i] >= t) {
        ++n_at;
        if (in_a[i]) ++na_at;
      }
      if (times[i] == t) {
        ++d;
        if (in_a[i]) ++da;
      }
    }
    O += da;
    E += d * na_at / n_at;
    if (n_at > 1)
      V += d * (na_at / n_at) * (1 - na_at / n_at) * (n_at - d) / (n_at - 1);
  }
  if (V <= 0) return 0.0;
  return (O - E) * (O - E) / V;
}

// Exhaustive relabeling; mid-p convention for the discrete tie atoms.
double permutation_mid_p(const std::vector<double>& times, std::size_t n_a) {
  const std::size_t n = times.size();
  std::vector<bool> mask(n, false);
  std::fill(mask.begin(), mask.begin() + n_a, true);
  const double observed = oracle_logrank_stat(times, mask);

  std::vector<bool> labels(n, false);
  std::fill(labels.end() - n_a, labels.end(), true);  // first permutation
  std::sort(labels.begin(), labels.end());
  long long greater = 0, equal = 0, total = 0;
  do {
    const double stat = oracle_logrank_stat(times, labels);
    ++total;
    if (stat > observed + 1e-12)
      ++greater;
    else if (stat >= observed - 1e-12)
      ++equal;
  } while (std::next_permutation(labels.begin(), labels.end()));
  return (greater + 0.5 * equal) / static_cast<double>(total);
}

// Two-sided Fisher exact test on a 2x2 table via the hypergeometric law.
double fisher_two_sided(long long x1, long long n1, long long x2,
                        long long n2) {
  const long long m = x1 + x2, n = n1 + n2;
  const auto log_choose = [](long long a, long long b) {
    return std::lgamma(a + 1.0) - std::lgamma(b + 1.0) -
           std::lgamma(a - b + 1.0);
  };
  const auto prob = [&](long long k) {
    if (k < 0 || k > n1 || m - k < 0 || m - k > n2) return 0.0;
    return std::exp(log_choose(n1, k) + log_choose(n2, m - k) -
                    log_choose(n, m));
  };
  const double observed = prob(x1);
  double p = 0.0;
  for (long long k = 0; k <= m; ++k)
    if (prob(k) <= observed * (1 + 1e-9)) p += prob(k);
  return std::min(1.0, p);
}

// Composite Simpson of the standard normal density on [z, 40].
double simpson_normal_tail(double z) {
  const double hi = 40.0;
  const int segments = 200000;  // even
  const double h = (hi - z) / segments;
  const auto phi = [](double t) {
    return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI);
  };
  double sum = phi(z) + phi(hi);
  for (int i = 1; i < segments; ++i)
    sum += phi(z + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

// Independently coded pooled two-proportion z statistic.
double proportion_z(long long x1, long long n1, long long x2, long long n2) {
  const double p1 = static_cast<double>(x1) / n1;
  const double p2 = static_cast<double>(x2) / n2;
  const double pooled = static_cast<double>(x1 + x2) / (n1 + n2);
  return (p1 - p2) /
         std::sqrt(pooled * (1 - pooled) * (1.0 / n1 + 1.0 / n2));
}

std::vector<Obs> binary_group(long long ones, long long n, double t_star) {
  std::vector<Obs> obs;
  for (long long i = 0; i < n; ++i)
    obs.push_back({i < ones ? t_star / 2 : t_star * 2, true});
  return obs;
}

}  // namespace

TEST_CASE("log-rank on identical groups") {
  const auto g = events_at({1, 2, 3, 4});
  const auto res = logrank_test(std::span<const Obs>(g), std::span<const Obs>(g));
  CHECK(res.statistic == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(res.p_value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("log-rank separates disjoint event ranges") {
  const auto a = events_at({1, 2, 3});
  const auto b = events_at({10, 20, 30});
  const auto res = logrank_test(std::span<const Obs>(a), std::span<const Obs>(b));
  CHECK(res.p_value < 0.05);

  // With 6-choose-3 = 20 labelings only the observed one and its mirror
  // reach the maximal statistic, so the mid-p floor is exactly 2*0.5/20.
  std::vector<double> pooled{1, 2, 3, 10, 20, 30};
  CHECK(permutation_mid_p(pooled, 3) <= 0.05);
}

TEST_CASE("log-rank accepts interleaved tiny groups") {
  const auto a = events_at({1, 3});
  const auto b = events_at({2, 4});
  const auto res = logrank_test(std::span<const Obs>(a), std::span<const Obs>(b));
  CHECK(res.p_value > 0.3);
}

TEST_CASE("log-rank degenerate inputs") {
  const std::vector<Obs> censored{{1, false}, {2, false}};
  CHECK_THROWS_AS(logrank_test(std::span<const Obs>(censored),
                               std::span<const Obs>(censored)),
                  DataError);
  const auto res = compare_groups(censored, censored, TestMethod::logrank());
  CHECK(res.degenerate);
  CHECK(res.p_value == 1.0);
  CHECK_THROWS_AS(
      logrank_test(std::span<const Obs>{}, std::span<const Obs>(censored)),
      DataError);
}

TEST_CASE("u-test on identical outcome vectors") {
  const auto a = binary_group(30, 100, 5.0);
  const auto res = u_test(std::span<const Obs>(a), std::span<const Obs>(a), 5.0);
  CHECK(res.p_value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("u-test separates opposite extremes, agreeing with Fisher") {
  const auto a = binary_group(50, 50, 5.0);
  const auto b = binary_group(0, 50, 5.0);
  const auto res = u_test(std::span<const Obs>(a), std::span<const Obs>(b), 5.0);
  CHECK(res.p_value < 1e-6);
  CHECK(fisher_two_sided(50, 50, 0, 50) < 1e-6);
}

TEST_CASE("u-test zero-variance cases give p = 1") {
  const auto a = binary_group(0, 40, 5.0);
  const auto b = binary_group(0, 25, 5.0);
  const auto res = u_test(std::span<const Obs>(a), std::span<const Obs>(b), 5.0);
  CHECK(res.degenerate);
  CHECK(res.p_value == 1.0);
  CHECK_THROWS_AS(
      u_test(std::span<const Obs>{}, std::span<const Obs>(a), 5.0), DataError);
}

TEST_CASE("u-test equals the pooled two-proportion z test up to the "
          "finite-population factor") {
  // On binary outcomes the tie-corrected MWU z is exactly
  // z_prop * sqrt((N-1)/N); checked as an algebraic identity.
  Rng rng(3);
  int checked = 0;
  while (checked < 20) {
    const long long n1 = 5 + static_cast<long long>(rng.below(200));
    const long long n2 = 5 + static_cast<long long>(rng.below(200));
    const long long x1 = static_cast<long long>(rng.below(n1 + 1));
    const long long x2 = static_cast<long long>(rng.below(n2 + 1));
    if ((x1 + x2 == 0) || (x1 + x2 == n1 + n2)) continue;
    ++checked;
    const auto a = binary_group(x1, n1, 5.0);
    const auto b = binary_group(x2, n2, 5.0);
    const auto res = u_test(std::span<const Obs>(a), std::span<const Obs>(b), 5.0);
    const double N = static_cast<double>(n1 + n2);
    const double expected =
        proportion_z(x1, n1, x2, n2) * std::sqrt((N - 1.0) / N);
    CHECK(res.statistic == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("tests are symmetric in their group arguments") {
  Rng rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<Obs> a, b;
    for (int i = 0; i < 12; ++i) a.push_back({rng.uniform() * 9, rng.bernoulli(0.8)});
    for (int i = 0; i < 15; ++i) b.push_back({rng.uniform() * 9, rng.bernoulli(0.8)});
    a[0].event = b[0].event = true;
    const auto ab = logrank_test(std::span<const Obs>(a), std::span<const Obs>(b));
    const auto ba = logrank_test(std::span<const Obs>(b), std::span<const Obs>(a));
    CHECK(ab.statistic == doctest::Approx(ba.statistic).epsilon(1e-10));
    CHECK(ab.p_value == doctest::Approx(ba.p_value).epsilon(1e-10));

    const auto uab = u_test(std::span<const Obs>(a), std::span<const Obs>(b), 4.0);
    const auto uba = u_test(std::span<const Obs>(b), std::span<const Obs>(a), 4.0);
    CHECK(std::abs(uab.statistic) ==
          doctest::Approx(std::abs(uba.statistic)).epsilon(1e-12));
    CHECK(uab.p_value == doctest::Approx(uba.p_value).epsilon(1e-12));
  }
}

TEST_CASE("tests are invariant under strictly increasing time transforms") {
  Rng rng(9);
  std::vector<Obs> a, b;
  for (int i = 0; i < 20; ++i) a.push_back({rng.uniform() * 4, rng.bernoulli(0.7)});
  for (int i = 0; i < 18; ++i) b.push_back({rng.uniform() * 4, rng.bernoulli(0.7)});
  a[0].event = b[0].event = true;
  const auto cube = [](std::vector<Obs> v) {
    for (auto& o : v) o.time = o.time * o.time * o.time;
    return v;
  };
  const auto base = logrank_test(std::span<const Obs>(a), std::span<const Obs>(b));
  const auto ca = cube(a), cb = cube(b);
  const auto mapped = logrank_test(std::span<const Obs>(ca), std::span<const Obs>(cb));
  CHECK(base.statistic == mapped.statistic);
  CHECK(base.p_value == mapped.p_value);

  const double t_star = 2.0;
  const auto ubase = u_test(std::span<const Obs>(a), std::span<const Obs>(b), t_star);
  const auto umapped = u_test(std::span<const Obs>(ca), std::span<const Obs>(cb),
                              t_star * t_star * t_star);
  CHECK(ubase.statistic == umapped.statistic);
}

TEST_CASE("chi-square tail function") {
  CHECK(chi_square_sf(0.0, 1) == doctest::Approx(1.0));
  CHECK(chi_square_sf(3.841459, 1) == doctest::Approx(0.05).epsilon(2e-3));
  CHECK(std::abs(chi_square_sf(3.841459, 1) - 0.05) < 1e-4);
  CHECK(std::abs(chi_square_sf(6.634897, 1) - 0.01) < 1e-4);
  // Independent route for df = 1: P(chi2_1 > x) = 2 P(Z > sqrt(x)) with the
  // normal tail evaluated by Simpson integration.
  for (double x : {0.5, 1.0, 3.841459, 6.634897, 10.0}) {
    const double oracle = 2.0 * simpson_normal_tail(std::sqrt(x));
    CHECK(std::abs(chi_square_sf(x, 1) - oracle) < 1e-10);
  }
  // Closed form for df = 2: exp(-x/2).
  for (double x : {0.1, 1.0, 5.0, 20.0})
    CHECK(chi_square_sf(x, 2) == doctest::Approx(std::exp(-x / 2)).epsilon(1e-12));
  CHECK_THROWS_AS(chi_square_sf(-0.1, 1), DataError);
  CHECK_THROWS_AS(chi_square_sf(1.0, 0), DataError);
}

TEST_CASE("normal tail function") {
  CHECK(normal_sf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::abs(normal_sf(1.959964) - 0.025) < 1e-6);
  CHECK(normal_sf(-40.0) == doctest::Approx(1.0).epsilon(1e-15));
  for (double z : {-2.0, -0.5, 0.3, 1.0, 1.959964, 3.0, 5.0})
    CHECK(std::abs(normal_sf(z) - simpson_normal_tail(z)) < 1e-12);
}

TEST_CASE("tail functions are strictly decreasing") {
  double prev_chi = 2.0, prev_norm = 2.0;
  for (double x = 0.0; x <= 20.0; x += 0.25) {
    const double c = chi_square_sf(x, 1);
    CHECK(c < prev_chi);
    prev_chi = c;
  }
  for (double z = -6.0; z <= 6.0; z += 0.2) {
    const double s = normal_sf(z);
    CHECK(s < prev_norm);
    prev_norm = s;
  }
}

TEST_CASE("student-t helpers for the CV interval") {
  CHECK(student_t_quantile(0.975, 9) == doctest::Approx(2.2621571628).epsilon(1e-8));
  CHECK(student_t_quantile(0.975, 1) == doctest::Approx(12.7062047362).epsilon(1e-7));
  CHECK(student_t_sf(0.0, 5) == doctest::Approx(0.5).epsilon(1e-12));
  // Large df approaches the normal tail.
  CHECK(student_t_sf(1.959964, 1e7) == doctest::Approx(0.025).epsilon(1e-4));
}

TEST_CASE("log-rank decisions track the exhaustive permutation oracle") {
  // Balanced 4v4 micro designs (total n = 8), group-b scale separation in
  // {1, 2, 4}; the mid-p convention handles the discrete permutation atoms.
  Rng rng(2024);
  const double lambdas[] = {1.0, 2.0, 4.0};
  int agree = 0;
  const int instances = 400;
  for (int rep = 0; rep < instances; ++rep) {
    const double lambda = lambdas[rng.below(3)];
    std::vector<double> pooled;
    std::vector<Obs> a, b;
    for (int i = 0; i < 4; ++i) {
      const double t = rng.exponential(1.0);
      a.push_back({t, true});
      pooled.push_back(t);
    }
    for (int i = 0; i < 4; ++i) {
      const double t = rng.exponential(1.0) * lambda;
      b.push_back({t, true});
      pooled.push_back(t);
    }
    const double p_asym =
        logrank_test(std::span<const Obs>(a), std::span<const Obs>(b)).p_value;
    const double p_perm = permutation_mid_p(pooled, 4);
    bool ok = true;
    for (double alpha : {0.05, 0.2})
      ok = ok && ((p_asym <= alpha) == (p_perm <= alpha));
    agree += ok;
  }
  MESSAGE("permutation agreement: ", agree, "/", instances);
  CHECK(agree >= instances * 95 / 100);
}

TEST_CASE("pairwise p-value matrix") {
  const auto g = events_at({1, 2, 3, 4, 5});
  std::vector<std::vector<Obs>> identical{g, g, g};
  const auto m = pairwise_pvalues(identical, TestMethod::logrank());
  REQUIRE(m.size() == 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      if (i == j)
        CHECK(m(i, j) == 1.0);
      else
        CHECK(m(i, j) == doctest::Approx(1.0).epsilon(1e-12));
    }

  std::vector<std::vector<Obs>> extremes{binary_group(60, 60, 5.0),
                                         binary_group(0, 60, 5.0)};
  const auto m2 = pairwise_pvalues(extremes, TestMethod::utest(5.0));
  REQUIRE(m2.size() == 2);
  CHECK(m2(0, 1) < 1e-10);
  CHECK(m2(0, 1) == m2(1, 0));
  CHECK(m2(0, 0) == 1.0);

  std::vector<std::vector<Obs>> single{g};
  CHECK_THROWS_AS(pairwise_pvalues(single, TestMethod::logrank()), UsageError);
}

TEST_CASE("u-test method validation") {
  TestMethod missing{TestKind::UTest, std::nullopt};
  CHECK_THROWS_AS(missing.validate(), UsageError);
  CHECK_NOTHROW(TestMethod::utest(5.0).validate());
  CHECK_NOTHROW(TestMethod::logrank().validate());
}
