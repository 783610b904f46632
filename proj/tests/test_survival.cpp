#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "riskstrat/errors.hpp"
#include "riskstrat/rng.hpp"
#include "riskstrat/survival.hpp"

using namespace riskstrat;

namespace {

// Independent product-limit oracle: O(n^2) counting, no shared code with the
// library sweep. Tie rule: censored subjects at an event time stay at risk.
SurvivalCurve km_oracle(const std::vector<Obs>& obs) {
  std::vector<double> event_times;
  for (const auto& o : obs)
    if (o.event) event_times.push_back(o.time);
  std::sort(event_times.begin(), event_times.end());
  event_times.erase(std::unique(event_times.begin(), event_times.end()),
                    event_times.end());

  SurvivalCurve curve;
  curve.n_total = static_cast<long long>(obs.size());
  for (const auto& o : obs)
    curve.max_observed_time = std::max(curve.max_observed_time, o.time);

  double survival = 1.0;
  for (double t : event_times) {
    long long at_risk = 0, deaths = 0;
    for (const auto& o : obs) {
      if (o.time >= t) ++at_risk;
      if (o.event && o.time == t) ++deaths;
    }
    survival *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
    curve.steps.push_back({t, survival, at_risk, deaths});
  }
  return curve;
}

std::vector<Obs> all_events(std::initializer_list<double> times) {
  std::vector<Obs> obs;
  for (double t : times) obs.push_back({t, true});
  return obs;
}

}  // namespace

TEST_CASE("product-limit estimate on uncensored times") {
  const auto curve = km_estimate(std::span<const Obs>(all_events({1, 2, 3})));
  REQUIRE(curve.steps.size() == 3);
  CHECK(curve.steps[0].survival == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(curve.steps[1].survival == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(curve.steps[2].survival == doctest::Approx(0.0));
  CHECK(curve.steps[0].at_risk == 3);
  CHECK(curve.steps[2].at_risk == 1);
}

TEST_CASE("censoring reduces the at-risk count without a step") {
  const std::vector<Obs> obs{{1, true}, {2, false}, {3, true}};
  const auto curve = km_estimate(std::span<const Obs>(obs));
  REQUIRE(curve.steps.size() == 2);
  CHECK(curve.steps[0].survival == doctest::Approx(2.0 / 3));
  CHECK(survival_at(curve, 2.5) == doctest::Approx(2.0 / 3));
  CHECK(curve.steps[1].survival == doctest::Approx(0.0));
  CHECK(curve.steps[1].at_risk == 1);
}

TEST_CASE("all-censored data keeps survival at 1") {
  const std::vector<Obs> obs{{1, false}, {2, false}};
  const auto curve = km_estimate(std::span<const Obs>(obs));
  CHECK(curve.steps.empty());
  CHECK(survival_at(curve, 10.0) == 1.0);
  const auto checked = survival_at_checked(curve, 10.0);
  CHECK(checked.extrapolated);
  CHECK(checked.value == 1.0);
}

TEST_CASE("empty group is an error") {
  CHECK_THROWS_AS(km_estimate(std::span<const Obs>{}), DataError);
}

TEST_CASE("step lookup semantics") {
  const auto curve = km_estimate(std::span<const Obs>(all_events({1, 2, 3})));
  CHECK(survival_at(curve, 2.5) == doctest::Approx(1.0 / 3));
  CHECK(survival_at(curve, 0.0) == 1.0);
  CHECK(survival_at(curve, 1.0) == doctest::Approx(2.0 / 3));
  CHECK_FALSE(survival_at_checked(curve, 3.0).extrapolated);
  CHECK(survival_at_checked(curve, 3.0 + 1e-9).extrapolated);
  CHECK_THROWS_AS(survival_at_checked(curve, -1.0), DataError);
}

TEST_CASE("risk is one minus survival") {
  const auto curve = km_estimate(std::span<const Obs>(all_events({1, 2, 3})));
  CHECK(risk_at(curve, 2.5) == doctest::Approx(2.0 / 3));
  const std::vector<Obs> censored{{5, false}, {6, false}};
  const auto flat = km_estimate(std::span<const Obs>(censored));
  CHECK(risk_at(flat, 4.0) == 0.0);
}

TEST_CASE("distance at t*") {
  const auto a = km_estimate(std::span<const Obs>(all_events({1, 2, 3})));
  CHECK(distance_at_time(a, a, 2.0) == 0.0);

  // Hand-built curves at the two XOR class values at t = 5.
  SurvivalCurve c0{{{5.0, 5.0 / 6.0, 10, 1}}, 10, 5.0};
  SurvivalCurve c1{{{5.0, 10.0 / 11.0, 11, 1}}, 11, 5.0};
  CHECK(distance_at_time(c0, c1, 5.0) ==
        doctest::Approx(std::abs(5.0 / 6.0 - 10.0 / 11.0)).epsilon(1e-12));

  const std::vector<Obs> one{{1, true}};
  const std::vector<Obs> none{{2, false}};
  const auto drop = km_estimate(std::span<const Obs>(one));
  const auto flat = km_estimate(std::span<const Obs>(none));
  CHECK(distance_at_time(drop, flat, 2.0) == doctest::Approx(1.0));
}

TEST_CASE("integrated distance is an exact rectangle sum") {
  const std::vector<Obs> one{{1, true}};
  const std::vector<Obs> none{{5, false}};
  const auto drop = km_estimate(std::span<const Obs>(one));
  const auto flat = km_estimate(std::span<const Obs>(none));
  CHECK(distance_integrated(drop, drop, 3.0) == 0.0);
  CHECK(distance_integrated(drop, flat, 3.0) == doctest::Approx(2.0));

  // Curves differing only on [1, 2) by 0.5.
  SurvivalCurve a{{{1.0, 0.5, 2, 1}, {2.0, 0.0, 1, 1}}, 2, 2.0};
  SurvivalCurve b{{{2.0, 0.0, 2, 2}}, 2, 2.0};
  CHECK(distance_integrated(a, b, 5.0) == doctest::Approx(0.5));

  CHECK_THROWS_AS(distance_integrated(a, b, 0.0), DataError);
}

TEST_CASE("integrated distance matches a fine-grid oracle on random curves") {
  Rng rng(42);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<Obs> oa, ob;
    const int na = 2 + static_cast<int>(rng.below(10));
    const int nb = 2 + static_cast<int>(rng.below(10));
    for (int i = 0; i < na; ++i)
      oa.push_back({rng.uniform() * 8.0, rng.bernoulli(0.7)});
    for (int i = 0; i < nb; ++i)
      ob.push_back({rng.uniform() * 8.0, rng.bernoulli(0.7)});
    bool any_a = false, any_b = false;
    for (auto& o : oa) any_a |= o.event;
    for (auto& o : ob) any_b |= o.event;
    if (!any_a) oa[0].event = true;
    if (!any_b) ob[0].event = true;

    const auto a = km_estimate(std::span<const Obs>(oa));
    const auto b = km_estimate(std::span<const Obs>(ob));
    const double horizon = 6.0;
    const int grid = 600000;
    double riemann = 0.0;
    for (int g = 0; g < grid; ++g) {
      const double t = horizon * (g + 0.5) / grid;
      riemann += std::abs(survival_at(a, t) - survival_at(b, t));
    }
    riemann *= horizon / grid;
    CHECK(distance_integrated(a, b, horizon) ==
          doctest::Approx(riemann).epsilon(1e-3));
  }
}

TEST_CASE("estimate is invariant under record permutation") {
  Rng rng(7);
  std::vector<Obs> obs;
  for (int i = 0; i < 40; ++i)
    obs.push_back({rng.uniform() * 10.0, rng.bernoulli(0.6)});
  const auto base = km_estimate(std::span<const Obs>(obs));
  for (int rep = 0; rep < 5; ++rep) {
    rng.shuffle(obs);
    const auto shuffled = km_estimate(std::span<const Obs>(obs));
    REQUIRE(shuffled.steps.size() == base.steps.size());
    for (std::size_t s = 0; s < base.steps.size(); ++s) {
      CHECK(shuffled.steps[s].time == base.steps[s].time);
      CHECK(shuffled.steps[s].survival == base.steps[s].survival);
      CHECK(shuffled.steps[s].at_risk == base.steps[s].at_risk);
    }
  }
}

TEST_CASE("uncensored KM reduces to the empirical CDF") {
  Rng rng(11);
  std::vector<Obs> obs;
  for (int i = 0; i < 60; ++i) obs.push_back({rng.uniform() * 4.0, true});
  const auto curve = km_estimate(std::span<const Obs>(obs));
  for (double t : {0.5, 1.0, 2.0, 3.5, 4.0}) {
    int below = 0;
    for (const auto& o : obs)
      if (o.time <= t) ++below;
    CHECK(1.0 - survival_at(curve, t) ==
          doctest::Approx(static_cast<double>(below) / obs.size())
              .epsilon(1e-12));
  }
}

TEST_CASE("survival_at is non-increasing in t") {
  Rng rng(13);
  std::vector<Obs> obs;
  for (int i = 0; i < 50; ++i)
    obs.push_back({rng.uniform() * 10.0, rng.bernoulli(0.5)});
  obs[0].event = true;
  const auto curve = km_estimate(std::span<const Obs>(obs));
  double prev = 1.0;
  for (double t = 0.0; t <= 11.0; t += 0.05) {
    const double s = survival_at(curve, t);
    CHECK(s <= prev + 1e-15);
    prev = s;
  }
}

TEST_CASE("distances are symmetric and satisfy the triangle inequality") {
  Rng rng(17);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<SurvivalCurve> curves;
    for (int c = 0; c < 3; ++c) {
      std::vector<Obs> obs;
      const int n = 3 + static_cast<int>(rng.below(12));
      for (int i = 0; i < n; ++i)
        obs.push_back({rng.uniform() * 6.0, rng.bernoulli(0.8)});
      obs[0].event = true;
      curves.push_back(km_estimate(std::span<const Obs>(obs)));
    }
    const double t_star = 3.0, horizon = 5.0;
    const double ab = distance_at_time(curves[0], curves[1], t_star);
    const double ba = distance_at_time(curves[1], curves[0], t_star);
    const double bc = distance_at_time(curves[1], curves[2], t_star);
    const double ac = distance_at_time(curves[0], curves[2], t_star);
    CHECK(ab == ba);
    CHECK(ac <= ab + bc + 1e-12);

    const double iab = distance_integrated(curves[0], curves[1], horizon);
    const double iba = distance_integrated(curves[1], curves[0], horizon);
    const double ibc = distance_integrated(curves[1], curves[2], horizon);
    const double iac = distance_integrated(curves[0], curves[2], horizon);
    CHECK(iab == doctest::Approx(iba).epsilon(1e-12));
    CHECK(iac <= iab + ibc + 1e-9);
  }
}

TEST_CASE("censored record appended after follow-up") {
  std::vector<Obs> obs{{1, true}, {2, true}, {3, false}, {4, true}};
  const auto base = km_estimate(std::span<const Obs>(obs));

  // Later than every event: the subject joins every at-risk set, so step
  // times and event counts are unchanged, every at-risk count grows by one,
  // and the survival values can only move up (the subject never fails).
  obs.push_back({9.0, false});
  const auto extended = km_estimate(std::span<const Obs>(obs));
  REQUIRE(extended.steps.size() == base.steps.size());
  for (std::size_t s = 0; s < base.steps.size(); ++s) {
    CHECK(extended.steps[s].time == base.steps[s].time);
    CHECK(extended.steps[s].events == base.steps[s].events);
    CHECK(extended.steps[s].at_risk == base.steps[s].at_risk + 1);
  }
  for (double t = 0.0; t < 10.0; t += 0.25)
    CHECK(survival_at(extended, t) >= survival_at(base, t) - 1e-12);

  // Earlier than every event: the subject leaves before any failure, so the
  // curve values are bitwise identical.
  obs.pop_back();
  obs.push_back({0.5, false});
  const auto early = km_estimate(std::span<const Obs>(obs));
  REQUIRE(early.steps.size() == base.steps.size());
  for (std::size_t s = 0; s < base.steps.size(); ++s) {
    CHECK(early.steps[s].time == base.steps[s].time);
    CHECK(early.steps[s].at_risk == base.steps[s].at_risk);
    CHECK(early.steps[s].survival == base.steps[s].survival);
  }
}

TEST_CASE("matches the independent product-limit oracle on random data") {
  Rng rng(100);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<Obs> obs;
    const int n = 1 + static_cast<int>(rng.below(12));
    for (int i = 0; i < n; ++i) {
      // Small integer grid forces heavy ties.
      obs.push_back({static_cast<double>(rng.below(6)), rng.bernoulli(0.6)});
    }
    const auto ours = km_estimate(std::span<const Obs>(obs));
    const auto oracle = km_oracle(obs);
    REQUIRE(ours.steps.size() == oracle.steps.size());
    CHECK(ours.n_total == oracle.n_total);
    CHECK(ours.max_observed_time == oracle.max_observed_time);
    for (std::size_t s = 0; s < ours.steps.size(); ++s) {
      CHECK(ours.steps[s].time == oracle.steps[s].time);
      CHECK(ours.steps[s].at_risk == oracle.steps[s].at_risk);
      CHECK(ours.steps[s].events == oracle.steps[s].events);
      CHECK(ours.steps[s].survival ==
            doctest::Approx(oracle.steps[s].survival).epsilon(1e-12));
    }
  }
}

TEST_CASE("record-based wrapper carries times and events through") {
  Dataset data;
  data.schema = CovariateSchema({{"x", {"0", "1"}}});
  data.records = {{{0}, 1.0, true}, {{1}, 2.0, false}, {{0}, 3.0, true}};
  data.validate();
  const auto curve =
      km_estimate(std::span<const SurvivalRecord>(data.records));
  REQUIRE(curve.steps.size() == 2);
  CHECK(curve.steps[0].survival == doctest::Approx(2.0 / 3));
}
