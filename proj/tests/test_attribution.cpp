#include <doctest.h>

#include <cmath>
#include <numeric>

#include "core/attribution.hpp"
#include "core/errors.hpp"
#include "core/forest.hpp"
#include "core/rng.hpp"

using namespace mxai;

namespace {

WeekSlice constant_week(double v) {
  WeekSlice w;
  w.meter_id = "m";
  w.week_start = make_date(2009, 7, 20);
  w.values.fill(v);
  return w;
}

WeekSlice random_week(uint64_t seed) {
  WeekSlice w = constant_week(0);
  Rng rng(seed);
  for (auto& v : w.values) v = rng.uniform01();
  return w;
}

std::vector<double> segment_means(const WeekSlice& w, const SegmentScheme& scheme) {
  std::vector<double> means(static_cast<std::size_t>(scheme.n_segments), 0.0);
  std::vector<int> counts(static_cast<std::size_t>(scheme.n_segments), 0);
  for (int i = 0; i < kSlotsPerWeek; ++i) {
    const int seg = scheme.slot_to_segment[static_cast<std::size_t>(i)];
    means[static_cast<std::size_t>(seg)] += w.values[static_cast<std::size_t>(i)];
    counts[static_cast<std::size_t>(seg)] += 1;
  }
  for (std::size_t j = 0; j < means.size(); ++j) means[j] /= counts[j];
  return means;
}

// Test-only Shapley oracle by direct subset enumeration; independent of the
// library implementation and not bound by its player cap.
std::vector<double> enumeration_shapley(const std::function<double(uint32_t)>& v, int n) {
  std::vector<double> fact(static_cast<std::size_t>(n) + 1, 1.0);
  for (std::size_t i = 1; i < fact.size(); ++i) fact[i] = fact[i - 1] * static_cast<double>(i);
  std::vector<double> phi(static_cast<std::size_t>(n), 0.0);
  const uint32_t total = 1u << n;
  for (uint32_t s = 0; s < total; ++s) {
    const int size = __builtin_popcount(s);
    for (int i = 0; i < n; ++i) {
      if (s & (1u << i)) continue;
      const double w = fact[static_cast<std::size_t>(size)] *
                       fact[static_cast<std::size_t>(n - size - 1)] /
                       fact[static_cast<std::size_t>(n)];
      phi[static_cast<std::size_t>(i)] += w * (v(s | (1u << i)) - v(s));
    }
  }
  return phi;
}

}  // namespace

TEST_CASE("exact shapley reproduces the worked two-player game") {
  // v({1})=1, v({2})=2, v({1,2})=4, v(empty)=0
  const auto phi = exact_shapley(
      [](uint32_t s) {
        switch (s) {
          case 0b01: return 1.0;
          case 0b10: return 2.0;
          case 0b11: return 4.0;
          default: return 0.0;
        }
      },
      2);
  CHECK(phi[0] == doctest::Approx(1.5));
  CHECK(phi[1] == doctest::Approx(2.5));
}

TEST_CASE("exact shapley: additive games return their coefficients") {
  const std::vector<double> c = {0.3, -1.2, 2.0, 0.0, 5.5};
  const auto phi = exact_shapley(
      [&](uint32_t s) {
        double v = 0.0;
        for (int i = 0; i < 5; ++i) {
          if (s & (1u << i)) v += c[static_cast<std::size_t>(i)];
        }
        return v;
      },
      5);
  for (int i = 0; i < 5; ++i) {
    CHECK(phi[static_cast<std::size_t>(i)] == doctest::Approx(c[static_cast<std::size_t>(i)]));
  }
}

TEST_CASE("exact shapley: null players get zero") {
  // player 1 never changes the value
  const auto phi = exact_shapley(
      [](uint32_t s) { return (s & 0b001) ? 3.0 : 0.0; }, 3);
  CHECK(phi[0] == doctest::Approx(3.0));
  CHECK(phi[1] == doctest::Approx(0.0));
  CHECK(phi[2] == doctest::Approx(0.0));
}

TEST_CASE("exact shapley refuses more than 12 players") {
  CHECK_THROWS_AS(exact_shapley([](uint32_t) { return 0.0; }, 13), usage_error);
}

TEST_CASE("kernel shap on a linear model recovers w_j (x_j - b_j) exactly") {
  const SegmentScheme scheme = SegmentScheme::time_of_day(8);
  const WeekSlice week = random_week(1);
  const WeekSlice background = random_week(2);
  const std::vector<double> weights = {0.5, -1.0, 2.0, 0.0, 1.5, -0.5, 3.0, 0.25};
  const ModelFn fn = [&](const WeekSlice& w) {
    const auto means = segment_means(w, scheme);
    double acc = 0.0;
    for (std::size_t j = 0; j < means.size(); ++j) acc += weights[j] * means[j];
    return acc;
  };
  KernelShapConfig config;
  config.n_coalitions = 1 << 10;
  const Attribution a = explain_kernel_shap(fn, week, scheme, background, config);

  const auto xm = segment_means(week, scheme);
  const auto bm = segment_means(background, scheme);
  for (int j = 0; j < 8; ++j) {
    CHECK(a.phi[static_cast<std::size_t>(j)] ==
          doctest::Approx(weights[static_cast<std::size_t>(j)] *
                          (xm[static_cast<std::size_t>(j)] - bm[static_cast<std::size_t>(j)]))
              .epsilon(1e-9));
  }
}

TEST_CASE("kernel shap symmetry: identical segments under a symmetric model tie") {
  const SegmentScheme scheme = SegmentScheme::time_of_day(4);
  WeekSlice week = constant_week(0.0);
  // make segments 1 and 2 identical, slot by slot across every day
  Rng rng(5);
  for (int d = 0; d < kDaysPerWeek; ++d) {
    for (int s = 0; s < kSlotsPerDay; ++s) {
      const int seg = scheme.slot_to_segment[static_cast<std::size_t>(s)];
      double v = seg == 0 ? 0.1 : seg == 3 ? 0.9 : 0.4;
      week.values[static_cast<std::size_t>(d * kSlotsPerDay + s % kSlotsPerDay)] = v;
    }
  }
  const WeekSlice background = constant_week(0.0);
  const ModelFn fn = [&](const WeekSlice& w) {
    const auto means = segment_means(w, scheme);
    return means[1] + means[2] + 0.5 * means[1] * means[2];  // symmetric in 1, 2
  };
  KernelShapConfig config;
  const Attribution a = explain_kernel_shap(fn, week, scheme, background, config);
  CHECK(a.phi[1] == doctest::Approx(a.phi[2]).epsilon(1e-9));
}

TEST_CASE("kernel shap efficiency holds under full enumeration") {
  const SegmentScheme scheme = SegmentScheme::time_of_day(6);
  const WeekSlice week = random_week(3);
  const WeekSlice background = household_mean_background(week);
  const ModelFn fn = [&](const WeekSlice& w) {
    const auto means = segment_means(w, scheme);
    double acc = 0.3;
    for (std::size_t j = 0; j < means.size(); ++j) {
      acc += std::sin(3.0 * means[j]) * (j % 2 ? 1.0 : -0.7);
    }
    return acc;
  };
  KernelShapConfig config;
  const Attribution a = explain_kernel_shap(fn, week, scheme, background, config);
  const double total = std::accumulate(a.phi.begin(), a.phi.end(), 0.0);
  CHECK(total == doctest::Approx(a.prediction - a.base_value).epsilon(1e-9));
}

TEST_CASE("kernel shap matches the enumeration oracle on forest games") {
  const SegmentScheme scheme = SegmentScheme::time_of_day(8);
  Rng data_rng(7);
  // train a small forest on segment means
  std::vector<std::vector<double>> x;
  std::vector<bool> y;
  for (int i = 0; i < 120; ++i) {
    std::vector<double> row(8);
    for (auto& v : row) v = data_rng.uniform01();
    y.push_back(row[2] + 0.5 * row[5] > 0.8);
    x.push_back(std::move(row));
  }
  ForestParams params;
  params.n_trees = 25;
  const ForestModel forest = train_forest(x, y, params);

  const WeekSlice week = random_week(8);
  const WeekSlice background = random_week(9);
  const ModelFn fn = [&](const WeekSlice& w) {
    return predict_proba(forest, segment_means(w, scheme));
  };

  KernelShapConfig config;
  const Attribution a = explain_kernel_shap(fn, week, scheme, background, config);

  const auto xm = segment_means(week, scheme);
  const auto bm = segment_means(background, scheme);
  const auto oracle = enumeration_shapley(
      [&](uint32_t s) {
        std::vector<double> z(8);
        for (int j = 0; j < 8; ++j) {
          z[static_cast<std::size_t>(j)] = (s & (1u << j)) ? xm[static_cast<std::size_t>(j)]
                                                           : bm[static_cast<std::size_t>(j)];
        }
        return predict_proba(forest, z);
      },
      8);
  for (int j = 0; j < 8; ++j) {
    CHECK(a.phi[static_cast<std::size_t>(j)] ==
          doctest::Approx(oracle[static_cast<std::size_t>(j)]).epsilon(1e-8));
  }
}

TEST_CASE("sampled kernel shap approximates the oracle beyond the enumeration cap") {
  const int m = 14;
  // a pooled scheme cannot make 14 equal divisions of 48; use a custom one
  SegmentScheme scheme;
  scheme.n_segments = m;
  scheme.per_day = false;
  for (int i = 0; i < kSlotsPerWeek; ++i) {
    scheme.slot_to_segment[static_cast<std::size_t>(i)] =
        std::min(m - 1, (i % kSlotsPerDay) * m / kSlotsPerDay);
  }
  const WeekSlice week = random_week(10);
  const WeekSlice background = random_week(11);
  const ModelFn fn = [&](const WeekSlice& w) {
    const auto means = segment_means(w, scheme);
    double acc = 0.0;
    for (std::size_t j = 0; j < means.size(); ++j) {
      acc += (j % 3 == 0 ? 1.0 : -0.4) * means[j] + 0.3 * std::cos(4.0 * means[j]);
    }
    return acc;
  };
  KernelShapConfig config;
  config.n_coalitions = 2000;  // < 2^14 - 2, so the sampler engages
  config.seed = 42;
  const Attribution a = explain_kernel_shap(fn, week, scheme, background, config);

  const auto xm = segment_means(week, scheme);
  const auto bm = segment_means(background, scheme);
  const auto oracle = enumeration_shapley(
      [&](uint32_t s) {
        WeekSlice masked = week;
        for (int i = 0; i < kSlotsPerWeek; ++i) {
          const int seg = scheme.slot_to_segment[static_cast<std::size_t>(i)];
          if (!(s & (1u << seg))) {
            masked.values[static_cast<std::size_t>(i)] =
                background.values[static_cast<std::size_t>(i)];
          }
        }
        return fn(masked);
      },
      m);
  (void)xm;
  (void)bm;
  for (int j = 0; j < m; ++j) {
    CHECK(std::abs(a.phi[static_cast<std::size_t>(j)] - oracle[static_cast<std::size_t>(j)]) <
          0.05);
  }
  // efficiency also holds on the sampled path
  const double total = std::accumulate(a.phi.begin(), a.phi.end(), 0.0);
  CHECK(total == doctest::Approx(a.prediction - a.base_value).epsilon(1e-9));
}

TEST_CASE("kernel shap: dummy segments equal to the background get zero") {
  const SegmentScheme scheme = SegmentScheme::time_of_day(6);
  WeekSlice week = random_week(12);
  const WeekSlice background = random_week(13);
  // make segment 2 identical to the background
  for (int i = 0; i < kSlotsPerWeek; ++i) {
    if (scheme.slot_to_segment[static_cast<std::size_t>(i)] == 2) {
      week.values[static_cast<std::size_t>(i)] = background.values[static_cast<std::size_t>(i)];
    }
  }
  const ModelFn fn = [&](const WeekSlice& w) {
    const auto means = segment_means(w, scheme);
    return std::accumulate(means.begin(), means.end(), 0.0) + means[2] * means[4];
  };
  KernelShapConfig config;
  const Attribution a = explain_kernel_shap(fn, week, scheme, background, config);
  CHECK(a.phi[2] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("kernel shap: degenerate games yield all-zero phi without error") {
  const SegmentScheme scheme = SegmentScheme::time_of_day(4);
  const WeekSlice week = random_week(14);
  const ModelFn fn = [](const WeekSlice&) { return 0.42; };
  KernelShapConfig config;
  const Attribution a = explain_kernel_shap(fn, week, scheme, household_mean_background(week),
                                            config);
  for (double p : a.phi) CHECK(p == 0.0);
}

TEST_CASE("kernel shap rejects non-finite model output") {
  const SegmentScheme scheme = SegmentScheme::time_of_day(4);
  const WeekSlice week = random_week(15);
  const ModelFn fn = [](const WeekSlice&) { return std::numeric_limits<double>::quiet_NaN(); };
  KernelShapConfig config;
  CHECK_THROWS_AS(
      explain_kernel_shap(fn, week, scheme, household_mean_background(week), config),
      numeric_error);
}

TEST_CASE("lime: constant models produce near-zero phi") {
  const SegmentScheme scheme = SegmentScheme::time_of_day(8);
  const WeekSlice week = random_week(16);
  const ModelFn fn = [](const WeekSlice&) { return 0.77; };
  LimeConfig config;
  const Attribution a = explain_lime(fn, week, scheme, household_mean_background(week), config);
  for (double p : a.phi) CHECK(std::abs(p) < 1e-9);
}

TEST_CASE("lime: an unmasked-segment indicator puts the top weight on that segment") {
  const SegmentScheme scheme = SegmentScheme::time_of_day(8);
  const WeekSlice week = random_week(17);
  WeekSlice background = household_mean_background(week);
  for (auto& v : background.values) v += 10.0;  // ensure masking is detectable
  const ModelFn fn = [&](const WeekSlice& w) {
    // 1 when segment 5 carries the instance values, else 0
    for (int i = 0; i < kSlotsPerWeek; ++i) {
      if (scheme.slot_to_segment[static_cast<std::size_t>(i)] == 5) {
        return w.values[static_cast<std::size_t>(i)] ==
                       week.values[static_cast<std::size_t>(i)]
                   ? 1.0
                   : 0.0;
      }
    }
    return 0.0;
  };
  LimeConfig config;
  config.n_perturbations = 400;
  const Attribution a = explain_lime(fn, week, scheme, background, config);
  int argmax = 0;
  for (int j = 1; j < 8; ++j) {
    if (std::abs(a.phi[static_cast<std::size_t>(j)]) > std::abs(a.phi[static_cast<std::size_t>(argmax)])) {
      argmax = j;
    }
  }
  CHECK(argmax == 5);
  CHECK(a.phi[5] > 0.0);
}

TEST_CASE("lime is deterministic under a fixed seed") {
  const SegmentScheme scheme = SegmentScheme::time_of_day(6);
  const WeekSlice week = random_week(18);
  const WeekSlice background = household_mean_background(week);
  const ModelFn fn = [&](const WeekSlice& w) {
    const auto means = segment_means(w, scheme);
    return means[0] - means[3];
  };
  LimeConfig config;
  config.seed = 31;
  const Attribution a = explain_lime(fn, week, scheme, background, config);
  const Attribution b = explain_lime(fn, week, scheme, background, config);
  for (std::size_t j = 0; j < a.phi.size(); ++j) CHECK(a.phi[j] == b.phi[j]);
}

TEST_CASE("lime and kernel shap agree on the top segment's sign for indicators") {
  const SegmentScheme scheme = SegmentScheme::time_of_day(8);
  const WeekSlice week = random_week(19);
  WeekSlice background = household_mean_background(week);
  for (auto& v : background.values) v += 5.0;
  for (int target = 0; target < 8; target += 3) {
    const ModelFn fn = [&, target](const WeekSlice& w) {
      for (int i = 0; i < kSlotsPerWeek; ++i) {
        if (scheme.slot_to_segment[static_cast<std::size_t>(i)] == target) {
          return w.values[static_cast<std::size_t>(i)] ==
                         week.values[static_cast<std::size_t>(i)]
                     ? 1.0
                     : 0.0;
        }
      }
      return 0.0;
    };
    KernelShapConfig kc;
    LimeConfig lc;
    lc.n_perturbations = 400;
    const Attribution ks = explain_kernel_shap(fn, week, scheme, background, kc);
    const Attribution lm = explain_lime(fn, week, scheme, background, lc);
    auto argmax_abs = [](const std::vector<double>& phi) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < phi.size(); ++j) {
        if (std::abs(phi[j]) > std::abs(phi[best])) best = j;
      }
      return best;
    };
    const std::size_t ks_top = argmax_abs(ks.phi);
    const std::size_t lm_top = argmax_abs(lm.phi);
    CHECK(ks_top == static_cast<std::size_t>(target));
    CHECK(lm_top == static_cast<std::size_t>(target));
    CHECK(ks.phi[ks_top] * lm.phi[lm_top] > 0.0);  // same sign
  }
}

TEST_CASE("schemes partition all 336 slots contiguously") {
  for (const SegmentScheme& scheme :
       {SegmentScheme::hourly_week(), SegmentScheme::per_slot(), SegmentScheme::time_of_day_24()}) {
    std::vector<int> counts(static_cast<std::size_t>(scheme.n_segments), 0);
    for (int i = 0; i < kSlotsPerWeek; ++i) {
      const int seg = scheme.slot_to_segment[static_cast<std::size_t>(i)];
      REQUIRE(seg >= 0);
      REQUIRE(seg < scheme.n_segments);
      counts[static_cast<std::size_t>(seg)] += 1;
    }
    for (int c : counts) CHECK(c == kSlotsPerWeek / scheme.n_segments);
  }
  CHECK_THROWS_AS(SegmentScheme::time_of_day(7), usage_error);
}
