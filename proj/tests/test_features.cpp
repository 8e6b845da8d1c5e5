#include <doctest.h>

#include <fstream>
#include <set>

#include "core/features.hpp"
#include "core/rng.hpp"
#include "core/textio.hpp"

using namespace mxai;

namespace {

WeekSlice make_week(double fill = 0.0) {
  WeekSlice w;
  w.meter_id = "m1";
  w.week_start = make_date(2009, 7, 20);
  w.values.fill(fill);
  return w;
}

WeekSlice random_week(uint64_t seed) {
  WeekSlice w = make_week();
  Rng rng(seed);
  for (auto& v : w.values) v = 0.05 + rng.uniform01();
  return w;
}

int index_of(const std::string& name) {
  const auto& names = feature_names();
  for (int i = 0; i < kNumFeatures; ++i) {
    if (names[static_cast<std::size_t>(i)] == name) return i;
  }
  REQUIRE_MESSAGE(false, "unknown feature ", name);
  return -1;
}

}  // namespace

TEST_CASE("the canonical feature list has 93 unique names, frozen by a golden file") {
  const auto& names = feature_names();
  std::set<std::string> unique(names.begin(), names.end());
  CHECK(unique.size() == kNumFeatures);

  std::ifstream golden(std::string(MXAI_GOLDEN_DIR) + "/feature_names.txt");
  REQUIRE_MESSAGE(golden.good(), "golden feature list missing");
  std::string expected;
  int i = 0;
  while (std::getline(golden, expected)) {
    REQUIRE(i < kNumFeatures);
    CHECK_MESSAGE(names[static_cast<std::size_t>(i)] == expected, "feature ", i,
                  " diverged from the golden list");
    ++i;
  }
  CHECK(i == kNumFeatures);
}

TEST_CASE("constant week: means follow the constant, spreads vanish, ratios are one") {
  WeekSlice w = make_week(1.0);
  const auto fv = extract_features(w);
  CHECK(fv.values[static_cast<std::size_t>(index_of("mean_week"))] == doctest::Approx(1.0));
  CHECK(fv.values[static_cast<std::size_t>(index_of("mean_weekday"))] == doctest::Approx(1.0));
  CHECK(fv.values[static_cast<std::size_t>(index_of("mean_weekend"))] == doctest::Approx(1.0));
  CHECK(fv.values[static_cast<std::size_t>(index_of("mean_evening"))] == doctest::Approx(1.0));
  CHECK(fv.values[static_cast<std::size_t>(index_of("var_week"))] == doctest::Approx(0.0));
  CHECK(fv.values[static_cast<std::size_t>(index_of("std_week"))] == doctest::Approx(0.0));
  CHECK(fv.values[static_cast<std::size_t>(index_of("ratio_max_mean"))] == doctest::Approx(1.0));
  // autocorrelation of a constant series is guarded to zero
  CHECK(fv.values[static_cast<std::size_t>(index_of("autocorr_day"))] == doctest::Approx(0.0));
}

TEST_CASE("all-zero week: guarded ratios and moments are zero") {
  const auto fv = extract_features(make_week(0.0));
  for (const char* name : {"mean_week", "var_week", "ratio_max_mean", "ratio_min_mean",
                           "ratio_weekday_weekend", "ratio_evening_noon", "ratio_base_peak"}) {
    CHECK_MESSAGE(fv.values[static_cast<std::size_t>(index_of(name))] == doctest::Approx(0.0),
                  name);
  }
  for (double v : fv.values) CHECK(std::isfinite(v));
}

TEST_CASE("single-spike week matches hand arithmetic") {
  WeekSlice w = make_week(0.0);
  w.values[36] = 4.8;  // day 0, slot 36
  const auto fv = extract_features(w);
  CHECK(fv.values[static_cast<std::size_t>(index_of("mean_week"))] ==
        doctest::Approx(4.8 / 336.0).epsilon(1e-12));
  CHECK(fv.values[static_cast<std::size_t>(index_of("max_week"))] == doctest::Approx(4.8));
  CHECK(fv.values[static_cast<std::size_t>(index_of("ratio_max_mean"))] ==
        doctest::Approx(336.0).epsilon(1e-12));
}

TEST_CASE("scale covariance: c scales levels, fixes ratios and correlations") {
  const WeekSlice w = random_week(7);
  WeekSlice scaled = w;
  for (auto& v : scaled.values) v *= 2.0;  // power of two keeps splits exact
  const auto a = extract_features(w);
  const auto b = extract_features(scaled);

  const auto& names = feature_names();
  for (int i = 0; i < kNumFeatures; ++i) {
    const std::string& n = names[static_cast<std::size_t>(i)];
    const double va = a.values[static_cast<std::size_t>(i)];
    const double vb = b.values[static_cast<std::size_t>(i)];
    const bool scale_free = n.rfind("ratio_", 0) == 0 || n.rfind("autocorr", 0) == 0 ||
                            n.rfind("peak_slot", 0) == 0 || n.rfind("first_above", 0) == 0 ||
                            n == "cross_day_corr" || n == "weekday_weekend_corr" ||
                            n == "min_slot" || n == "peak_width" || n.rfind("n_above", 0) == 0 ||
                            n == "n_zero_slots";
    if (scale_free) {
      CHECK_MESSAGE(vb == doctest::Approx(va).epsilon(1e-9), n, " should be scale-free");
    } else if (n == "var_week") {
      CHECK(vb == doctest::Approx(4.0 * va).epsilon(1e-9));
    } else if (n.rfind("mean_", 0) == 0 || n.rfind("max_", 0) == 0 || n.rfind("min_", 0) == 0 ||
               n.rfind("std_", 0) == 0 || n.rfind("q", 0) == 0 || n == "median_week" ||
               n == "iqr_week") {
      CHECK_MESSAGE(vb == doctest::Approx(2.0 * va).epsilon(1e-9), n, " should scale");
    }
  }
}

TEST_CASE("permuting two weekdays moves only sequence- and day-indexed features") {
  const WeekSlice w = random_week(11);
  WeekSlice permuted = w;
  for (int s = 0; s < kSlotsPerDay; ++s) {
    std::swap(permuted.values[static_cast<std::size_t>(1 * kSlotsPerDay + s)],
              permuted.values[static_cast<std::size_t>(3 * kSlotsPerDay + s)]);
  }
  const auto a = extract_features(w);
  const auto b = extract_features(permuted);

  const std::set<std::string> order_sensitive = {
      "autocorr_lag1", "autocorr_day",      "autocorr_week",
      "peak_slot_day1", "peak_slot_day3"};
  const auto& names = feature_names();
  for (int i = 0; i < kNumFeatures; ++i) {
    const std::string& n = names[static_cast<std::size_t>(i)];
    if (order_sensitive.count(n)) continue;
    CHECK_MESSAGE(b.values[static_cast<std::size_t>(i)] ==
                      doctest::Approx(a.values[static_cast<std::size_t>(i)]).epsilon(1e-12),
                  n, " must not change under a weekday swap");
  }
  CHECK(b.values[static_cast<std::size_t>(index_of("peak_slot_day1"))] ==
        a.values[static_cast<std::size_t>(index_of("peak_slot_day3"))]);
  CHECK(b.values[static_cast<std::size_t>(index_of("peak_slot_day3"))] ==
        a.values[static_cast<std::size_t>(index_of("peak_slot_day1"))]);
}

TEST_CASE("extraction is a pure function") {
  const WeekSlice w = random_week(13);
  const auto a = extract_features(w);
  const auto b = extract_features(w);
  for (int i = 0; i < kNumFeatures; ++i) {
    CHECK(a.values[static_cast<std::size_t>(i)] == b.values[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("feature CSV round-trips through the writer and reader") {
  FeatureMatrix m;
  m.characteristic = Characteristic::kCooking;
  for (int i = 0; i < 3; ++i) {
    FeatureRow row;
    row.meter_id = "m" + std::to_string(i);
    row.week_start = make_date(2009, 7, 20);
    Rng rng(static_cast<uint64_t>(i));
    for (auto& v : row.values) v = rng.uniform01();
    if (i < 2) row.label = i == 0;
    m.rows.push_back(row);
  }
  const std::string path = "test_features_roundtrip.csv";
  write_text_file(path, write_feature_csv(m));
  const FeatureMatrix back = read_feature_csv(path);
  REQUIRE(back.rows.size() == 3);
  CHECK(back.rows[0].label.has_value());
  CHECK(*back.rows[0].label == true);
  CHECK_FALSE(back.rows[2].label.has_value());
  for (std::size_t r = 0; r < 3; ++r) {
    for (int i = 0; i < kNumFeatures; ++i) {
      CHECK(back.rows[r].values[static_cast<std::size_t>(i)] ==
            m.rows[r].values[static_cast<std::size_t>(i)]);
    }
  }
  std::remove(path.c_str());
}
