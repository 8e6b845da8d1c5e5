#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "core/meter_data.hpp"

namespace mxai {

inline constexpr int kNumFeatures = 93;

// Canonical ordered feature names; frozen by a golden test. The extractor and
// this list must change together.
const std::array<std::string, kNumFeatures>& feature_names();

struct FeatureVector {
  std::string meter_id;
  Date week_start;
  std::array<double, kNumFeatures> values{};
};

// Deterministic, guard-protected feature extraction (see docs/features.md for
// the full list and guard rules). All outputs are finite.
FeatureVector extract_features(const WeekSlice& week);

struct FeatureRow {
  std::string meter_id;
  Date week_start;
  std::optional<bool> label;
  std::array<double, kNumFeatures> values{};
};

struct FeatureMatrix {
  Characteristic characteristic = Characteristic::kCooking;
  std::vector<FeatureRow> rows;

  std::size_t n_labeled() const;
};

// Segments every profile into weeks, extracts features, and attaches the
// profile's label for `characteristic` to each row (when present).
FeatureMatrix build_feature_matrix(const std::vector<LoadProfile>& profiles,
                                   Characteristic characteristic,
                                   double completeness_threshold);

// CSV export: `meter_id,week_start,label,<93 canonical names>`.
std::string write_feature_csv(const FeatureMatrix& m);
FeatureMatrix read_feature_csv(const std::string& path);

}  // namespace mxai
