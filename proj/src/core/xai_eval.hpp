#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/attribution.hpp"
#include "core/forest.hpp"
#include "core/meter_data.hpp"

namespace mxai {

enum class XaiMetric { kFaithfulness, kStability, kLocalization };

struct XaiScore {
  XaiMetric metric = XaiMetric::kFaithfulness;
  double value = 0.0;  // always in [0, 1]
  int n_sampled = 0;
  uint64_t seed = 0;
  int top_k = 0;
};

enum class ExplainerKind { kKernelShap, kLime, kRandom };

const char* to_string(ExplainerKind k);

enum class BackgroundMode { kHousehold, kGlobal };

struct XaiEvalConfig {
  ExplainerKind explainer = ExplainerKind::kKernelShap;
  BackgroundMode background = BackgroundMode::kHousehold;
  int n_segments = 24;              // pooled time-of-day scheme for faithfulness
  double top_k_fraction = 0.10;     // faithfulness: blur ceil(fraction * segments)
  int top_k_per_day = 3;            // stability
  int n_samples = 50;               // households to sample
  int n_coalitions = 2000;          // kernel shap budget
  int lime_perturbations = 0;       // 0 = explainer default
  double completeness_threshold = 0.9;
  double class_threshold = 0.5;
  uint64_t seed = 7919;
  int threads = 0;
};

// Mirrors the top_k highest-phi segments around the household's slot-wise
// weekly mean: x -> 2*mu - x, floored at 0.01*mu. Untouched slots are
// bit-identical to the input.
WeekSlice blur_segments(const WeekSlice& week, const Attribution& attribution, int top_k);

// The week-level model used throughout the evaluation loop:
// predict_proba(extract_features(week)).
ModelFn forest_week_model(const ForestModel& model);

// Fraction of sampled households (one random week each) whose predicted class
// flips after blurring the top-k attributed segments.
XaiScore faithfulness(const ForestModel& model, const std::vector<LoadProfile>& dataset,
                      const XaiEvalConfig& config);

// Fraction of per-day top-importance time-of-day stamps that recur on at
// least two distinct days, averaged over sampled household-weeks. Requires a
// day-resolving scheme (hourly within week).
XaiScore stability(const ForestModel& model, const std::vector<LoadProfile>& dataset,
                   const XaiEvalConfig& config);

// One sample's stability: top_k_per_day stamps per day from the attribution,
// then the fraction whose time-of-day occurs on >= 2 distinct days.
double stability_sample_score(const SegmentScheme& scheme, const std::vector<double>& phi,
                              int top_k_per_day);

// Share of positive attribution mass inside a known time-of-day window
// [start_slot, end_slot); segments straddling the boundary count
// proportionally to their slots inside.
double localization_score(const Attribution& attribution, int window_start_slot,
                          int window_end_slot);

struct LocalizationWindow {
  std::string meter_id;
  int start_slot = 0;
  int end_slot = 0;
};

// Mean localization over sampled households with a planted window.
XaiScore localization(const ForestModel& model, const std::vector<LoadProfile>& dataset,
                      const std::vector<LocalizationWindow>& windows, const XaiEvalConfig& config);

}  // namespace mxai
