#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "core/meter_data.hpp"

namespace mxai {

enum class Granularity { kSlot, kHour, kCustom };

// Maps each of the 336 weekly slots to one of n_segments contiguous segments.
struct SegmentScheme {
  int n_segments = 0;
  std::array<int, kSlotsPerWeek> slot_to_segment{};
  Granularity granularity = Granularity::kCustom;
  bool per_day = false;  // true when segments never span multiple days

  // 168 segments: one per hour within the week (day-resolving).
  static SegmentScheme hourly_week();
  // 336 segments: one per slot (day-resolving).
  static SegmentScheme per_slot();
  // 24 segments: hour of day, pooled across the 7 days.
  static SegmentScheme time_of_day_24();
  // n equal time-of-day segments pooled across days (48 % n == 0).
  static SegmentScheme time_of_day(int n);

  std::vector<int> segment_slots(int segment) const;
  int slots_per_segment(int segment) const;
  // day index for day-resolving schemes, -1 otherwise
  int segment_day(int segment) const;
  // first time-of-day slot covered by the segment
  int segment_tod_start(int segment) const;
};

using ModelFn = std::function<double(const WeekSlice&)>;

enum class AttributionMethod { kKernelShap, kLime, kExact };

const char* to_string(AttributionMethod m);

struct Attribution {
  SegmentScheme scheme;
  std::vector<double> phi;
  double base_value = 0.0;   // model output on the background
  double prediction = 0.0;   // model output on the instance
  AttributionMethod method = AttributionMethod::kKernelShap;
  uint64_t seed = 0;
  bool ridge_fallback = false;  // LIME only: singular design handled by ridge bump
};

struct KernelShapConfig {
  int n_coalitions = 2000;
  uint64_t seed = 7919;
  int threads = 0;
};

struct LimeConfig {
  int n_perturbations = 0;     // 0 = 4 * n_segments
  double kernel_width = 0.0;   // 0 = 0.25 * sqrt(n_segments)
  double ridge = 1e-6;
  uint64_t seed = 7919;
  int threads = 0;
};

// Shapley values of the coalition game v(S) = model(week with off-coalition
// segments replaced by background). Full coalition enumeration for
// n_segments <= 12, otherwise Shapley-kernel-weighted sampling under the
// efficiency constraint. Deterministic under seed for any thread count.
Attribution explain_kernel_shap(const ModelFn& model_fn, const WeekSlice& week,
                                const SegmentScheme& scheme, const WeekSlice& background,
                                const KernelShapConfig& config);

// Surrogate-model explanation: binary segment on/off perturbations, proximity
// kernel over Hamming distance, ridge-regularized weighted least squares.
Attribution explain_lime(const ModelFn& model_fn, const WeekSlice& week,
                         const SegmentScheme& scheme, const WeekSlice& background,
                         const LimeConfig& config);

// Exact Shapley values by subset enumeration; value_fn maps a coalition
// bitmask (bit i set = player i present) to the game value. n_players <= 12.
std::vector<double> exact_shapley(const std::function<double(uint32_t)>& value_fn, int n_players);

// The masking operation shared by the explainers and the test oracles.
WeekSlice mask_week(const WeekSlice& week, const WeekSlice& background,
                    const SegmentScheme& scheme, const std::vector<bool>& coalition);

// Background profiles: the household's own slot-wise weekly mean, or the
// pooled mean over a corpus of weeks.
WeekSlice household_mean_background(const WeekSlice& week);
WeekSlice corpus_mean_background(const std::vector<WeekSlice>& weeks);

// Export: CSV `segment_index,start,end,phi` (start/end in time-of-day slots
// for pooled schemes, week slots otherwise) plus JSON metadata.
std::string attribution_to_csv(const Attribution& a);
std::string attribution_metadata_json(const Attribution& a);

}  // namespace mxai
