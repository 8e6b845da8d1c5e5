#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "core/attribution.hpp"
#include "core/meter_data.hpp"

namespace mxai {

enum class VizType { kLine, kBar, kPolar, kShapDiagram, kText };

const char* to_string(VizType v);
std::optional<VizType> viz_type_from_string(const std::string& s);

enum class TipKind { kCurtailment, kEfficiency };

struct Highlight {
  int start_slot = 0;  // time-of-day slots, end exclusive
  int end_slot = 0;
  double strength = 0.0;  // summed phi inside [start, end)
};

struct FeedbackSpec {
  VizType viz = VizType::kLine;
  Characteristic characteristic = Characteristic::kCooking;
  bool predicted_class = true;
  std::array<double, kSlotsPerDay> day_profile{};  // mean kWh per slot
  Highlight highlight;
  std::vector<double> phi;     // pooled per-slot attribution (48 values)
  std::optional<std::string> explanation_text;
  std::optional<TipKind> tip;
};

// Pools an attribution onto the 48 time-of-day slots: each segment's phi is
// spread equally over its slots, then summed per time-of-day.
std::array<double, kSlotsPerDay> pool_phi_to_slots(const Attribution& a);

// The contiguous window with maximal summed phi among lengths in
// [min_len, max_len]; ties resolved by earliest start then shortest length.
// If all phi <= 0, falls back to the max-phi slot extended to min_len.
Highlight select_highlight(const std::array<double, kSlotsPerDay>& slot_phi, int min_len = 2,
                           int max_len = 6);

// Renders the spec to a document: SVG 1.1 for the four graphics, UTF-8 plain
// text for kText. Byte-identical output for identical specs.
std::string render(const FeedbackSpec& spec);

std::string generate_text(const FeedbackSpec& spec);

const std::string& tip_text(Characteristic c, TipKind kind);

std::string slot_to_hhmm(int slot);

// JSON (de)serialization of specs, used by the CLI and the C API.
std::string feedback_spec_to_json(const FeedbackSpec& spec);
FeedbackSpec feedback_spec_from_json(const std::string& text);

}  // namespace mxai
