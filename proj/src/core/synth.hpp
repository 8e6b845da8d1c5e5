#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/meter_data.hpp"

namespace mxai {

struct PatternConfig {
  double positive_fraction = 0.5;
  int window_start_slot = 35;  // 17:30
  int window_end_slot = 38;    // 19:00 (exclusive)
  double amplitude_kwh = 1.5;
  double occurrence_prob = 0.8;   // per day, positive households
  double occurrence_spread = 0.5;  // household occurrence ~ U[p-s, p+s], clamped
  int jitter_slots = 1;           // uniform in [-jitter, +jitter]
};

struct SynthConfig {
  int n_households = 500;
  int weeks_per_household = 4;
  double base_load_kwh = 0.4;
  double base_load_spread = 1.4;  // five household size classes spanning [1/s, s]
  double diurnal_amplitude = 0.6;
  double noise_sigma = 0.55;          // lognormal, mean-one
  int weekend_morning_shift_slots = 4;  // weekend day shape starts later
  Date start_date = Date{20458};      // 2026-01-05, a Monday
  bool quota_sampling = false;        // exact positive counts instead of i.i.d. draws
  uint64_t seed = 7919;
  std::map<Characteristic, PatternConfig> patterns = {
      {Characteristic::kCooking, PatternConfig{}}};
};

struct SynthHousehold {
  std::string meter_id;
  std::map<Characteristic, bool> labels;
  std::map<Characteristic, std::pair<int, int>> windows;  // planted [start, end) for positives
};

struct SynthCorpus {
  std::vector<LoadProfile> profiles;
  std::vector<SynthHousehold> manifest;
  SynthConfig config;
};

// Validates invariants (fractions in [0,1], windows inside a day, amplitude
// above the noise floor) and throws usage_error on violations.
void validate_config(const SynthConfig& config);

// Deterministic corpus with planted, labeled activity patterns. Households
// draw from per-household seed streams, so the corpus is identical for any
// parallelism or generation order.
SynthCorpus generate_households(const SynthConfig& config);

SynthConfig synth_config_from_json(const std::string& text);
std::string synth_config_to_json(const SynthConfig& config);
std::string manifest_to_json(const SynthCorpus& corpus);

// Writes readings.csv, labels.csv and manifest.json into out_dir.
void write_corpus(const SynthCorpus& corpus, const std::string& out_dir);

}  // namespace mxai
