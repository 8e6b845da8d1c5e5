#include "core/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/textio.hpp"

namespace mxai {

using json = nlohmann::json;

namespace {

// Smooth daytime shape in [0, 1]: zero overnight, a mild morning shoulder and
// a late-evening peak (lighting and entertainment rather than cooking).
// `shift` delays the whole curve (weekend mornings).
double diurnal_shape(int slot, double shift_slots) {
  const double h = (static_cast<double>(slot) - shift_slots) / 2.0;  // hours
  const double morning = std::exp(-(h - 8.0) * (h - 8.0) / 8.0);
  const double evening = std::exp(-(h - 21.0) * (h - 21.0) / 14.0);
  return 0.5 * morning + evening;
}

}  // namespace

void validate_config(const SynthConfig& config) {
  if (config.n_households < 1) throw usage_error("synth: n_households must be >= 1");
  if (config.weeks_per_household < 1) throw usage_error("synth: weeks_per_household must be >= 1");
  if (config.base_load_kwh < 0 || config.diurnal_amplitude < 0) {
    throw usage_error("synth: base load and diurnal amplitude must be non-negative");
  }
  if (config.noise_sigma < 0) throw usage_error("synth: noise_sigma must be non-negative");
  if (config.base_load_spread < 1.0) {
    throw usage_error("synth: base_load_spread must be >= 1 (1 = homogeneous)");
  }
  if (weekday(config.start_date) != 0) throw usage_error("synth: start_date must be a Monday");
  for (const auto& [c, p] : config.patterns) {
    if (p.positive_fraction < 0.0 || p.positive_fraction > 1.0) {
      throw usage_error(std::string("synth: positive_fraction for ") + to_string(c) +
                        " must lie in [0, 1]");
    }
    if (p.window_start_slot < 0 || p.window_end_slot > kSlotsPerDay ||
        p.window_start_slot >= p.window_end_slot) {
      throw usage_error(std::string("synth: pattern window for ") + to_string(c) +
                        " must satisfy 0 <= start < end <= 48");
    }
    if (p.occurrence_prob < 0.0 || p.occurrence_prob > 1.0) {
      throw usage_error("synth: occurrence_prob must lie in [0, 1]");
    }
    if (p.occurrence_spread < 0.0 || p.occurrence_spread > 0.5) {
      throw usage_error("synth: occurrence_spread must lie in [0, 0.5]");
    }
    if (p.jitter_slots < 0) throw usage_error("synth: jitter_slots must be >= 0");
    if (p.amplitude_kwh > 0.0 && p.amplitude_kwh <= config.noise_sigma * config.base_load_kwh) {
      throw usage_error(std::string("synth: amplitude for ") + to_string(c) +
                        " must exceed the noise floor (or be exactly 0 for a null control)");
    }
    if (p.amplitude_kwh < 0.0) throw usage_error("synth: amplitude must be >= 0");
  }
}

SynthCorpus generate_households(const SynthConfig& config) {
  validate_config(config);

  SynthCorpus corpus;
  corpus.config = config;
  corpus.profiles.resize(static_cast<std::size_t>(config.n_households));
  corpus.manifest.resize(static_cast<std::size_t>(config.n_households));

  // Quota sampling: the first ceil(fraction * n) of a seeded permutation are
  // positive. Otherwise labels are i.i.d. per household.
  std::map<Characteristic, std::vector<bool>> quota_labels;
  if (config.quota_sampling) {
    for (const auto& [c, p] : config.patterns) {
      std::vector<std::size_t> order(static_cast<std::size_t>(config.n_households));
      std::iota(order.begin(), order.end(), 0);
      Rng rng = Rng::stream(config.seed, /*a=*/41, /*b=*/static_cast<uint64_t>(c));
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.uniform_below(i)]);
      }
      const auto n_pos = static_cast<std::size_t>(
          std::ceil(p.positive_fraction * config.n_households));
      std::vector<bool> labels(static_cast<std::size_t>(config.n_households), false);
      for (std::size_t i = 0; i < n_pos && i < order.size(); ++i) labels[order[i]] = true;
      quota_labels[c] = std::move(labels);
    }
  }

  const int n_days = config.weeks_per_household * kDaysPerWeek;
  for (int h = 0; h < config.n_households; ++h) {
    Rng rng = Rng::stream(config.seed, /*a=*/42, /*b=*/static_cast<uint64_t>(h));
    char meter[16];
    std::snprintf(meter, sizeof(meter), "h%04d", h + 1);

    SynthHousehold manifest_row;
    manifest_row.meter_id = meter;

    // Household-level heterogeneity: base level and routine regularity. The
    // base level is drawn from five discrete size classes; a continuum would
    // give every household a unique fingerprint that leaks labels across
    // weeks under ungrouped cross-validation.
    const double log_spread = std::log(config.base_load_spread);
    const int size_class = static_cast<int>(rng.uniform_below(5));
    const double base_multiplier = std::exp(log_spread * (size_class - 2) / 2.0);
    const double household_base = config.base_load_kwh * base_multiplier;

    std::map<Characteristic, PatternConfig> active;
    for (const auto& [c, p] : config.patterns) {
      const bool positive = config.quota_sampling
                                ? quota_labels.at(c)[static_cast<std::size_t>(h)]
                                : rng.bernoulli(p.positive_fraction);
      manifest_row.labels[c] = positive;
      if (positive) {
        // the true support of the planted pattern includes the jitter range
        manifest_row.windows[c] = {std::max(0, p.window_start_slot - p.jitter_slots),
                                   std::min(kSlotsPerDay, p.window_end_slot + p.jitter_slots)};
        PatternConfig hp = p;
        hp.occurrence_prob = std::clamp(
            p.occurrence_prob + rng.uniform(-p.occurrence_spread, p.occurrence_spread), 0.05, 1.0);
        active[c] = hp;
      }
    }

    LoadProfile profile;
    profile.meter_id = meter;
    profile.labels = manifest_row.labels;
    profile.readings.reserve(static_cast<std::size_t>(n_days) * kSlotsPerDay);

    for (int day = 0; day < n_days; ++day) {
      const Date date = add_days(config.start_date, day);
      const bool weekend = weekday(date) >= 5;
      const double shift = weekend ? config.weekend_morning_shift_slots : 0.0;

      std::array<double, kSlotsPerDay> bump{};
      for (const auto& [c, p] : active) {
        if (p.amplitude_kwh <= 0.0) continue;
        if (!rng.bernoulli(p.occurrence_prob)) continue;
        const int jitter =
            p.jitter_slots > 0
                ? static_cast<int>(rng.uniform_below(2 * static_cast<uint64_t>(p.jitter_slots) + 1)) -
                      p.jitter_slots
                : 0;
        const int lo = std::max(0, p.window_start_slot + jitter);
        const int hi = std::min(kSlotsPerDay, p.window_end_slot + jitter);
        for (int s = lo; s < hi; ++s) bump[static_cast<std::size_t>(s)] += p.amplitude_kwh;
      }

      for (int s = 0; s < kSlotsPerDay; ++s) {
        const double level = household_base +
                             base_multiplier * config.diurnal_amplitude * diurnal_shape(s, shift) +
                             bump[static_cast<std::size_t>(s)];
        const double noise =
            config.noise_sigma > 0
                ? std::exp(config.noise_sigma * rng.normal() -
                           0.5 * config.noise_sigma * config.noise_sigma)
                : 1.0;
        Reading r;
        r.date = date;
        r.slot = s;
        r.kwh = level * noise;
        profile.readings.push_back(r);
      }
    }

    corpus.profiles[static_cast<std::size_t>(h)] = std::move(profile);
    corpus.manifest[static_cast<std::size_t>(h)] = std::move(manifest_row);
  }
  return corpus;
}

SynthConfig synth_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw data_error(std::string("synth config is not valid JSON: ") + e.what());
  }
  SynthConfig c;
  try {
    c.n_households = j.value("n_households", c.n_households);
    c.weeks_per_household = j.value("weeks_per_household", c.weeks_per_household);
    c.base_load_kwh = j.value("base_load_kwh", c.base_load_kwh);
    c.base_load_spread = j.value("base_load_spread", c.base_load_spread);
    c.diurnal_amplitude = j.value("diurnal_amplitude", c.diurnal_amplitude);
    c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
    c.weekend_morning_shift_slots =
        j.value("weekend_morning_shift_slots", c.weekend_morning_shift_slots);
    if (j.contains("start_date")) c.start_date = parse_iso_date(j.at("start_date"));
    c.quota_sampling = j.value("quota_sampling", c.quota_sampling);
    c.seed = j.value("seed", c.seed);
    if (j.contains("patterns")) {
      c.patterns.clear();
      for (const auto& [key, pj] : j.at("patterns").items()) {
        const auto ch = characteristic_from_string(key);
        if (!ch) throw data_error("synth config: unknown characteristic '" + key + "'");
        PatternConfig p;
        p.positive_fraction = pj.value("positive_fraction", p.positive_fraction);
        p.window_start_slot = pj.value("window_start_slot", p.window_start_slot);
        p.window_end_slot = pj.value("window_end_slot", p.window_end_slot);
        p.amplitude_kwh = pj.value("amplitude_kwh", p.amplitude_kwh);
        p.occurrence_prob = pj.value("occurrence_prob", p.occurrence_prob);
        p.occurrence_spread = pj.value("occurrence_spread", p.occurrence_spread);
        p.jitter_slots = pj.value("jitter_slots", p.jitter_slots);
        c.patterns[*ch] = p;
      }
    }
  } catch (const json::exception& e) {
    throw data_error(std::string("malformed synth config: ") + e.what());
  }
  return c;
}

std::string synth_config_to_json(const SynthConfig& c) {
  json j;
  j["n_households"] = c.n_households;
  j["weeks_per_household"] = c.weeks_per_household;
  j["base_load_kwh"] = c.base_load_kwh;
  j["base_load_spread"] = c.base_load_spread;
  j["diurnal_amplitude"] = c.diurnal_amplitude;
  j["noise_sigma"] = c.noise_sigma;
  j["weekend_morning_shift_slots"] = c.weekend_morning_shift_slots;
  j["start_date"] = format_iso_date(c.start_date);
  j["quota_sampling"] = c.quota_sampling;
  j["seed"] = c.seed;
  json patterns = json::object();
  for (const auto& [ch, p] : c.patterns) {
    json pj;
    pj["positive_fraction"] = p.positive_fraction;
    pj["window_start_slot"] = p.window_start_slot;
    pj["window_end_slot"] = p.window_end_slot;
    pj["amplitude_kwh"] = p.amplitude_kwh;
    pj["occurrence_prob"] = p.occurrence_prob;
    pj["occurrence_spread"] = p.occurrence_spread;
    pj["jitter_slots"] = p.jitter_slots;
    patterns[to_string(ch)] = pj;
  }
  j["patterns"] = patterns;
  return j.dump(2);
}

std::string manifest_to_json(const SynthCorpus& corpus) {
  json j;
  j["seed"] = corpus.config.seed;
  j["config"] = json::parse(synth_config_to_json(corpus.config));
  json rows = json::array();
  for (const auto& h : corpus.manifest) {
    json r;
    r["meter_id"] = h.meter_id;
    json labels = json::object();
    for (const auto& [c, v] : h.labels) labels[to_string(c)] = v;
    r["labels"] = labels;
    json windows = json::object();
    for (const auto& [c, w] : h.windows) {
      windows[to_string(c)] = json::array({w.first, w.second});
    }
    r["windows"] = windows;
    rows.push_back(std::move(r));
  }
  j["households"] = std::move(rows);
  return j.dump(2);
}

void write_corpus(const SynthCorpus& corpus, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_text_file(out_dir + "/readings.csv", write_readings_csv(corpus.profiles));
  write_text_file(out_dir + "/labels.csv", write_labels_csv(corpus.profiles));
  write_text_file(out_dir + "/manifest.json", manifest_to_json(corpus));
}

}  // namespace mxai
