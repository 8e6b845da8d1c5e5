#include "core/xai_eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "core/errors.hpp"
#include "core/features.hpp"
#include "core/parallel.hpp"
#include "core/rng.hpp"

namespace mxai {

namespace {

// Indices of the k largest phi values; ties resolved toward lower index.
std::vector<int> top_k_segments(const std::vector<double>& phi, int k) {
  std::vector<int> idx(phi.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return phi[static_cast<std::size_t>(a)] > phi[static_cast<std::size_t>(b)];
  });
  idx.resize(static_cast<std::size_t>(std::min<int>(k, static_cast<int>(phi.size()))));
  return idx;
}

struct SampledWeek {
  std::size_t profile_index = 0;
  WeekSlice week;
};

// One random valid week per sampled household; deterministic in
// (dataset order, seed) and independent of thread count.
std::vector<SampledWeek> sample_household_weeks(const std::vector<LoadProfile>& dataset,
                                                const XaiEvalConfig& config,
                                                const char* metric_name) {
  std::vector<std::pair<std::size_t, std::vector<WeekSlice>>> eligible;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto weeks = segment_weeks(dataset[i], config.completeness_threshold);
    if (!weeks.empty()) eligible.emplace_back(i, std::move(weeks));
  }
  if (eligible.size() < static_cast<std::size_t>(config.n_samples)) {
    throw data_error(std::string(metric_name) + ": dataset has " +
                     std::to_string(eligible.size()) + " households with valid weeks, need " +
                     std::to_string(config.n_samples));
  }

  Rng rng = Rng::stream(config.seed, /*a=*/21);
  // partial Fisher-Yates over eligible households
  std::vector<std::size_t> order(eligible.size());
  std::iota(order.begin(), order.end(), 0);
  for (int j = 0; j < config.n_samples; ++j) {
    const std::size_t pick =
        static_cast<std::size_t>(j) + rng.uniform_below(eligible.size() - static_cast<std::size_t>(j));
    std::swap(order[static_cast<std::size_t>(j)], order[pick]);
  }

  std::vector<SampledWeek> out;
  out.reserve(static_cast<std::size_t>(config.n_samples));
  for (int j = 0; j < config.n_samples; ++j) {
    auto& [profile_index, weeks] = eligible[order[static_cast<std::size_t>(j)]];
    Rng week_rng = Rng::stream(config.seed, /*a=*/22, /*b=*/static_cast<uint64_t>(j));
    const std::size_t w = week_rng.uniform_below(weeks.size());
    out.push_back(SampledWeek{profile_index, weeks[w]});
  }
  return out;
}

WeekSlice pick_background(const WeekSlice& week, BackgroundMode mode,
                          const WeekSlice* global_background) {
  if (mode == BackgroundMode::kGlobal && global_background != nullptr) {
    WeekSlice bg = *global_background;
    bg.meter_id = week.meter_id;
    bg.week_start = week.week_start;
    return bg;
  }
  return household_mean_background(week);
}

WeekSlice build_global_background(const std::vector<LoadProfile>& dataset,
                                  double completeness_threshold) {
  std::vector<WeekSlice> all;
  for (const auto& p : dataset) {
    for (auto& w : segment_weeks(p, completeness_threshold)) all.push_back(std::move(w));
  }
  if (all.empty()) throw data_error("no valid weeks available for the global background");
  return corpus_mean_background(all);
}

std::vector<double> run_explainer(const ModelFn& fn, const WeekSlice& week,
                                  const SegmentScheme& scheme, const WeekSlice& background,
                                  const XaiEvalConfig& config, uint64_t sample_seed) {
  switch (config.explainer) {
    case ExplainerKind::kKernelShap: {
      KernelShapConfig kc;
      kc.n_coalitions = config.n_coalitions;
      kc.seed = sample_seed;
      kc.threads = 1;  // parallelism lives at the sample level
      return explain_kernel_shap(fn, week, scheme, background, kc).phi;
    }
    case ExplainerKind::kLime: {
      LimeConfig lc;
      lc.n_perturbations = config.lime_perturbations;
      lc.seed = sample_seed;
      lc.threads = 1;
      return explain_lime(fn, week, scheme, background, lc).phi;
    }
    case ExplainerKind::kRandom: {
      Rng rng(sample_seed);
      std::vector<double> phi(static_cast<std::size_t>(scheme.n_segments));
      for (auto& v : phi) v = rng.uniform(-1.0, 1.0);
      return phi;
    }
  }
  throw usage_error("unknown explainer kind");
}

}  // namespace

const char* to_string(ExplainerKind k) {
  switch (k) {
    case ExplainerKind::kKernelShap: return "kernel-shap";
    case ExplainerKind::kLime: return "lime";
    case ExplainerKind::kRandom: return "random";
  }
  return "?";
}

WeekSlice blur_segments(const WeekSlice& week, const Attribution& attribution, int top_k) {
  if (top_k > attribution.scheme.n_segments) {
    throw usage_error("blur_segments: top_k exceeds segment count");
  }
  const auto tod_mean = time_of_day_mean(week);
  const auto chosen = top_k_segments(attribution.phi, top_k);

  std::vector<bool> blur(static_cast<std::size_t>(attribution.scheme.n_segments), false);
  for (int seg : chosen) blur[static_cast<std::size_t>(seg)] = true;

  WeekSlice out = week;
  for (int i = 0; i < kSlotsPerWeek; ++i) {
    const int seg = attribution.scheme.slot_to_segment[static_cast<std::size_t>(i)];
    if (!blur[static_cast<std::size_t>(seg)]) continue;
    const double mu = tod_mean[static_cast<std::size_t>(i % kSlotsPerDay)];
    const double mirrored = 2.0 * mu - out.values[static_cast<std::size_t>(i)];
    out.values[static_cast<std::size_t>(i)] = std::max(mirrored, 0.01 * mu);
  }
  return out;
}

ModelFn forest_week_model(const ForestModel& model) {
  const ForestModel* m = &model;
  return [m](const WeekSlice& week) {
    const FeatureVector fv = extract_features(week);
    return predict_proba(*m, fv.values.data(), fv.values.size());
  };
}

XaiScore faithfulness(const ForestModel& model, const std::vector<LoadProfile>& dataset,
                      const XaiEvalConfig& config) {
  const auto samples = sample_household_weeks(dataset, config, "faithfulness");
  const SegmentScheme scheme = SegmentScheme::time_of_day(config.n_segments);
  const int top_k =
      std::max(1, static_cast<int>(std::ceil(config.top_k_fraction * scheme.n_segments)));
  const ModelFn fn = forest_week_model(model);

  WeekSlice global_bg;
  const bool use_global = config.background == BackgroundMode::kGlobal;
  if (use_global) global_bg = build_global_background(dataset, config.completeness_threshold);

  std::vector<int> flipped(samples.size(), 0);
  parallel_for(samples.size(), config.threads, [&](std::size_t i) {
    const WeekSlice& week = samples[i].week;
    const WeekSlice background =
        pick_background(week, config.background, use_global ? &global_bg : nullptr);
    const uint64_t sample_seed = Rng::stream(config.seed, /*a=*/23, /*b=*/i).next_u64();

    Attribution a;
    a.scheme = scheme;
    a.phi = run_explainer(fn, week, scheme, background, config, sample_seed);

    const double before = fn(week);
    const double after = fn(blur_segments(week, a, top_k));
    const bool class_before = before >= config.class_threshold;
    const bool class_after = after >= config.class_threshold;
    flipped[i] = class_before != class_after ? 1 : 0;
  });

  XaiScore score;
  score.metric = XaiMetric::kFaithfulness;
  score.n_sampled = static_cast<int>(samples.size());
  score.seed = config.seed;
  score.top_k = top_k;
  score.value = static_cast<double>(std::accumulate(flipped.begin(), flipped.end(), 0)) /
                static_cast<double>(samples.size());
  return score;
}

double stability_sample_score(const SegmentScheme& scheme, const std::vector<double>& phi,
                              int top_k_per_day) {
  if (!scheme.per_day) throw usage_error("stability requires a day-resolving scheme");
  if (phi.size() != static_cast<std::size_t>(scheme.n_segments)) {
    throw usage_error("stability: phi length does not match the scheme");
  }
  const int per_day_segments = scheme.n_segments / kDaysPerWeek;
  const int k = std::min(top_k_per_day, per_day_segments);
  if (k < 1) throw usage_error("stability: top_k_per_day must be >= 1");

  // top-k segments per day, mapped to their time-of-day stamps
  std::vector<std::set<int>> day_stamps(kDaysPerWeek);
  for (int d = 0; d < kDaysPerWeek; ++d) {
    std::vector<double> day_phi(phi.begin() + d * per_day_segments,
                                phi.begin() + (d + 1) * per_day_segments);
    for (int seg : top_k_segments(day_phi, k)) day_stamps[static_cast<std::size_t>(d)].insert(seg);
  }
  std::map<int, int> days_per_stamp;
  for (const auto& stamps : day_stamps) {
    for (int s : stamps) ++days_per_stamp[s];
  }
  int recurring = 0, total = 0;
  for (const auto& stamps : day_stamps) {
    for (int s : stamps) {
      ++total;
      if (days_per_stamp[s] >= 2) ++recurring;
    }
  }
  return total > 0 ? static_cast<double>(recurring) / total : 0.0;
}

XaiScore stability(const ForestModel& model, const std::vector<LoadProfile>& dataset,
                   const XaiEvalConfig& config) {
  const SegmentScheme scheme = SegmentScheme::hourly_week();
  const int per_day_segments = scheme.n_segments / kDaysPerWeek;
  const int k = std::min(config.top_k_per_day, per_day_segments);
  if (k < 1) throw usage_error("stability: top_k_per_day must be >= 1");

  const auto samples = sample_household_weeks(dataset, config, "stability");
  const ModelFn fn = forest_week_model(model);

  WeekSlice global_bg;
  const bool use_global = config.background == BackgroundMode::kGlobal;
  if (use_global) global_bg = build_global_background(dataset, config.completeness_threshold);

  std::vector<double> per_sample(samples.size(), 0.0);
  parallel_for(samples.size(), config.threads, [&](std::size_t i) {
    const WeekSlice& week = samples[i].week;
    const WeekSlice background =
        pick_background(week, config.background, use_global ? &global_bg : nullptr);
    const uint64_t sample_seed = Rng::stream(config.seed, /*a=*/24, /*b=*/i).next_u64();
    const std::vector<double> phi =
        run_explainer(fn, week, scheme, background, config, sample_seed);
    per_sample[i] = stability_sample_score(scheme, phi, k);
  });

  XaiScore score;
  score.metric = XaiMetric::kStability;
  score.n_sampled = static_cast<int>(samples.size());
  score.seed = config.seed;
  score.top_k = k;
  score.value = std::accumulate(per_sample.begin(), per_sample.end(), 0.0) /
                static_cast<double>(samples.size());
  return score;
}

double localization_score(const Attribution& attribution, int window_start_slot,
                          int window_end_slot) {
  if (window_start_slot < 0 || window_end_slot > kSlotsPerDay ||
      window_start_slot >= window_end_slot) {
    throw usage_error("localization: window must satisfy 0 <= start < end <= 48");
  }
  double total = 0.0, inside = 0.0;
  for (int j = 0; j < attribution.scheme.n_segments; ++j) {
    const double phi = attribution.phi[static_cast<std::size_t>(j)];
    if (phi <= 0.0) continue;
    const auto slots = attribution.scheme.segment_slots(j);
    if (slots.empty()) continue;
    int in = 0;
    for (int s : slots) {
      const int tod = s % kSlotsPerDay;
      if (tod >= window_start_slot && tod < window_end_slot) ++in;
    }
    total += phi;
    inside += phi * static_cast<double>(in) / static_cast<double>(slots.size());
  }
  if (total <= 0.0) return 0.0;
  return inside / total;
}

XaiScore localization(const ForestModel& model, const std::vector<LoadProfile>& dataset,
                      const std::vector<LocalizationWindow>& windows,
                      const XaiEvalConfig& config) {
  std::map<std::string, std::pair<int, int>> window_by_meter;
  for (const auto& w : windows) window_by_meter[w.meter_id] = {w.start_slot, w.end_slot};

  // Restrict sampling to households with a planted window.
  std::vector<LoadProfile> planted;
  for (const auto& p : dataset) {
    if (window_by_meter.count(p.meter_id)) planted.push_back(p);
  }
  const auto samples = sample_household_weeks(planted, config, "localization");
  const SegmentScheme scheme = SegmentScheme::time_of_day(config.n_segments);
  const ModelFn fn = forest_week_model(model);

  WeekSlice global_bg;
  const bool use_global = config.background == BackgroundMode::kGlobal;
  if (use_global) global_bg = build_global_background(dataset, config.completeness_threshold);

  std::vector<double> per_sample(samples.size(), 0.0);
  parallel_for(samples.size(), config.threads, [&](std::size_t i) {
    const WeekSlice& week = samples[i].week;
    const WeekSlice background =
        pick_background(week, config.background, use_global ? &global_bg : nullptr);
    const uint64_t sample_seed = Rng::stream(config.seed, /*a=*/25, /*b=*/i).next_u64();

    Attribution a;
    a.scheme = scheme;
    a.phi = run_explainer(fn, week, scheme, background, config, sample_seed);
    const auto [ws, we] = window_by_meter.at(week.meter_id);
    per_sample[i] = localization_score(a, ws, we);
  });

  XaiScore score;
  score.metric = XaiMetric::kLocalization;
  score.n_sampled = static_cast<int>(samples.size());
  score.seed = config.seed;
  score.value = std::accumulate(per_sample.begin(), per_sample.end(), 0.0) /
                static_cast<double>(samples.size());
  return score;
}

}  // namespace mxai
