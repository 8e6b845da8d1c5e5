#include "core/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "core/errors.hpp"
#include "core/textio.hpp"

namespace mxai {

namespace {

constexpr double kDenomGuard = 1e-9;
constexpr double kVarGuard = 1e-18;

// Six time-of-day periods, in slots: night 0-6h, morning 6-10h, noon 10-14h,
// afternoon 14-18h, evening 18-22h, late 22-24h.
constexpr int kNumPeriods = 6;
constexpr int kPeriodStart[kNumPeriods] = {0, 12, 20, 28, 36, 44};
constexpr int kPeriodEnd[kNumPeriods] = {12, 20, 28, 36, 44, 48};
const char* const kPeriodName[kNumPeriods] = {"night", "morning", "noon",
                                              "afternoon", "evening", "late"};

double guarded_ratio(double num, double den) {
  if (std::abs(den) < kDenomGuard) return 0.0;
  return num / den;
}

struct Stats {
  double mean = 0.0, mx = 0.0, mn = 0.0, var = 0.0;
};

Stats stats_of(const std::vector<double>& xs) {
  Stats s;
  if (xs.empty()) return s;
  s.mx = xs[0];
  s.mn = xs[0];
  for (double x : xs) {
    s.mean += x;
    s.mx = std::max(s.mx, x);
    s.mn = std::min(s.mn, x);
  }
  s.mean /= static_cast<double>(xs.size());
  for (double x : xs) s.var += (x - s.mean) * (x - s.mean);
  s.var /= static_cast<double>(xs.size());
  return s;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  if (n == 0 || n != b.size()) return 0.0;
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa < kVarGuard || sbb < kVarGuard) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

double autocorr(const std::array<double, kSlotsPerWeek>& x, int lag) {
  std::vector<double> head, tail;
  head.reserve(kSlotsPerWeek - lag);
  tail.reserve(kSlotsPerWeek - lag);
  for (int t = 0; t + lag < kSlotsPerWeek; ++t) {
    head.push_back(x[static_cast<std::size_t>(t)]);
    tail.push_back(x[static_cast<std::size_t>(t + lag)]);
  }
  return pearson(head, tail);
}

// Type-7 quantile (linear interpolation on the sorted sample).
double quantile(std::vector<double> xs, double p) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const double h = (static_cast<double>(xs.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

std::vector<double> collect(const WeekSlice& w, int day_begin, int day_end, int slot_begin,
                            int slot_end) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>((day_end - day_begin) * (slot_end - slot_begin)));
  for (int d = day_begin; d < day_end; ++d) {
    for (int s = slot_begin; s < slot_end; ++s) {
      out.push_back(w.values[static_cast<std::size_t>(d * kSlotsPerDay + s)]);
    }
  }
  return out;
}

int argmax_slot(const std::vector<double>& profile) {
  int best = 0;
  for (int s = 1; s < static_cast<int>(profile.size()); ++s) {
    if (profile[static_cast<std::size_t>(s)] > profile[static_cast<std::size_t>(best)]) best = s;
  }
  return best;
}

int argmin_slot(const std::vector<double>& profile) {
  int best = 0;
  for (int s = 1; s < static_cast<int>(profile.size()); ++s) {
    if (profile[static_cast<std::size_t>(s)] < profile[static_cast<std::size_t>(best)]) best = s;
  }
  return best;
}

std::vector<double> mean_profile(const WeekSlice& w, int day_begin, int day_end) {
  std::vector<double> m(kSlotsPerDay, 0.0);
  for (int d = day_begin; d < day_end; ++d) {
    for (int s = 0; s < kSlotsPerDay; ++s) {
      m[static_cast<std::size_t>(s)] += w.values[static_cast<std::size_t>(d * kSlotsPerDay + s)];
    }
  }
  for (auto& v : m) v /= static_cast<double>(day_end - day_begin);
  return m;
}

std::vector<std::string> build_names() {
  std::vector<std::string> n;
  n.reserve(kNumFeatures);
  // (a) consumption figures
  for (const char* g : {"week", "weekday", "weekend"}) {
    n.push_back(std::string("mean_") + g);
    n.push_back(std::string("max_") + g);
    n.push_back(std::string("min_") + g);
  }
  for (int p = 0; p < kNumPeriods; ++p) {
    n.push_back(std::string("mean_") + kPeriodName[p]);
    n.push_back(std::string("max_") + kPeriodName[p]);
    n.push_back(std::string("min_") + kPeriodName[p]);
  }
  for (int p = 0; p < kNumPeriods; ++p) n.push_back(std::string("mean_") + kPeriodName[p] + "_weekday");
  for (int p = 0; p < kNumPeriods; ++p) n.push_back(std::string("mean_") + kPeriodName[p] + "_weekend");
  // (b) ratios
  n.push_back("ratio_max_mean");
  n.push_back("ratio_min_mean");
  n.push_back("ratio_weekday_weekend");
  for (int p = 0; p < kNumPeriods; ++p) n.push_back(std::string("ratio_") + kPeriodName[p] + "_week");
  n.push_back("ratio_evening_noon");
  n.push_back("ratio_noon_morning");
  n.push_back("ratio_morning_night");
  n.push_back("ratio_afternoon_noon");
  n.push_back("ratio_late_evening");
  n.push_back("ratio_base_peak");
  n.push_back("ratio_daily_base_peak");
  // (c) temporal
  n.push_back("first_above_mean");
  n.push_back("first_above_mean_weekday");
  n.push_back("first_above_mean_weekend");
  n.push_back("peak_width");
  n.push_back("n_above_half_max_week");
  n.push_back("n_above_half_max_day");
  n.push_back("autocorr_lag1");
  n.push_back("autocorr_day");
  n.push_back("autocorr_week");
  n.push_back("peak_slot");
  n.push_back("min_slot");
  n.push_back("peak_slot_weekday");
  n.push_back("peak_slot_weekend");
  for (int d = 0; d < kDaysPerWeek; ++d) n.push_back("peak_slot_day" + std::to_string(d));
  n.push_back("n_zero_slots");
  // (d) statistical
  n.push_back("var_week");
  n.push_back("std_week");
  n.push_back("q1_week");
  n.push_back("median_week");
  n.push_back("q3_week");
  n.push_back("iqr_week");
  n.push_back("std_daily_means");
  n.push_back("std_daily_maxes");
  n.push_back("cross_day_corr");
  n.push_back("weekday_weekend_corr");
  n.push_back("std_tod_profile");
  for (int p = 0; p < kNumPeriods; ++p) n.push_back(std::string("std_") + kPeriodName[p]);
  return n;
}

}  // namespace

const std::array<std::string, kNumFeatures>& feature_names() {
  static const std::array<std::string, kNumFeatures> names = [] {
    const auto v = build_names();
    std::array<std::string, kNumFeatures> a;
    for (std::size_t i = 0; i < kNumFeatures; ++i) a[i] = v[i];
    return a;
  }();
  return names;
}

FeatureVector extract_features(const WeekSlice& week) {
  FeatureVector fv;
  fv.meter_id = week.meter_id;
  fv.week_start = week.week_start;
  std::size_t k = 0;
  auto emit = [&](double v) { fv.values[k++] = std::isfinite(v) ? v : 0.0; };

  const auto all = collect(week, 0, 7, 0, kSlotsPerDay);
  const auto wd = collect(week, 0, 5, 0, kSlotsPerDay);
  const auto we = collect(week, 5, 7, 0, kSlotsPerDay);
  const Stats s_all = stats_of(all);
  const Stats s_wd = stats_of(wd);
  const Stats s_we = stats_of(we);

  // (a) consumption figures
  emit(s_all.mean);
  emit(s_all.mx);
  emit(s_all.mn);
  emit(s_wd.mean);
  emit(s_wd.mx);
  emit(s_wd.mn);
  emit(s_we.mean);
  emit(s_we.mx);
  emit(s_we.mn);

  std::array<Stats, kNumPeriods> period_stats;
  for (int p = 0; p < kNumPeriods; ++p) {
    period_stats[static_cast<std::size_t>(p)] =
        stats_of(collect(week, 0, 7, kPeriodStart[p], kPeriodEnd[p]));
    emit(period_stats[static_cast<std::size_t>(p)].mean);
    emit(period_stats[static_cast<std::size_t>(p)].mx);
    emit(period_stats[static_cast<std::size_t>(p)].mn);
  }
  for (int p = 0; p < kNumPeriods; ++p) {
    emit(stats_of(collect(week, 0, 5, kPeriodStart[p], kPeriodEnd[p])).mean);
  }
  for (int p = 0; p < kNumPeriods; ++p) {
    emit(stats_of(collect(week, 5, 7, kPeriodStart[p], kPeriodEnd[p])).mean);
  }

  // (b) ratios
  emit(guarded_ratio(s_all.mx, s_all.mean));
  emit(guarded_ratio(s_all.mn, s_all.mean));
  emit(guarded_ratio(s_wd.mean, s_we.mean));
  for (int p = 0; p < kNumPeriods; ++p) {
    emit(guarded_ratio(period_stats[static_cast<std::size_t>(p)].mean, s_all.mean));
  }
  const auto pmean = [&](int p) { return period_stats[static_cast<std::size_t>(p)].mean; };
  emit(guarded_ratio(pmean(4), pmean(2)));  // evening / noon
  emit(guarded_ratio(pmean(2), pmean(1)));  // noon / morning
  emit(guarded_ratio(pmean(1), pmean(0)));  // morning / night
  emit(guarded_ratio(pmean(3), pmean(2)));  // afternoon / noon
  emit(guarded_ratio(pmean(5), pmean(4)));  // late / evening
  emit(guarded_ratio(s_all.mn, s_all.mx));
  {
    double acc = 0.0;
    for (int d = 0; d < kDaysPerWeek; ++d) {
      const Stats sd = stats_of(collect(week, d, d + 1, 0, kSlotsPerDay));
      acc += guarded_ratio(sd.mn, sd.mx);
    }
    emit(acc / kDaysPerWeek);
  }

  // (c) temporal
  auto first_above = [&](int day_begin, int day_end) {
    double acc = 0.0;
    for (int d = day_begin; d < day_end; ++d) {
      const auto day = collect(week, d, d + 1, 0, kSlotsPerDay);
      const Stats sd = stats_of(day);
      int first = kSlotsPerDay;
      for (int s = 0; s < kSlotsPerDay; ++s) {
        if (day[static_cast<std::size_t>(s)] > sd.mean) {
          first = s;
          break;
        }
      }
      acc += first;
    }
    return acc / static_cast<double>(day_end - day_begin);
  };
  emit(first_above(0, 7));
  emit(first_above(0, 5));
  emit(first_above(5, 7));

  const auto tod = mean_profile(week, 0, 7);
  {
    const Stats st = stats_of(tod);
    if (st.mx < kDenomGuard) {
      emit(0.0);  // peak width undefined on an all-zero week
    } else {
      const int peak = argmax_slot(tod);
      int lo = peak, hi = peak;
      while (lo > 0 && tod[static_cast<std::size_t>(lo - 1)] >= 0.5 * st.mx) --lo;
      while (hi + 1 < kSlotsPerDay && tod[static_cast<std::size_t>(hi + 1)] >= 0.5 * st.mx) ++hi;
      emit(static_cast<double>(hi - lo + 1));
    }
  }
  {
    int count = 0;
    for (double v : all) count += v > 0.5 * s_all.mx ? 1 : 0;
    emit(static_cast<double>(count));
  }
  {
    double acc = 0.0;
    for (int d = 0; d < kDaysPerWeek; ++d) {
      const auto day = collect(week, d, d + 1, 0, kSlotsPerDay);
      const Stats sd = stats_of(day);
      int count = 0;
      for (double v : day) count += v > 0.5 * sd.mx ? 1 : 0;
      acc += count;
    }
    emit(acc / kDaysPerWeek);
  }
  emit(autocorr(week.values, 1));
  emit(autocorr(week.values, kSlotsPerDay));
  emit(autocorr(week.values, 6 * kSlotsPerDay));
  emit(static_cast<double>(argmax_slot(tod)));
  emit(static_cast<double>(argmin_slot(tod)));
  emit(static_cast<double>(argmax_slot(mean_profile(week, 0, 5))));
  emit(static_cast<double>(argmax_slot(mean_profile(week, 5, 7))));
  for (int d = 0; d < kDaysPerWeek; ++d) {
    emit(static_cast<double>(argmax_slot(collect(week, d, d + 1, 0, kSlotsPerDay))));
  }
  {
    int zeros = 0;
    for (double v : all) zeros += v < kDenomGuard ? 1 : 0;
    emit(static_cast<double>(zeros));
  }

  // (d) statistical
  emit(s_all.var);
  emit(std::sqrt(s_all.var));
  const double q1 = quantile(all, 0.25);
  const double q3 = quantile(all, 0.75);
  emit(q1);
  emit(quantile(all, 0.5));
  emit(q3);
  emit(q3 - q1);
  {
    std::vector<double> dmeans, dmaxes;
    for (int d = 0; d < kDaysPerWeek; ++d) {
      const Stats sd = stats_of(collect(week, d, d + 1, 0, kSlotsPerDay));
      dmeans.push_back(sd.mean);
      dmaxes.push_back(sd.mx);
    }
    emit(std::sqrt(stats_of(dmeans).var));
    emit(std::sqrt(stats_of(dmaxes).var));
  }
  {
    double acc = 0.0;
    int pairs = 0;
    std::array<std::vector<double>, kDaysPerWeek> day_profiles;
    for (int d = 0; d < kDaysPerWeek; ++d) day_profiles[static_cast<std::size_t>(d)] = collect(week, d, d + 1, 0, kSlotsPerDay);
    for (int a = 0; a < kDaysPerWeek; ++a) {
      for (int b = a + 1; b < kDaysPerWeek; ++b) {
        acc += pearson(day_profiles[static_cast<std::size_t>(a)], day_profiles[static_cast<std::size_t>(b)]);
        ++pairs;
      }
    }
    emit(acc / pairs);
  }
  emit(pearson(mean_profile(week, 0, 5), mean_profile(week, 5, 7)));
  emit(std::sqrt(stats_of(tod).var));
  for (int p = 0; p < kNumPeriods; ++p) {
    emit(std::sqrt(stats_of(collect(week, 0, 7, kPeriodStart[p], kPeriodEnd[p])).var));
  }

  if (k != kNumFeatures) throw numeric_error("feature extractor emitted " + std::to_string(k));
  return fv;
}

std::size_t FeatureMatrix::n_labeled() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const FeatureRow& r) { return r.label.has_value(); }));
}

FeatureMatrix build_feature_matrix(const std::vector<LoadProfile>& profiles,
                                   Characteristic characteristic,
                                   double completeness_threshold) {
  FeatureMatrix m;
  m.characteristic = characteristic;
  for (const auto& p : profiles) {
    const auto label_it = p.labels.find(characteristic);
    for (const auto& week : segment_weeks(p, completeness_threshold)) {
      FeatureRow row;
      const FeatureVector fv = extract_features(week);
      row.meter_id = fv.meter_id;
      row.week_start = fv.week_start;
      row.values = fv.values;
      if (label_it != p.labels.end()) row.label = label_it->second;
      m.rows.push_back(std::move(row));
    }
  }
  return m;
}

std::string write_feature_csv(const FeatureMatrix& m) {
  std::string out = "meter_id,week_start,label";
  for (const auto& name : feature_names()) {
    out += ',';
    out += name;
  }
  out += '\n';
  for (const auto& r : m.rows) {
    out += r.meter_id;
    out += ',';
    out += format_iso_date(r.week_start);
    out += ',';
    if (r.label) out += *r.label ? '1' : '0';
    for (double v : r.values) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

FeatureMatrix read_feature_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open feature file: " + path);
  FeatureMatrix m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (line_no == 1) {
      if (t.rfind("meter_id,week_start,label", 0) != 0) {
        throw data_error(path + ": unexpected feature CSV header");
      }
      continue;
    }
    const auto fields = split_csv_line(t);
    if (fields.size() != 3 + kNumFeatures) {
      throw data_error(path + " line " + std::to_string(line_no) + ": expected " +
                       std::to_string(3 + kNumFeatures) + " fields");
    }
    FeatureRow row;
    row.meter_id = fields[0];
    row.week_start = parse_iso_date(fields[1]);
    if (!fields[2].empty()) {
      if (fields[2] != "0" && fields[2] != "1") {
        throw data_error(path + " line " + std::to_string(line_no) + ": label must be 0/1/empty");
      }
      row.label = fields[2] == "1";
    }
    for (int i = 0; i < kNumFeatures; ++i) {
      const auto v = parse_double(fields[static_cast<std::size_t>(3 + i)]);
      if (!v || !std::isfinite(*v)) {
        throw data_error(path + " line " + std::to_string(line_no) + ": bad feature value");
      }
      row.values[static_cast<std::size_t>(i)] = *v;
    }
    m.rows.push_back(std::move(row));
  }
  return m;
}

}  // namespace mxai
