#include "core/meter_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "core/errors.hpp"
#include "core/textio.hpp"

namespace mxai {

const char* to_string(Characteristic c) {
  switch (c) {
    case Characteristic::kCooking: return "cooking";
    case Characteristic::kPresence: return "presence";
    case Characteristic::kWaterHeating: return "water_heating";
  }
  return "?";
}

std::optional<Characteristic> characteristic_from_string(const std::string& s) {
  if (s == "cooking") return Characteristic::kCooking;
  if (s == "presence") return Characteristic::kPresence;
  if (s == "water_heating") return Characteristic::kWaterHeating;
  return std::nullopt;
}

namespace {

[[noreturn]] void row_error(std::size_t line_no, const std::string& what) {
  throw data_error("line " + std::to_string(line_no) + ": " + what);
}

Reading parse_canonical_row(const std::vector<std::string>& fields, std::size_t line_no,
                            std::string& meter_out) {
  if (fields.size() != 4) row_error(line_no, "expected 4 fields meter_id,date,slot,kwh");
  meter_out = fields[0];
  if (meter_out.empty()) row_error(line_no, "empty meter_id");
  Reading r;
  try {
    r.date = parse_iso_date(fields[1]);
  } catch (const data_error& e) {
    row_error(line_no, e.what());
  }
  const auto slot = parse_int(fields[2]);
  if (!slot || *slot < 0 || *slot >= kSlotsPerDay) {
    row_error(line_no, "slot '" + fields[2] + "' outside 0..47");
  }
  r.slot = static_cast<int>(*slot);
  const auto kwh = parse_double(fields[3]);
  if (!kwh || !std::isfinite(*kwh)) row_error(line_no, "unparseable kwh '" + fields[3] + "'");
  if (*kwh < 0) row_error(line_no, "negative kwh " + fields[3]);
  r.kwh = *kwh;
  return r;
}

Reading parse_cer_row(const std::vector<std::string>& fields, std::size_t line_no, Date epoch,
                      std::string& meter_out) {
  if (fields.size() != 3) row_error(line_no, "expected 3 fields meter_id daytime_code kwh");
  meter_out = fields[0];
  if (meter_out.empty()) row_error(line_no, "empty meter_id");
  const auto code = parse_int(fields[1]);
  if (!code || *code < 0 || fields[1].size() < 3) {
    row_error(line_no, "unparseable daytime code '" + fields[1] + "'");
  }
  const int64_t day_counter = *code / 100;
  const int64_t slot_code = *code % 100;  // 1-based
  if (slot_code < 1 || slot_code > kSlotsPerDay) {
    row_error(line_no, "slot code " + std::to_string(slot_code) + " outside 1..48");
  }
  Reading r;
  r.date = add_days(epoch, static_cast<int>(day_counter));
  r.slot = static_cast<int>(slot_code - 1);
  const auto kwh = parse_double(fields[2]);
  if (!kwh || !std::isfinite(*kwh)) row_error(line_no, "unparseable kwh '" + fields[2] + "'");
  if (*kwh < 0) row_error(line_no, "negative kwh " + fields[2]);
  r.kwh = *kwh;
  return r;
}

}  // namespace

std::vector<LoadProfile> parse_readings(std::istream& in, const ParseOptions& options) {
  if (options.format == ReadingsFormat::kCerCode && !options.cer_epoch) {
    throw usage_error("cer-code format requires an epoch date (--cer-epoch)");
  }

  std::unordered_map<std::string, std::size_t> index;
  std::vector<LoadProfile> profiles;

  std::string line;
  std::size_t line_no = 0;
  bool header_checked = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (!header_checked && options.format == ReadingsFormat::kCanonical) {
      header_checked = true;
      if (t == "meter_id,date,slot,kwh") continue;  // header optional
    }
    header_checked = true;

    std::string meter;
    Reading r;
    if (options.format == ReadingsFormat::kCanonical) {
      r = parse_canonical_row(split_csv_line(t), line_no, meter);
    } else {
      r = parse_cer_row(split_whitespace(t), line_no, *options.cer_epoch, meter);
    }

    auto [it, inserted] = index.try_emplace(meter, profiles.size());
    if (inserted) profiles.push_back(LoadProfile{meter, {}, {}});
    profiles[it->second].readings.push_back(r);
  }

  for (auto& p : profiles) {
    std::sort(p.readings.begin(), p.readings.end(),
              [](const Reading& a, const Reading& b) { return a.abs_slot() < b.abs_slot(); });
    for (std::size_t i = 1; i < p.readings.size(); ++i) {
      if (p.readings[i].abs_slot() == p.readings[i - 1].abs_slot()) {
        throw data_error("duplicate timestamp for meter " + p.meter_id + " at " +
                         format_iso_date(p.readings[i].date) + " slot " +
                         std::to_string(p.readings[i].slot));
      }
    }
  }

  std::sort(profiles.begin(), profiles.end(),
            [](const LoadProfile& a, const LoadProfile& b) { return a.meter_id < b.meter_id; });
  return profiles;
}

std::vector<LoadProfile> parse_readings_file(const std::string& path, const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open readings file: " + path);
  return parse_readings(in, options);
}

std::string write_readings_csv(const std::vector<LoadProfile>& profiles) {
  std::string out = "meter_id,date,slot,kwh\n";
  for (const auto& p : profiles) {
    for (const auto& r : p.readings) {
      out += p.meter_id;
      out += ',';
      out += format_iso_date(r.date);
      out += ',';
      out += std::to_string(r.slot);
      out += ',';
      out += format_double(r.kwh);
      out += '\n';
    }
  }
  return out;
}

void load_labels_csv(std::vector<LoadProfile>& profiles, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open labels file: " + path);

  std::unordered_map<std::string, LoadProfile*> by_meter;
  for (auto& p : profiles) by_meter[p.meter_id] = &p;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (line_no == 1 && t == "meter_id,characteristic,value") continue;
    const auto fields = split_csv_line(t);
    if (fields.size() != 3) row_error(line_no, "expected meter_id,characteristic,value");
    const auto c = characteristic_from_string(fields[1]);
    if (!c) row_error(line_no, "unknown characteristic '" + fields[1] + "'");
    if (fields[2] != "0" && fields[2] != "1") {
      row_error(line_no, "label value '" + fields[2] + "' must be 0 or 1");
    }
    auto it = by_meter.find(fields[0]);
    if (it != by_meter.end()) it->second->labels[*c] = fields[2] == "1";
  }
}

std::string write_labels_csv(const std::vector<LoadProfile>& profiles) {
  std::string out = "meter_id,characteristic,value\n";
  for (const auto& p : profiles) {
    for (const auto& [c, v] : p.labels) {
      out += p.meter_id;
      out += ',';
      out += to_string(c);
      out += ',';
      out += v ? '1' : '0';
      out += '\n';
    }
  }
  return out;
}

std::vector<WeekSlice> segment_weeks(const LoadProfile& profile, double completeness_threshold) {
  if (!(completeness_threshold > 0.0 && completeness_threshold <= 1.0)) {
    throw usage_error("completeness threshold must lie in (0, 1]");
  }
  std::vector<WeekSlice> out;
  if (profile.readings.empty()) return out;

  const int64_t first_abs = profile.readings.front().abs_slot();
  const int64_t last_abs = profile.readings.back().abs_slot();

  const Date first_monday = monday_on_or_before(profile.readings.front().date);
  const Date last_monday = monday_on_or_before(profile.readings.back().date);

  std::size_t cursor = 0;  // readings index, advanced monotonically per week
  for (int32_t ws = first_monday.serial; ws <= last_monday.serial; ws += kDaysPerWeek) {
    const int64_t base = static_cast<int64_t>(ws) * kSlotsPerDay;

    std::array<double, kSlotsPerWeek> values{};
    std::array<bool, kSlotsPerWeek> observed{};
    while (cursor < profile.readings.size() &&
           profile.readings[cursor].abs_slot() < base + kSlotsPerWeek) {
      const auto& r = profile.readings[cursor];
      const int64_t off = r.abs_slot() - base;
      if (off >= 0) {
        values[static_cast<std::size_t>(off)] = r.kwh;
        observed[static_cast<std::size_t>(off)] = true;
      }
      ++cursor;
    }

    int n_observed = 0;
    bool interior = true;  // all missing slots are between observed readings
    for (int s = 0; s < kSlotsPerWeek; ++s) {
      if (observed[static_cast<std::size_t>(s)]) {
        ++n_observed;
      } else if (base + s < first_abs || base + s > last_abs) {
        interior = false;
      }
    }
    const double completeness = static_cast<double>(n_observed) / kSlotsPerWeek;
    if (completeness < completeness_threshold || !interior) continue;

    // Linear interpolation across interior gaps. Neighbours may lie in an
    // adjacent week; search the reading list around the gap.
    if (n_observed < kSlotsPerWeek) {
      for (int s = 0; s < kSlotsPerWeek; ++s) {
        if (observed[static_cast<std::size_t>(s)]) continue;
        const int64_t abs = base + s;
        const auto it = std::lower_bound(
            profile.readings.begin(), profile.readings.end(), abs,
            [](const Reading& r, int64_t key) { return r.abs_slot() < key; });
        // interior => a strictly earlier and a strictly later reading exist
        const Reading& hi = *it;
        const Reading& lo = *(it - 1);
        const double span = static_cast<double>(hi.abs_slot() - lo.abs_slot());
        const double frac = static_cast<double>(abs - lo.abs_slot()) / span;
        values[static_cast<std::size_t>(s)] = lo.kwh + frac * (hi.kwh - lo.kwh);
      }
    }

    WeekSlice w;
    w.meter_id = profile.meter_id;
    w.week_start = Date{ws};
    w.values = values;
    w.completeness = completeness;
    out.push_back(std::move(w));
  }
  return out;
}

std::array<double, kSlotsPerDay> time_of_day_mean(const WeekSlice& week) {
  std::array<double, kSlotsPerDay> mean{};
  for (int d = 0; d < kDaysPerWeek; ++d) {
    for (int s = 0; s < kSlotsPerDay; ++s) {
      mean[static_cast<std::size_t>(s)] += week.values[static_cast<std::size_t>(d * kSlotsPerDay + s)];
    }
  }
  for (auto& v : mean) v /= kDaysPerWeek;
  return mean;
}

}  // namespace mxai
