#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/date.hpp"

namespace mxai {

inline constexpr int kSlotsPerDay = 48;
inline constexpr int kDaysPerWeek = 7;
inline constexpr int kSlotsPerWeek = kSlotsPerDay * kDaysPerWeek;  // 336

// The three household characteristics the engine classifies.
enum class Characteristic { kCooking, kPresence, kWaterHeating };

const char* to_string(Characteristic c);
std::optional<Characteristic> characteristic_from_string(const std::string& s);

struct Reading {
  Date date;
  int slot = 0;  // 0..47, 30-minute slots from midnight
  double kwh = 0.0;

  int64_t abs_slot() const { return static_cast<int64_t>(date.serial) * kSlotsPerDay + slot; }
};

struct LoadProfile {
  std::string meter_id;
  std::vector<Reading> readings;  // strictly increasing in (date, slot)
  std::map<Characteristic, bool> labels;
};

struct WeekSlice {
  std::string meter_id;
  Date week_start;  // always a Monday
  std::array<double, kSlotsPerWeek> values{};
  double completeness = 1.0;  // fraction of slots observed (rest imputed)
};

enum class ReadingsFormat { kCanonical, kCerCode };

struct ParseOptions {
  ReadingsFormat format = ReadingsFormat::kCanonical;
  // Required for kCerCode: the 3-digit day counter in a CER code is the
  // number of days since this date.
  std::optional<Date> cer_epoch;
};

// Parses a readings stream into one LoadProfile per meter, readings sorted.
// Throws data_error with line numbers on malformed rows, duplicate
// (meter, timestamp) pairs, or negative/non-finite kwh.
std::vector<LoadProfile> parse_readings(std::istream& in, const ParseOptions& options);
std::vector<LoadProfile> parse_readings_file(const std::string& path, const ParseOptions& options);

// Canonical CSV serialization (header `meter_id,date,slot,kwh`); values are
// written with shortest round-trip formatting so parse(write(x)) == x.
std::string write_readings_csv(const std::vector<LoadProfile>& profiles);

// Loads `meter_id,characteristic,value` rows into matching profiles.
// Unknown meters are ignored (label files may cover a superset).
void load_labels_csv(std::vector<LoadProfile>& profiles, const std::string& path);
std::string write_labels_csv(const std::vector<LoadProfile>& profiles);

// Cuts a profile into Monday-aligned weeks. Interior gaps are linearly
// interpolated between the nearest observed slots; weeks whose missing slots
// fall outside the observed span (partial head/tail weeks) are dropped, as are
// weeks with completeness below the threshold.
std::vector<WeekSlice> segment_weeks(const LoadProfile& profile, double completeness_threshold);

// Mean consumption per time-of-day slot over the week (48 values).
std::array<double, kSlotsPerDay> time_of_day_mean(const WeekSlice& week);

}  // namespace mxai
