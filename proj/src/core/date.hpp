#pragma once

#include <cstdint>
#include <string>

namespace mxai {

// Calendar dates are handled as serial day numbers (days since 1970-01-01)
// so that week alignment and slot arithmetic stay integer-only.

struct Date {
  int32_t serial = 0;  // days since 1970-01-01

  friend auto operator<=>(const Date&, const Date&) = default;
};

Date make_date(int year, int month, int day);
void civil_from_serial(int32_t serial, int& year, int& month, int& day);

// 0 = Monday .. 6 = Sunday
int weekday(Date d);
Date monday_on_or_before(Date d);

Date add_days(Date d, int n);

// Parses strict ISO-8601 "YYYY-MM-DD". Throws data_error on malformed input.
Date parse_iso_date(const std::string& s);
std::string format_iso_date(Date d);

}  // namespace mxai
