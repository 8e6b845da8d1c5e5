#include "core/date.hpp"

#include <cstdio>

#include "core/errors.hpp"

namespace mxai {

namespace {

// Days-from-civil / civil-from-days per Howard Hinnant's algorithms.
int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int64_t yy = static_cast<int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

bool valid_ymd(int y, int m, int d) {
  if (m < 1 || m > 12 || d < 1) return false;
  static const int mdays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int dim = mdays[m - 1];
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  if (m == 2 && leap) dim = 29;
  return d <= dim;
}

}  // namespace

Date make_date(int year, int month, int day) {
  if (!valid_ymd(year, month, day)) {
    throw data_error("invalid calendar date: " + std::to_string(year) + "-" +
                     std::to_string(month) + "-" + std::to_string(day));
  }
  return Date{static_cast<int32_t>(days_from_civil(year, month, day))};
}

void civil_from_serial(int32_t serial, int& year, int& month, int& day) {
  civil_from_days(serial, year, month, day);
}

int weekday(Date d) {
  // 1970-01-01 was a Thursday (weekday 3 with Monday = 0).
  int wd = static_cast<int>((d.serial % 7 + 7 + 3) % 7);
  return wd;
}

Date monday_on_or_before(Date d) { return Date{d.serial - static_cast<int32_t>(weekday(d))}; }

Date add_days(Date d, int n) { return Date{d.serial + n}; }

Date parse_iso_date(const std::string& s) {
  int y = 0, m = 0, dd = 0;
  char extra = '\0';
  if (s.size() != 10 || std::sscanf(s.c_str(), "%4d-%2d-%2d%c", &y, &m, &dd, &extra) != 3) {
    throw data_error("malformed ISO date '" + s + "' (expected YYYY-MM-DD)");
  }
  return make_date(y, m, dd);
}

std::string format_iso_date(Date d) {
  int y, m, dd;
  civil_from_serial(d.serial, y, m, dd);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, dd);
  return buf;
}

}  // namespace mxai
