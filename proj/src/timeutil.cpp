#include "ddsrecon/timeutil.hpp"

#include <cstdio>

#include "ddsrecon/errors.hpp"

namespace ddsrecon {

namespace {

// Howard Hinnant's days-from-civil algorithm.
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

bool is_leap(int y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

int days_in_month(int y, int m) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return kDays[m - 1];
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  // Fixed-width format: 2031-01-01T00:00:00Z
  if (text.size() != 20)
    throw InputError("invalid timestamp \"" + std::string(text) +
                     "\": expected YYYY-MM-DDTHH:MM:SSZ");
  auto digit = [&](std::size_t i) -> int {
    char c = text[i];
    if (c < '0' || c > '9')
      throw InputError("invalid timestamp \"" + std::string(text) + "\"");
    return c - '0';
  };
  auto expect = [&](std::size_t i, char c) {
    if (text[i] != c)
      throw InputError("invalid timestamp \"" + std::string(text) + "\"");
  };
  int year = digit(0) * 1000 + digit(1) * 100 + digit(2) * 10 + digit(3);
  expect(4, '-');
  int month = digit(5) * 10 + digit(6);
  expect(7, '-');
  int day = digit(8) * 10 + digit(9);
  expect(10, 'T');
  int hour = digit(11) * 10 + digit(12);
  expect(13, ':');
  int minute = digit(14) * 10 + digit(15);
  expect(16, ':');
  int second = digit(17) * 10 + digit(18);
  expect(19, 'Z');
  if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month) ||
      hour > 23 || minute > 59 || second > 59)
    throw InputError("timestamp out of range: \"" + std::string(text) + "\"");
  return days_from_civil(year, month, day) * 86400 + hour * 3600 + minute * 60 +
         second;
}

std::string format_timestamp(Timestamp t) {
  std::int64_t days = t / 86400;
  std::int64_t rem = t % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[24];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d,
                static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                static_cast<int>(rem % 60));
  return buf;
}

}  // namespace ddsrecon
