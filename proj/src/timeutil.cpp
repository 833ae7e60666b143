// SPDX-License-Identifier: Apache-2.0
#include "bte/timeutil.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace bte {

// Howard Hinnant's civil date algorithms.
int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t z, int& year, int& month, int& day) {
  z += 719468;
  const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int64_t y = static_cast<int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  month = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  year = static_cast<int>(y + (month <= 2));
}

namespace {

bool parse_fixed_uint(std::string_view s, size_t pos, size_t len, int& out) {
  if (pos + len > s.size()) return false;
  int v = 0;
  for (size_t i = 0; i < len; ++i) {
    char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

Timestamp compose(int Y, int M, int D, int h, int m, int sec, double frac) {
  if (M < 1 || M > 12 || D < 1 || D > 31 || h > 23 || m > 59 || sec > 60)
    throw std::invalid_argument("datetime field out of range");
  return static_cast<double>(days_from_civil(Y, M, D)) * 86400.0 + h * 3600 +
         m * 60 + sec + frac;
}

}  // namespace

Timestamp parse_avl_datetime(std::string_view s) {
  // DD-MM-YYYY HH:MM:SS
  int D, M, Y, h, m, sec;
  if (s.size() != 19 || s[2] != '-' || s[5] != '-' || s[10] != ' ' ||
      s[13] != ':' || s[16] != ':' || !parse_fixed_uint(s, 0, 2, D) ||
      !parse_fixed_uint(s, 3, 2, M) || !parse_fixed_uint(s, 6, 4, Y) ||
      !parse_fixed_uint(s, 11, 2, h) || !parse_fixed_uint(s, 14, 2, m) ||
      !parse_fixed_uint(s, 17, 2, sec))
    throw std::invalid_argument("bad AVL datetime: " + std::string(s));
  return compose(Y, M, D, h, m, sec, 0.0);
}

std::string format_avl_datetime(Timestamp t) {
  int64_t total = static_cast<int64_t>(std::llround(t));
  int64_t days = total >= 0 ? total / 86400 : (total - 86399) / 86400;
  int64_t sod = total - days * 86400;
  int Y, M, D;
  civil_from_days(days, Y, M, D);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02d-%02d-%04d %02lld:%02lld:%02lld", D, M, Y,
                static_cast<long long>(sod / 3600),
                static_cast<long long>(sod / 60 % 60),
                static_cast<long long>(sod % 60));
  return buf;
}

Timestamp parse_iso_datetime(std::string_view s) {
  int Y, M, D, h, m, sec;
  if (s.size() < 19 || s[4] != '-' || s[7] != '-' ||
      (s[10] != 'T' && s[10] != ' ') || s[13] != ':' || s[16] != ':' ||
      !parse_fixed_uint(s, 0, 4, Y) || !parse_fixed_uint(s, 5, 2, M) ||
      !parse_fixed_uint(s, 8, 2, D) || !parse_fixed_uint(s, 11, 2, h) ||
      !parse_fixed_uint(s, 14, 2, m) || !parse_fixed_uint(s, 17, 2, sec))
    throw std::invalid_argument("bad ISO datetime: " + std::string(s));
  double frac = 0.0;
  if (s.size() > 19) {
    if (s[19] != '.') throw std::invalid_argument("bad ISO datetime fraction");
    double scale = 0.1;
    for (size_t i = 20; i < s.size(); ++i) {
      char c = s[i];
      if (c < '0' || c > '9')
        throw std::invalid_argument("bad ISO datetime fraction");
      frac += (c - '0') * scale;
      scale *= 0.1;
    }
  }
  return compose(Y, M, D, h, m, sec, frac);
}

std::string format_iso_datetime(Timestamp t) {
  int64_t ms = to_millis(t);
  int64_t total = ms >= 0 ? ms / 1000 : (ms - 999) / 1000;
  int frac = static_cast<int>(ms - total * 1000);
  int64_t days = total >= 0 ? total / 86400 : (total - 86399) / 86400;
  int64_t sod = total - days * 86400;
  int Y, M, D;
  civil_from_days(days, Y, M, D);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02lld:%02lld:%02lld.%03d", Y,
                M, D, static_cast<long long>(sod / 3600),
                static_cast<long long>(sod / 60 % 60),
                static_cast<long long>(sod % 60), frac);
  return buf;
}

int day_of_week(Timestamp t) {
  int64_t total = static_cast<int64_t>(std::floor(t));
  int64_t days = total >= 0 ? total / 86400 : (total - 86399) / 86400;
  // 1970-01-01 was a Thursday (=3 with Monday=0).
  int64_t dow = (days + 3) % 7;
  return static_cast<int>(dow < 0 ? dow + 7 : dow);
}

double seconds_since_midnight(Timestamp t) {
  double day = std::floor(t / 86400.0);
  return t - day * 86400.0;
}

Timestamp quantize_ms(Timestamp t) {
  return static_cast<double>(to_millis(t)) / 1000.0;
}

int64_t to_millis(Timestamp t) { return std::llround(t * 1000.0); }

}  // namespace bte
