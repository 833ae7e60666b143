// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace bte {

// Wall-clock instant, seconds since 1970-01-01 00:00:00 (proleptic Gregorian,
// no timezone — all AVL logs are local time). Fractional seconds carry
// interpolated geofence-crossing instants.
using Timestamp = double;

int64_t days_from_civil(int year, int month, int day);
void civil_from_days(int64_t days, int& year, int& month, int& day);

// "DD-MM-YYYY HH:MM:SS" (Table-1 style AVL datetime). Throws std::invalid_argument.
Timestamp parse_avl_datetime(std::string_view text);
std::string format_avl_datetime(Timestamp t);

// ISO-8601 "YYYY-MM-DDTHH:MM:SS.mmm"; parser also accepts a plain seconds form
// and a space separator.
Timestamp parse_iso_datetime(std::string_view text);
std::string format_iso_datetime(Timestamp t);

// Monday = 0 ... Sunday = 6.
int day_of_week(Timestamp t);
double seconds_since_midnight(Timestamp t);

// Snap to whole milliseconds; keeps interpolated crossing times closed under
// exact integer arithmetic.
Timestamp quantize_ms(Timestamp t);
int64_t to_millis(Timestamp t);

}  // namespace bte
