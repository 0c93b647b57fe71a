// Copyright 2026 The Skyglow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace skyglow {

/// Local civil time as recorded by the observer.
struct Timestamp {
    int year = 1970;
    int month = 1;
    int day = 1;
    int hour = 0;
    int minute = 0;
    int second = 0;

    friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

/// Parses `YYYY-MM-DD hh:mm:ss` (a `T` separator is also accepted).
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// Canonical `YYYY-MM-DD hh:mm:ss` form.
std::string format_timestamp(const Timestamp& ts);

bool is_leap_year(int year);
int days_in_month(int year, int month);
int day_of_year(const Timestamp& ts);
int seconds_of_day(const Timestamp& ts);

/// Days since 1970-01-01 in the proleptic Gregorian calendar.
std::int64_t days_from_civil(int year, int month, int day);

/// Seconds since the Unix epoch, treating `ts` as local time at the given UTC
/// offset in hours.
double epoch_seconds(const Timestamp& ts, double utc_offset_hours);

} // namespace skyglow

namespace skyglow {

/// morning [05:00,12:00), afternoon [12:00,17:00), evening [17:00,22:00),
/// night otherwise.
std::string_view time_of_day_category(const Timestamp& ts);

} // namespace skyglow
