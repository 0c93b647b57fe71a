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

#include "skyglow/timestamp.hpp"

#include <cctype>
#include <cstdio>

namespace skyglow {

namespace {

bool read_digits(std::string_view text, std::size_t pos, std::size_t count, int& out) {
    if (pos + count > text.size()) {
        return false;
    }
    int value = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const char c = text[pos + i];
        if (!std::isdigit(static_cast<unsigned char>(c))) {
            return false;
        }
        value = value * 10 + (c - '0');
    }
    out = value;
    return true;
}

} // namespace

bool is_leap_year(int year) {
    return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

int days_in_month(int year, int month) {
    static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month == 2 && is_leap_year(year)) {
        return 29;
    }
    return kDays[month - 1];
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) {
        text.remove_prefix(1);
    }
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) {
        text.remove_suffix(1);
    }
    // YYYY-MM-DD hh:mm:ss
    if (text.size() != 19 || text[4] != '-' || text[7] != '-' || (text[10] != ' ' && text[10] != 'T') ||
        text[13] != ':' || text[16] != ':') {
        return std::nullopt;
    }
    Timestamp ts;
    if (!read_digits(text, 0, 4, ts.year) || !read_digits(text, 5, 2, ts.month) || !read_digits(text, 8, 2, ts.day) ||
        !read_digits(text, 11, 2, ts.hour) || !read_digits(text, 14, 2, ts.minute) ||
        !read_digits(text, 17, 2, ts.second)) {
        return std::nullopt;
    }
    if (ts.month < 1 || ts.month > 12 || ts.day < 1 || ts.day > days_in_month(ts.year, ts.month) || ts.hour > 23 ||
        ts.minute > 59 || ts.second > 59) {
        return std::nullopt;
    }
    return ts;
}

std::string format_timestamp(const Timestamp& ts) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%04d-%02d-%02d %02d:%02d:%02d", ts.year, ts.month, ts.day, ts.hour,
                  ts.minute, ts.second);
    return buffer;
}

int day_of_year(const Timestamp& ts) {
    int day = ts.day;
    for (int m = 1; m < ts.month; ++m) {
        day += days_in_month(ts.year, m);
    }
    return day;
}

int seconds_of_day(const Timestamp& ts) {
    return ts.hour * 3600 + ts.minute * 60 + ts.second;
}

// Howard Hinnant's civil-from-days inverse.
std::int64_t days_from_civil(int year, int month, int day) {
    const std::int64_t y = static_cast<std::int64_t>(year) - (month <= 2 ? 1 : 0);
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const std::int64_t yoe = y - era * 400;
    const std::int64_t mp = (month + 9) % 12;
    const std::int64_t doy = (153 * mp + 2) / 5 + day - 1;
    const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + doe - 719468;
}

double epoch_seconds(const Timestamp& ts, double utc_offset_hours) {
    const double local = static_cast<double>(days_from_civil(ts.year, ts.month, ts.day)) * 86400.0 +
                         static_cast<double>(seconds_of_day(ts));
    return local - utc_offset_hours * 3600.0;
}

} // namespace skyglow

namespace skyglow {

std::string_view time_of_day_category(const Timestamp& ts) {
    if (ts.hour >= 5 && ts.hour < 12) {
        return "morning";
    }
    if (ts.hour >= 12 && ts.hour < 17) {
        return "afternoon";
    }
    if (ts.hour >= 17 && ts.hour < 22) {
        return "evening";
    }
    return "night";
}

} // namespace skyglow
