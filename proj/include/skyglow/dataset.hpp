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

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skyglow/timestamp.hpp"

namespace skyglow {

enum class Strictness { strict, lenient };

/// Census population attached to an observation. `matched` is false when no
/// (country, year) entry existed and `value` holds the fallback median.
struct PopulationJoin {
    double value = 0.0;
    bool matched = false;

    friend bool operator==(const PopulationJoin&, const PopulationJoin&) = default;
};

/// One observation row. Every field except `id` may be missing.
struct ObservationRecord {
    std::string id;
    std::optional<Timestamp> time;
    std::optional<double> time_zone;
    std::optional<std::string> country;
    std::optional<double> latitude;
    std::optional<double> longitude;
    std::optional<double> elevation_m;
    std::optional<std::string> sensor_type;
    std::optional<double> sensor_reading;
    std::optional<std::string> clouds;
    std::optional<std::string> constellation;
    std::optional<std::string> comment_1;
    std::optional<std::string> comment_2;
    std::optional<double> limiting_magnitude;
    std::optional<PopulationJoin> population;

    friend bool operator==(const ObservationRecord&, const ObservationRecord&) = default;
};

using ObservationTable = std::vector<ObservationRecord>;

struct PopulationRecord {
    std::string country;
    int year = 0;
    long long population = 0;

    friend bool operator==(const PopulationRecord&, const PopulationRecord&) = default;
};

using PopulationTable = std::vector<PopulationRecord>;

inline constexpr int kFirstPopulationYear = 2006;
inline constexpr int kLastPopulationYear = 2020;

struct Diagnostic {
    std::size_t line = 0;
    std::string row_id;
    std::string message;
};

struct ParsedObservations {
    ObservationTable records;
    std::vector<Diagnostic> diagnostics;
};

/// Column names of the observation CSV in canonical output order.
const std::vector<std::string>& observation_columns();

ParsedObservations parse_observations(std::istream& source, Strictness strictness);

/// Writes the table in canonical column order. The population join is not
/// part of the observation schema and is not written.
void write_observations(std::ostream& out, std::span<const ObservationRecord> records);

/// Parses the wide `Country Name,2006,...,2020` table into long form.
PopulationTable parse_population(std::istream& source);
void write_population(std::ostream& out, std::span<const PopulationRecord> records);

/// Median population over all (country, year) pairs; 0 for an empty table.
double median_population(std::span<const PopulationRecord> population);

/// Attaches population for (country, calendar year of `time`). Rows without a
/// match, country or time get the global median with `matched = false`.
ObservationTable join_population(ObservationTable observations, std::span<const PopulationRecord> population);

struct MissingnessEntry {
    std::string field;
    std::size_t missing_count = 0;
    double missing_fraction = 0.0;
};

struct MissingnessReport {
    std::size_t total_rows = 0;
    std::vector<MissingnessEntry> fields;

    const MissingnessEntry& at(std::string_view field) const;
};

/// Per-field missing counts over the canonical columns, plus `population`
/// (counting fallback rows as missing) when any row carries a join.
MissingnessReport missingness_report(std::span<const ObservationRecord> records);
void write_missingness_report(std::ostream& out, const MissingnessReport& report);

struct FrequencyEntry {
    std::string category;
    std::size_t count = 0;
    double fraction = 0.0;
};

struct FrequencyTable {
    std::string field;
    std::size_t present_rows = 0;
    std::vector<FrequencyEntry> entries;

    /// Fraction for `category`, 0 when absent.
    double fraction(std::string_view category) const;
};

/// Counts over present values for `type` (alias `sensor_type`), `clouds`,
/// `constellation` or `time_of_day_category`; descending by count, ties
/// lexicographic.
FrequencyTable category_distribution(std::span<const ObservationRecord> records, std::string_view field);
void write_frequency_table(std::ostream& out, const FrequencyTable& table);

} // namespace skyglow
