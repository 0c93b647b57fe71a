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

#include "skyglow/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "skyglow/csv.hpp"
#include "skyglow/error.hpp"

namespace skyglow {

namespace {

enum Column : std::size_t {
    kId,
    kTime,
    kTimeZone,
    kCountry,
    kLatitude,
    kLongitude,
    kElevation,
    kType,
    kSensorReading,
    kClouds,
    kConstellation,
    kComment1,
    kComment2,
    kLimitingMagnitude,
    kColumnCount
};

std::optional<std::string> text_cell(const std::string& cell) {
    if (cell.empty()) {
        return std::nullopt;
    }
    return cell;
}

// Thrown inside row parsing; converted to a diagnostic in lenient mode.
struct RowFailure {
    std::string message;
    bool range = false;
};

std::optional<double> number_cell(const std::string& cell, std::string_view column) {
    if (csv::trim(cell).empty()) {
        return std::nullopt;
    }
    auto value = csv::parse_double(cell);
    if (!value) {
        throw RowFailure{"non-numeric " + std::string(column) + " '" + cell + "'"};
    }
    return value;
}

ObservationRecord parse_row(const std::vector<std::string>& cells, const std::array<std::size_t, kColumnCount>& at) {
    ObservationRecord rec;
    rec.id = std::string(csv::trim(cells[at[kId]]));
    if (rec.id.empty()) {
        throw RowFailure{"empty id"};
    }
    if (const auto& raw = cells[at[kTime]]; !csv::trim(raw).empty()) {
        rec.time = parse_timestamp(raw);
        if (!rec.time) {
            throw RowFailure{"unparseable time '" + raw + "'"};
        }
    }
    rec.time_zone = number_cell(cells[at[kTimeZone]], "time_zone");
    rec.country = text_cell(cells[at[kCountry]]);
    rec.latitude = number_cell(cells[at[kLatitude]], "latitude");
    rec.longitude = number_cell(cells[at[kLongitude]], "longitude");
    rec.elevation_m = number_cell(cells[at[kElevation]], "elevation_m");
    rec.sensor_type = text_cell(cells[at[kType]]);
    rec.sensor_reading = number_cell(cells[at[kSensorReading]], "sensor_reading");
    rec.clouds = text_cell(cells[at[kClouds]]);
    rec.constellation = text_cell(cells[at[kConstellation]]);
    rec.comment_1 = text_cell(cells[at[kComment1]]);
    rec.comment_2 = text_cell(cells[at[kComment2]]);
    rec.limiting_magnitude = number_cell(cells[at[kLimitingMagnitude]], "limiting_magnitude");

    if (rec.latitude && (*rec.latitude < -90.0 || *rec.latitude > 90.0)) {
        throw RowFailure{"latitude " + csv::format_double(*rec.latitude) + " outside [-90, 90]", true};
    }
    if (rec.longitude && (*rec.longitude < -180.0 || *rec.longitude > 180.0)) {
        throw RowFailure{"longitude " + csv::format_double(*rec.longitude) + " outside [-180, 180]", true};
    }
    return rec;
}

std::string optional_number(const std::optional<double>& value) {
    return value ? csv::format_double(*value) : std::string();
}

std::string optional_text(const std::optional<std::string>& value) {
    return value ? *value : std::string();
}

} // namespace

const std::vector<std::string>& observation_columns() {
    static const std::vector<std::string> kColumns = {
        "id",           "time",   "time_zone",      "country", "latitude",      "longitude", "elevation_m",
        "type",         "sensor_reading", "clouds", "constellation", "comment_1", "comment_2", "limiting_magnitude"};
    return kColumns;
}

ParsedObservations parse_observations(std::istream& source, Strictness strictness) {
    csv::Reader reader(source);
    std::vector<std::string> header;
    if (!reader.next(header)) {
        throw SchemaError("observation table has no header row");
    }

    const auto& columns = observation_columns();
    std::array<std::size_t, kColumnCount> at{};
    std::unordered_map<std::string, std::size_t> header_index;
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string name(csv::trim(header[i]));
        if (!header_index.emplace(name, i).second) {
            throw SchemaError("duplicate header column '" + name + "'");
        }
    }
    for (std::size_t c = 0; c < kColumnCount; ++c) {
        auto it = header_index.find(columns[c]);
        if (it == header_index.end()) {
            throw SchemaError("missing header column '" + columns[c] + "'");
        }
        at[c] = it->second;
    }
    if (header_index.size() != kColumnCount) {
        for (const auto& [name, index] : header_index) {
            if (std::find(columns.begin(), columns.end(), name) == columns.end()) {
                throw SchemaError("unexpected header column '" + name + "'");
            }
        }
    }

    ParsedObservations result;
    std::unordered_set<std::string> seen_ids;
    std::vector<std::string> cells;
    while (reader.next(cells)) {
        if (cells.size() == 1 && csv::trim(cells[0]).empty()) {
            continue;  // blank line
        }
        const std::string row_label = at[kId] < cells.size() ? std::string(csv::trim(cells[at[kId]])) : std::string();
        if (cells.size() != header.size()) {
            const std::string message = "expected " + std::to_string(header.size()) + " fields, found " +
                                        std::to_string(cells.size());
            if (strictness == Strictness::strict) {
                throw ParseError("line " + std::to_string(reader.line()) + ": " + message);
            }
            result.diagnostics.push_back({reader.line(), "", message});
            continue;
        }
        ObservationRecord rec;
        try {
            rec = parse_row(cells, at);
        } catch (const RowFailure& failure) {
            if (strictness == Strictness::strict) {
                const std::string where = "row id '" + row_label + "' (line " + std::to_string(reader.line()) + ")";
                if (failure.range) {
                    throw ValidationError(where + ": " + failure.message);
                }
                throw ParseError(where + ": " + failure.message);
            }
            result.diagnostics.push_back({reader.line(), row_label, failure.message});
            continue;
        }
        if (!seen_ids.insert(rec.id).second) {
            throw DuplicateKeyError("duplicate id '" + rec.id + "' on line " + std::to_string(reader.line()));
        }
        result.records.push_back(std::move(rec));
    }
    return result;
}

void write_observations(std::ostream& out, std::span<const ObservationRecord> records) {
    csv::write_row(out, observation_columns());
    std::vector<std::string> cells(kColumnCount);
    for (const auto& rec : records) {
        cells[kId] = rec.id;
        cells[kTime] = rec.time ? format_timestamp(*rec.time) : std::string();
        cells[kTimeZone] = optional_number(rec.time_zone);
        cells[kCountry] = optional_text(rec.country);
        cells[kLatitude] = optional_number(rec.latitude);
        cells[kLongitude] = optional_number(rec.longitude);
        cells[kElevation] = optional_number(rec.elevation_m);
        cells[kType] = optional_text(rec.sensor_type);
        cells[kSensorReading] = optional_number(rec.sensor_reading);
        cells[kClouds] = optional_text(rec.clouds);
        cells[kConstellation] = optional_text(rec.constellation);
        cells[kComment1] = optional_text(rec.comment_1);
        cells[kComment2] = optional_text(rec.comment_2);
        cells[kLimitingMagnitude] = optional_number(rec.limiting_magnitude);
        csv::write_row(out, cells);
    }
}

PopulationTable parse_population(std::istream& source) {
    csv::Reader reader(source);
    std::vector<std::string> header;
    if (!reader.next(header) || header.empty()) {
        throw SchemaError("population table has no header row");
    }
    if (csv::trim(header[0]) != "Country Name") {
        throw SchemaError("population table must start with 'Country Name', found '" + header[0] + "'");
    }
    std::vector<int> years;
    for (std::size_t i = 1; i < header.size(); ++i) {
        auto year = csv::parse_integer(header[i]);
        if (!year || *year < kFirstPopulationYear || *year > kLastPopulationYear) {
            throw SchemaError("population header column '" + header[i] + "' is not a year in 2006..2020");
        }
        years.push_back(static_cast<int>(*year));
    }

    PopulationTable table;
    std::set<std::pair<std::string, int>> seen;
    std::vector<std::string> cells;
    while (reader.next(cells)) {
        if (cells.size() == 1 && csv::trim(cells[0]).empty()) {
            continue;
        }
        const std::string country(csv::trim(cells[0]));
        if (cells.size() > header.size()) {
            throw ParseError("population row for '" + country + "' has more cells than the header");
        }
        for (std::size_t i = 1; i < cells.size(); ++i) {
            const int year = years[i - 1];
            if (csv::trim(cells[i]).empty()) {
                continue;
            }
            auto value = csv::parse_integer(cells[i]);
            if (!value || *value < 0) {
                throw ParseError("invalid population '" + cells[i] + "' for (" + country + ", " +
                                 std::to_string(year) + ")");
            }
            if (!seen.emplace(country, year).second) {
                throw DuplicateKeyError("duplicate population entry for (" + country + ", " + std::to_string(year) +
                                        ")");
            }
            table.push_back({country, year, *value});
        }
    }
    return table;
}

void write_population(std::ostream& out, std::span<const PopulationRecord> records) {
    std::vector<std::string> header{"Country Name"};
    for (int year = kFirstPopulationYear; year <= kLastPopulationYear; ++year) {
        header.push_back(std::to_string(year));
    }
    csv::write_row(out, header);

    std::map<std::string, std::map<int, long long>> wide;
    std::vector<std::string> order;
    for (const auto& rec : records) {
        if (wide.find(rec.country) == wide.end()) {
            order.push_back(rec.country);
        }
        wide[rec.country][rec.year] = rec.population;
    }
    for (const auto& country : order) {
        std::vector<std::string> cells{country};
        const auto& by_year = wide[country];
        for (int year = kFirstPopulationYear; year <= kLastPopulationYear; ++year) {
            auto it = by_year.find(year);
            cells.push_back(it == by_year.end() ? std::string() : std::to_string(it->second));
        }
        csv::write_row(out, cells);
    }
}

double median_population(std::span<const PopulationRecord> population) {
    if (population.empty()) {
        return 0.0;
    }
    std::vector<double> values;
    values.reserve(population.size());
    for (const auto& rec : population) {
        values.push_back(static_cast<double>(rec.population));
    }
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

ObservationTable join_population(ObservationTable observations, std::span<const PopulationRecord> population) {
    std::map<std::pair<std::string, int>, long long> lookup;
    for (const auto& rec : population) {
        lookup.emplace(std::make_pair(rec.country, rec.year), rec.population);
    }
    const double fallback = median_population(population);
    for (auto& obs : observations) {
        PopulationJoin join{fallback, false};
        if (obs.country && obs.time) {
            auto it = lookup.find({*obs.country, obs.time->year});
            if (it != lookup.end()) {
                join = {static_cast<double>(it->second), true};
            }
        }
        obs.population = join;
    }
    return observations;
}

const MissingnessEntry& MissingnessReport::at(std::string_view field) const {
    for (const auto& entry : fields) {
        if (entry.field == field) {
            return entry;
        }
    }
    throw FieldError("no missingness entry for field '" + std::string(field) + "'");
}

MissingnessReport missingness_report(std::span<const ObservationRecord> records) {
    if (records.empty()) {
        throw EmptyInputError("missingness report requires a nonempty table");
    }
    std::array<std::size_t, kColumnCount> missing{};
    std::size_t population_missing = 0;
    bool any_population = false;
    for (const auto& rec : records) {
        missing[kId] += rec.id.empty() ? 1 : 0;
        missing[kTime] += rec.time ? 0 : 1;
        missing[kTimeZone] += rec.time_zone ? 0 : 1;
        missing[kCountry] += rec.country ? 0 : 1;
        missing[kLatitude] += rec.latitude ? 0 : 1;
        missing[kLongitude] += rec.longitude ? 0 : 1;
        missing[kElevation] += rec.elevation_m ? 0 : 1;
        missing[kType] += rec.sensor_type ? 0 : 1;
        missing[kSensorReading] += rec.sensor_reading ? 0 : 1;
        missing[kClouds] += rec.clouds ? 0 : 1;
        missing[kConstellation] += rec.constellation ? 0 : 1;
        missing[kComment1] += rec.comment_1 ? 0 : 1;
        missing[kComment2] += rec.comment_2 ? 0 : 1;
        missing[kLimitingMagnitude] += rec.limiting_magnitude ? 0 : 1;
        any_population = any_population || rec.population.has_value();
        population_missing += (rec.population && rec.population->matched) ? 0 : 1;
    }

    MissingnessReport report;
    report.total_rows = records.size();
    const double total = static_cast<double>(records.size());
    const auto& columns = observation_columns();
    for (std::size_t c = 0; c < kColumnCount; ++c) {
        report.fields.push_back({columns[c], missing[c], static_cast<double>(missing[c]) / total});
    }
    if (any_population) {
        report.fields.push_back({"population", population_missing, static_cast<double>(population_missing) / total});
    }
    return report;
}

void write_missingness_report(std::ostream& out, const MissingnessReport& report) {
    csv::write_row(out, {"field", "missing_count", "missing_fraction", "total_rows"});
    for (const auto& entry : report.fields) {
        csv::write_row(out, {entry.field, std::to_string(entry.missing_count), csv::format_double(entry.missing_fraction),
                             std::to_string(report.total_rows)});
    }
}

double FrequencyTable::fraction(std::string_view category) const {
    for (const auto& entry : entries) {
        if (entry.category == category) {
            return entry.fraction;
        }
    }
    return 0.0;
}

FrequencyTable category_distribution(std::span<const ObservationRecord> records, std::string_view field) {
    std::optional<std::string> ObservationRecord::*member = nullptr;
    bool time_of_day = false;
    if (field == "type" || field == "sensor_type") {
        member = &ObservationRecord::sensor_type;
    } else if (field == "clouds") {
        member = &ObservationRecord::clouds;
    } else if (field == "constellation") {
        member = &ObservationRecord::constellation;
    } else if (field == "time_of_day_category") {
        time_of_day = true;
    } else {
        throw FieldError("unknown categorical field '" + std::string(field) + "'");
    }

    std::map<std::string, std::size_t> counts;
    std::size_t present = 0;
    for (const auto& rec : records) {
        if (time_of_day) {
            if (rec.time) {
                ++counts[std::string(time_of_day_category(*rec.time))];
                ++present;
            }
        } else if (const auto& value = rec.*member) {
            ++counts[*value];
            ++present;
        }
    }

    FrequencyTable table;
    table.field = std::string(field);
    table.present_rows = present;
    for (const auto& [category, count] : counts) {
        table.entries.push_back({category, count, static_cast<double>(count) / static_cast<double>(present)});
    }
    // std::map already orders categories lexicographically; stable sort keeps that for ties.
    std::stable_sort(table.entries.begin(), table.entries.end(),
                     [](const FrequencyEntry& a, const FrequencyEntry& b) { return a.count > b.count; });
    return table;
}

void write_frequency_table(std::ostream& out, const FrequencyTable& table) {
    csv::write_row(out, {"field", "category", "count", "fraction"});
    for (const auto& entry : table.entries) {
        csv::write_row(out, {table.field, entry.category, std::to_string(entry.count), csv::format_double(entry.fraction)});
    }
}

} // namespace skyglow
