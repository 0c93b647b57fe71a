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

#include "skyglow/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "skyglow/csv.hpp"
#include "skyglow/error.hpp"

namespace skyglow {

TargetClass bin_target(double limiting_magnitude) {
    if (!std::isfinite(limiting_magnitude)) {
        throw InputError("limiting magnitude must be finite");
    }
    const double rounded = std::floor(limiting_magnitude + 0.5);
    return TargetClass{static_cast<int>(std::clamp(rounded, 0.0, static_cast<double>(kNumClasses - 1)))};
}

std::optional<TargetClass> bin_target(const std::optional<double>& limiting_magnitude) {
    if (!limiting_magnitude) {
        return std::nullopt;
    }
    return bin_target(*limiting_magnitude);
}

TimeFeatures decompose_time(const Timestamp& timestamp, std::optional<double> utc_offset_hours) {
    TimeFeatures out;
    out.year = timestamp.year;
    out.month = timestamp.month;
    out.day_of_year = day_of_year(timestamp);
    out.seconds_of_day = seconds_of_day(timestamp);
    out.epoch_seconds = epoch_seconds(timestamp, utc_offset_hours.value_or(0.0));
    out.category = std::string(time_of_day_category(timestamp));
    return out;
}

TimeFeatures decompose_time(std::string_view timestamp, std::optional<double> utc_offset_hours) {
    auto parsed = parse_timestamp(timestamp);
    if (!parsed) {
        throw TimeError("unparseable timestamp '" + std::string(timestamp) + "'");
    }
    return decompose_time(*parsed, utc_offset_hours);
}

const std::vector<std::string>& numeric_feature_names() {
    static const std::vector<std::string> kNames{
        "latitude", "longitude", "elevation_m",    "time_zone",     "sensor_reading", "population",
        "year",     "month",     "day_of_year",    "seconds_of_day", "epoch_seconds"};
    return kNames;
}

const std::vector<std::string>& categorical_feature_names() {
    static const std::vector<std::string> kNames{"country", "type", "clouds", "constellation", "time_of_day_category"};
    return kNames;
}

std::optional<double> numeric_feature(const ObservationRecord& record, std::string_view name) {
    if (name == "latitude") {
        return record.latitude;
    }
    if (name == "longitude") {
        return record.longitude;
    }
    if (name == "elevation_m") {
        return record.elevation_m;
    }
    if (name == "time_zone") {
        return record.time_zone;
    }
    if (name == "sensor_reading") {
        return record.sensor_reading;
    }
    if (name == "population") {
        if (!record.population) {
            return std::nullopt;
        }
        return record.population->value;
    }
    const bool time_field = name == "year" || name == "month" || name == "day_of_year" || name == "seconds_of_day" ||
                            name == "epoch_seconds";
    if (!time_field) {
        throw FieldError("unknown numeric feature '" + std::string(name) + "'");
    }
    if (!record.time) {
        return std::nullopt;
    }
    const auto parts = decompose_time(*record.time, record.time_zone);
    if (name == "year") {
        return parts.year;
    }
    if (name == "month") {
        return parts.month;
    }
    if (name == "day_of_year") {
        return parts.day_of_year;
    }
    if (name == "seconds_of_day") {
        return parts.seconds_of_day;
    }
    return parts.epoch_seconds;
}

std::optional<std::string> categorical_feature(const ObservationRecord& record, std::string_view name) {
    if (name == "country") {
        return record.country;
    }
    if (name == "type") {
        return record.sensor_type;
    }
    if (name == "clouds") {
        return record.clouds;
    }
    if (name == "constellation") {
        return record.constellation;
    }
    if (name == "time_of_day_category") {
        if (!record.time) {
            return std::nullopt;
        }
        return std::string(time_of_day_category(*record.time));
    }
    throw FieldError("unknown categorical feature '" + std::string(name) + "'");
}

void FeatureConfig::validate() const {
    if (!(clip_low >= 0.0 && clip_low <= clip_high && clip_high <= 1.0)) {
        throw ParameterError("clip quantiles must satisfy 0 <= low <= high <= 1");
    }
    if (knn_k < 1) {
        throw ParameterError("knn k must be at least 1");
    }
    if (!(indicator_threshold >= 0.0 && indicator_threshold <= 1.0)) {
        throw ParameterError("indicator threshold must lie in [0, 1]");
    }
    const auto& known_numeric = numeric_feature_names();
    for (const auto& name : numeric) {
        if (std::find(known_numeric.begin(), known_numeric.end(), name) == known_numeric.end()) {
            throw FieldError("unknown numeric feature '" + name + "'");
        }
    }
    const auto& known_categorical = categorical_feature_names();
    for (const auto& name : categorical) {
        if (std::find(known_categorical.begin(), known_categorical.end(), name) == known_categorical.end()) {
            throw FieldError("unknown categorical feature '" + name + "'");
        }
    }
}

double CategoricalColumnModel::encode(const std::optional<std::string>& value) const {
    if (!value) {
        return 0.0;
    }
    auto it = std::lower_bound(categories.begin(), categories.end(), *value);
    if (it == categories.end() || *it != *value) {
        return 0.0;
    }
    return static_cast<double>(it - categories.begin() + 1);
}

std::vector<std::string> FeaturePipelineModel::column_names() const {
    std::vector<std::string> names;
    for (const auto& col : numeric) {
        names.push_back(col.name);
    }
    for (const auto& col : categorical) {
        names.push_back(col.name);
    }
    for (const auto& col : numeric) {
        if (col.indicator) {
            names.push_back(col.name + "_missing");
        }
    }
    for (const auto& col : categorical) {
        if (col.indicator) {
            names.push_back(col.name + "_missing");
        }
    }
    return names;
}

const NumericColumnModel* FeaturePipelineModel::find_numeric(std::string_view name) const {
    for (const auto& col : numeric) {
        if (col.name == name) {
            return &col;
        }
    }
    return nullptr;
}

namespace {

double transform_value(const NumericColumnModel& col, std::optional<double> value) {
    const double x = std::clamp(value.value_or(col.impute), col.clip_low, col.clip_high);
    if (col.constant) {
        return 0.0;
    }
    return (x - col.mean) / col.stddev;
}

} // namespace

double FeaturePipelineModel::transform_numeric(std::string_view name, std::optional<double> value) const {
    const auto* col = find_numeric(name);
    if (col == nullptr) {
        throw FieldError("pipeline has no numeric column '" + std::string(name) + "'");
    }
    return transform_value(*col, value);
}

void FeatureMatrix::append(const std::vector<std::string>& names, const Matrix& extra) {
    if (extra.rows() != values.rows() || extra.cols() != names.size()) {
        throw DimensionError("appended feature block does not match the matrix shape");
    }
    Matrix merged(values.rows(), values.cols() + extra.cols());
    for (std::size_t r = 0; r < values.rows(); ++r) {
        auto out = merged.row(r);
        auto left = values.row(r);
        auto right = extra.row(r);
        std::copy(left.begin(), left.end(), out.begin());
        std::copy(right.begin(), right.end(), out.begin() + static_cast<std::ptrdiff_t>(left.size()));
    }
    values = std::move(merged);
    columns.insert(columns.end(), names.begin(), names.end());
}

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) {
        throw EmptyInputError("quantile of an empty column");
    }
    const double position = q * static_cast<double>(sorted.size() - 1);
    const auto lower = static_cast<std::size_t>(std::floor(position));
    const std::size_t upper = std::min(lower + 1, sorted.size() - 1);
    const double weight = position - static_cast<double>(lower);
    return sorted[lower] + weight * (sorted[upper] - sorted[lower]);
}

FeaturePipelineModel fit_feature_pipeline(std::span<const ObservationRecord> train, const FeatureConfig& config) {
    config.validate();
    if (train.empty()) {
        throw EmptyInputError("feature pipeline needs a nonempty training table");
    }
    FeaturePipelineModel model;
    model.config = config;
    const double total = static_cast<double>(train.size());

    for (const auto& name : config.numeric) {
        std::vector<double> present;
        present.reserve(train.size());
        for (const auto& rec : train) {
            if (auto v = numeric_feature(rec, name)) {
                present.push_back(*v);
            }
        }
        if (present.empty()) {
            model.excluded.push_back(name);
            model.diagnostics.push_back("numeric column '" + name + "' is entirely missing; excluded");
            continue;
        }
        std::sort(present.begin(), present.end());
        NumericColumnModel col;
        col.name = name;
        col.clip_low = quantile_sorted(present, config.clip_low);
        col.clip_high = quantile_sorted(present, config.clip_high);
        for (double& v : present) {
            v = std::clamp(v, col.clip_low, col.clip_high);
        }
        // Clamping with monotone bounds keeps the values sorted.
        double sum = 0.0;
        for (double v : present) {
            sum += v;
        }
        const double n = static_cast<double>(present.size());
        col.mean = sum / n;
        double squares = 0.0;
        for (double v : present) {
            squares += (v - col.mean) * (v - col.mean);
        }
        col.constant = present.front() == present.back();
        col.stddev = col.constant ? 0.0 : std::sqrt(squares / n);
        if (col.stddev == 0.0) {
            col.constant = true;
        }
        col.impute = quantile_sorted(present, 0.5);
        col.missing_fraction = (total - n) / total;
        col.indicator = col.missing_fraction > config.indicator_threshold;
        if (col.constant) {
            model.diagnostics.push_back("numeric column '" + name + "' is constant after clipping");
        }
        model.numeric.push_back(std::move(col));
    }

    for (const auto& name : config.categorical) {
        std::set<std::string> seen;
        std::size_t present = 0;
        for (const auto& rec : train) {
            if (auto v = categorical_feature(rec, name)) {
                seen.insert(*v);
                ++present;
            }
        }
        if (present == 0) {
            model.excluded.push_back(name);
            model.diagnostics.push_back("categorical column '" + name + "' is entirely missing; excluded");
            continue;
        }
        CategoricalColumnModel col;
        col.name = name;
        col.categories.assign(seen.begin(), seen.end());
        col.missing_fraction = (total - static_cast<double>(present)) / total;
        col.indicator = col.missing_fraction > config.indicator_threshold;
        model.categorical.push_back(std::move(col));
    }
    return model;
}

FeatureMatrix apply_feature_pipeline(const FeaturePipelineModel& model, std::span<const ObservationRecord> table) {
    FeatureMatrix out;
    out.columns = model.column_names();
    out.values = Matrix(table.size(), out.columns.size());
    out.row_ids.reserve(table.size());
    for (std::size_t r = 0; r < table.size(); ++r) {
        const auto& rec = table[r];
        out.row_ids.push_back(rec.id);
        auto row = out.values.row(r);
        std::size_t c = 0;
        std::vector<double> indicators;
        for (const auto& col : model.numeric) {
            const auto value = numeric_feature(rec, col.name);
            row[c++] = transform_value(col, value);
            if (col.indicator) {
                indicators.push_back(value ? 0.0 : 1.0);
            }
        }
        std::vector<double> categorical_indicators;
        for (const auto& col : model.categorical) {
            const auto value = categorical_feature(rec, col.name);
            row[c++] = col.encode(value);
            if (col.indicator) {
                categorical_indicators.push_back(value ? 0.0 : 1.0);
            }
        }
        for (double v : indicators) {
            row[c++] = v;
        }
        for (double v : categorical_indicators) {
            row[c++] = v;
        }
    }
    return out;
}

void write_feature_matrix(std::ostream& out, const FeatureMatrix& matrix) {
    std::vector<std::string> header{"row_id"};
    header.insert(header.end(), matrix.columns.begin(), matrix.columns.end());
    csv::write_row(out, header);
    std::vector<std::string> cells(header.size());
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        cells[0] = matrix.row_ids[r];
        auto row = matrix.values.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            cells[c + 1] = csv::format_double(row[c]);
        }
        csv::write_row(out, cells);
    }
}

void to_json(nlohmann::json& j, const FeatureConfig& config) {
    j = nlohmann::json{{"clip_low", config.clip_low},
                       {"clip_high", config.clip_high},
                       {"knn_k", config.knn_k},
                       {"indicator_threshold", config.indicator_threshold},
                       {"numeric", config.numeric},
                       {"categorical", config.categorical}};
}

void from_json(const nlohmann::json& j, FeatureConfig& config) {
    j.at("clip_low").get_to(config.clip_low);
    j.at("clip_high").get_to(config.clip_high);
    j.at("knn_k").get_to(config.knn_k);
    j.at("indicator_threshold").get_to(config.indicator_threshold);
    j.at("numeric").get_to(config.numeric);
    j.at("categorical").get_to(config.categorical);
}

void to_json(nlohmann::json& j, const FeaturePipelineModel& model) {
    nlohmann::json numeric = nlohmann::json::array();
    for (const auto& col : model.numeric) {
        numeric.push_back({{"name", col.name},
                           {"clip_low", col.clip_low},
                           {"clip_high", col.clip_high},
                           {"mean", col.mean},
                           {"stddev", col.stddev},
                           {"impute", col.impute},
                           {"missing_fraction", col.missing_fraction},
                           {"constant", col.constant},
                           {"indicator", col.indicator}});
    }
    nlohmann::json categorical = nlohmann::json::array();
    for (const auto& col : model.categorical) {
        categorical.push_back({{"name", col.name},
                               {"categories", col.categories},
                               {"missing_fraction", col.missing_fraction},
                               {"indicator", col.indicator}});
    }
    j = nlohmann::json{{"config", model.config},
                       {"numeric", numeric},
                       {"categorical", categorical},
                       {"excluded", model.excluded},
                       {"diagnostics", model.diagnostics}};
}

void from_json(const nlohmann::json& j, FeaturePipelineModel& model) {
    j.at("config").get_to(model.config);
    model.numeric.clear();
    for (const auto& item : j.at("numeric")) {
        NumericColumnModel col;
        item.at("name").get_to(col.name);
        item.at("clip_low").get_to(col.clip_low);
        item.at("clip_high").get_to(col.clip_high);
        item.at("mean").get_to(col.mean);
        item.at("stddev").get_to(col.stddev);
        item.at("impute").get_to(col.impute);
        item.at("missing_fraction").get_to(col.missing_fraction);
        item.at("constant").get_to(col.constant);
        item.at("indicator").get_to(col.indicator);
        model.numeric.push_back(std::move(col));
    }
    model.categorical.clear();
    for (const auto& item : j.at("categorical")) {
        CategoricalColumnModel col;
        item.at("name").get_to(col.name);
        item.at("categories").get_to(col.categories);
        item.at("missing_fraction").get_to(col.missing_fraction);
        item.at("indicator").get_to(col.indicator);
        model.categorical.push_back(std::move(col));
    }
    j.at("excluded").get_to(model.excluded);
    j.at("diagnostics").get_to(model.diagnostics);
}

} // namespace skyglow
