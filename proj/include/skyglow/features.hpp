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
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "skyglow/dataset.hpp"
#include "skyglow/matrix.hpp"
#include "skyglow/timestamp.hpp"

namespace skyglow {

inline constexpr int kNumClasses = 8;

/// Limiting-magnitude class in [0, 7].
struct TargetClass {
    int id = 0;

    friend auto operator<=>(const TargetClass&, const TargetClass&) = default;
};

/// Round half up, then clamp to [0, 7]. Throws InputError on non-finite input.
TargetClass bin_target(double limiting_magnitude);

/// Missing target yields nullopt: the row is excluded from training.
std::optional<TargetClass> bin_target(const std::optional<double>& limiting_magnitude);

struct TimeFeatures {
    int year = 0;
    int month = 0;
    int day_of_year = 0;
    int seconds_of_day = 0;
    double epoch_seconds = 0.0;
    std::string category;
};

/// Missing offsets are treated as UTC when computing `epoch_seconds`.
TimeFeatures decompose_time(const Timestamp& timestamp, std::optional<double> utc_offset_hours = std::nullopt);

/// Throws TimeError carrying the raw text when it does not parse.
TimeFeatures decompose_time(std::string_view timestamp, std::optional<double> utc_offset_hours = std::nullopt);

/// Names accepted in FeatureConfig lists.
const std::vector<std::string>& numeric_feature_names();
const std::vector<std::string>& categorical_feature_names();

std::optional<double> numeric_feature(const ObservationRecord& record, std::string_view name);
std::optional<std::string> categorical_feature(const ObservationRecord& record, std::string_view name);

struct FeatureConfig {
    double clip_low = 0.01;
    double clip_high = 0.99;
    std::size_t knn_k = 10;
    double indicator_threshold = 0.01;
    std::vector<std::string> numeric = numeric_feature_names();
    std::vector<std::string> categorical = categorical_feature_names();

    /// Throws ParameterError or FieldError.
    void validate() const;
};

struct NumericColumnModel {
    std::string name;
    double clip_low = 0.0;
    double clip_high = 0.0;
    double mean = 0.0;
    double stddev = 0.0;
    double impute = 0.0;
    double missing_fraction = 0.0;
    bool constant = false;
    bool indicator = false;
};

struct CategoricalColumnModel {
    std::string name;
    /// categories[i] encodes as i + 1; 0 is reserved for unseen or missing.
    std::vector<std::string> categories;
    double missing_fraction = 0.0;
    bool indicator = false;

    double encode(const std::optional<std::string>& value) const;
};

struct FeaturePipelineModel {
    FeatureConfig config;
    std::vector<NumericColumnModel> numeric;
    std::vector<CategoricalColumnModel> categorical;
    std::vector<std::string> excluded;
    std::vector<std::string> diagnostics;

    /// Output column order: numeric, categorical, then `<name>_missing`
    /// indicators in the same order.
    std::vector<std::string> column_names() const;

    const NumericColumnModel* find_numeric(std::string_view name) const;

    /// z-score of a raw value for `name` after imputation and clipping.
    double transform_numeric(std::string_view name, std::optional<double> value) const;
};

/// Dense, fully imputed matrix with named columns, row-aligned to record ids.
struct FeatureMatrix {
    std::vector<std::string> columns;
    std::vector<std::string> row_ids;
    Matrix values;

    std::size_t rows() const { return values.rows(); }

    /// Appends columns; `extra` must have the same row count.
    void append(const std::vector<std::string>& names, const Matrix& extra);
};

/// Linear-interpolation quantile of already sorted values.
double quantile_sorted(std::span<const double> sorted, double q);

FeaturePipelineModel fit_feature_pipeline(std::span<const ObservationRecord> train, const FeatureConfig& config);
FeatureMatrix apply_feature_pipeline(const FeaturePipelineModel& model, std::span<const ObservationRecord> table);

void write_feature_matrix(std::ostream& out, const FeatureMatrix& matrix);

void to_json(nlohmann::json& j, const FeatureConfig& config);
void from_json(const nlohmann::json& j, FeatureConfig& config);
void to_json(nlohmann::json& j, const FeaturePipelineModel& model);
void from_json(const nlohmann::json& j, FeaturePipelineModel& model);

} // namespace skyglow
