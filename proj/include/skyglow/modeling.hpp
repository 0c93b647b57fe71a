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
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "skyglow/dataset.hpp"
#include "skyglow/features.hpp"
#include "skyglow/learners.hpp"
#include "skyglow/matrix.hpp"
#include "skyglow/textfeat.hpp"

namespace skyglow {

/// Settings shared by every model: tabular pipeline plus text compression.
struct ModelingConfig {
    FeatureConfig features;
    std::size_t svd_rank = 32;
    std::size_t vocabulary_cap = kDefaultVocabularyCap;
    std::vector<std::string> text_fields{"comment_1", "comment_2"};
    /// Seeds the randomized SVD of each text field.
    std::uint64_t seed = 0;

    void validate() const;
};

enum class LearnerKind { gbdt, forest };

struct ModelSpec {
    std::string id;
    LearnerKind learner = LearnerKind::gbdt;
    bool text_features = false;
    bool neighbor_features = false;
    GbdtParams gbdt;
    ForestParams forest;
};

/// The three models of the standard workflow: boosting with and without the
/// text and neighbor features, and a random forest on the full feature set.
std::vector<ModelSpec> default_model_specs(const GbdtParams& gbdt = {}, const ForestParams& forest = {});

struct TextColumnModel {
    std::string field;
    TfidfModel tfidf;
    SvdModel svd;
};

/// Everything needed to turn raw observations into class probabilities.
struct FittedModel {
    ModelSpec spec;
    FeaturePipelineModel pipeline;
    std::vector<TextColumnModel> text;
    /// Neighbor-space coordinates of the indexed training rows with their
    /// targets and sensor readings.
    Matrix neighbor_points;
    std::vector<std::optional<double>> neighbor_target;
    std::vector<std::optional<double>> neighbor_sensor;
    std::optional<GbdtModel> gbdt;
    std::optional<ForestModel> forest;
    std::vector<std::string> diagnostics;
};

/// Text field accessor; throws FieldError for names other than comment_1/2.
const std::optional<std::string>& text_field(const ObservationRecord& record, const std::string& field);

/// Fits every stage on `train`, whose rows must all carry a target.
/// `folds` assigns each training row to a fold: neighbor target features of
/// training rows only average neighbors from other folds, and boosting uses
/// the rows of `early_stopping_fold` (when given) as its validation split.
FittedModel fit_model(std::span<const ObservationRecord> train, std::span<const int> folds, const ModelSpec& spec,
                      const ModelingConfig& config, std::optional<int> early_stopping_fold = std::nullopt);

/// Feature matrix of `table` as seen by a fitted model (no target access).
FeatureMatrix model_features(const FittedModel& model, std::span<const ObservationRecord> table);

/// rows x kNumClasses class probabilities.
Matrix predict_model(const FittedModel& model, std::span<const ObservationRecord> table);

void to_json(nlohmann::json& j, const ModelSpec& spec);
void from_json(const nlohmann::json& j, ModelSpec& spec);
void to_json(nlohmann::json& j, const FittedModel& model);
void from_json(const nlohmann::json& j, FittedModel& model);

} // namespace skyglow
