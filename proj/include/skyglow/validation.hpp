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
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "skyglow/dataset.hpp"
#include "skyglow/features.hpp"
#include "skyglow/matrix.hpp"
#include "skyglow/modeling.hpp"

namespace skyglow {

struct FoldAssignment {
    std::vector<int> fold;
    int k = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> diagnostics;
};

/// Throws ParameterError unless k >= 2.
void check_fold_count(int k);

/// Within each class the rows are shuffled by seed and dealt round-robin;
/// dealing continues across classes where the previous class stopped.
FoldAssignment stratified_folds(std::span<const TargetClass> labels, int k, std::uint64_t seed);

/// Shuffled rows dealt round-robin, ignoring labels.
FoldAssignment random_folds(std::size_t rows, int k, std::uint64_t seed);

/// Index of the largest entry; ties go to the lowest index.
int argmax_class(std::span<const double> probabilities);
std::vector<TargetClass> predicted_classes(const Matrix& probabilities);

struct MetricsReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
    std::size_t rows = 0;
    /// confusion[truth][predicted]
    std::vector<std::vector<std::size_t>> confusion;
    std::vector<double> fold_f1;
    std::vector<std::size_t> fold_rows;
};

/// Micro-averaged precision, recall and F1 with the confusion matrix.
MetricsReport classification_metrics(std::span<const TargetClass> predicted, std::span<const TargetClass> truth);

/// Pooled metrics plus the micro-F1 and size of every fold in [0, k).
MetricsReport classification_metrics(std::span<const TargetClass> predicted, std::span<const TargetClass> truth,
                                     std::span<const int> folds, int k);

/// Product-moment correlation over complete pairs; nullopt when fewer than
/// two pairs remain or either side has zero variance.
std::optional<double> pearson(std::span<const std::optional<double>> x, std::span<const std::optional<double>> y);
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

/// Value of a numeric field by name; accepts every numeric feature name and
/// `limiting_magnitude`.
std::optional<double> numeric_field(const ObservationRecord& record, std::string_view field);

/// Ascending (year, mean of present values) pairs; years without a value
/// are dropped.
std::vector<std::pair<int, double>> annual_trend(std::span<const ObservationRecord> table, std::string_view field);

struct OofPredictions {
    std::string model_id;
    std::vector<std::string> row_ids;
    std::vector<int> fold;
    Matrix probabilities;
};

void write_oof(std::ostream& out, const OofPredictions& oof);
OofPredictions read_oof(std::istream& in);

void write_metrics(std::ostream& out, const std::string& model_id, const MetricsReport& report);
void write_confusion(std::ostream& out, const MetricsReport& report);

struct CvResult {
    OofPredictions oof;
    std::vector<TargetClass> truth;
    MetricsReport metrics;
    std::vector<std::string> diagnostics;
};

/// Rows of `table` that carry a target.
ObservationTable labeled_rows(std::span<const ObservationRecord> table);

/// K-fold cross-validation over the labeled rows of `table`. Every stage is
/// refit per fold on the training folds only; the held-out fold is predicted
/// by that model.
CvResult run_cv(std::span<const ObservationRecord> table, const ModelingConfig& config, const ModelSpec& spec,
                int k, std::uint64_t seed, bool stratified = true);

} // namespace skyglow
