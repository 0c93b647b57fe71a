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
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "skyglow/features.hpp"
#include "skyglow/matrix.hpp"

namespace skyglow {

/// Equal-frequency bin edges per feature. Bin b holds values in
/// (edges[b-1], edges[b]]; a value equal to an edge falls in the lower bin.
struct BinMapper {
    std::vector<std::vector<double>> edges;

    static BinMapper fit(const Matrix& x, std::size_t max_bins);

    std::size_t bin_count(std::size_t feature) const { return edges[feature].size() + 1; }
    std::uint8_t bin(std::size_t feature, double value) const;

    /// Column-major bin codes for every cell of `x`.
    std::vector<std::vector<std::uint8_t>> transform(const Matrix& x) const;
};

struct GbdtParams {
    std::size_t rounds = 300;
    double learning_rate = 0.05;
    std::size_t max_leaves = 31;
    std::size_t min_samples_leaf = 20;
    std::size_t max_bins = 256;
    double l2 = 1.0;
    /// Rounds without validation improvement before stopping; only used when
    /// a validation set is supplied.
    std::size_t early_stopping_patience = 30;
    std::uint64_t seed = 0;
    int num_classes = kNumClasses;

    void validate() const;
};

struct ForestParams {
    std::size_t trees = 300;
    std::size_t min_samples_leaf = 1;
    std::size_t max_bins = 256;
    std::uint64_t seed = 0;
    int num_classes = kNumClasses;

    void validate() const;
};

/// Binary tree stored as a node array; node 0 is the root. A node with
/// feature < 0 is a leaf.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;  // go left when x <= threshold
    int left = -1;
    int right = -1;
    double value = 0.0;             // GBDT leaf: additive score update
    std::vector<double> distribution;  // forest leaf: class probabilities

    bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    const TreeNode& leaf_for(std::span<const double> row) const;
    std::size_t leaf_count() const;
};

struct GbdtModel {
    GbdtParams params;
    std::vector<std::string> feature_names;
    /// Classes present in training; only these carry scores and trees.
    std::vector<int> active_classes;
    /// ln(prior) per active class.
    std::vector<double> initial_scores;
    /// rounds[r][a]: tree of round r for active class a.
    std::vector<std::vector<DecisionTree>> rounds;
    /// Mean training log-loss before round 1 (index 0) and after each round.
    std::vector<double> train_loss;
    std::vector<double> valid_loss;
    std::vector<std::string> diagnostics;
};

struct ValidationSet {
    const FeatureMatrix* features = nullptr;
    std::span<const TargetClass> labels;
};

/// Multiclass softmax boosting. Each round fits one histogram regression
/// tree per active class to the log-loss gradient (p - y) with hessian
/// p(1 - p); leaf value = -lr * sum(g) / (sum(h) + l2).
GbdtModel fit_gbdt(const FeatureMatrix& x, std::span<const TargetClass> y, const GbdtParams& params,
                   const ValidationSet& validation = {});

/// rows x num_classes; classes absent from training get probability 0.
Matrix predict_proba_gbdt(const GbdtModel& model, const FeatureMatrix& x);
Matrix predict_proba_gbdt(const GbdtModel& model, const Matrix& x);

struct ForestModel {
    ForestParams params;
    std::vector<std::string> feature_names;
    std::size_t max_features = 1;
    std::vector<DecisionTree> trees;
};

/// Gini classification trees on bootstrap resamples, floor(sqrt(F))
/// candidate features per split, grown until pure or min-leaf bound.
ForestModel fit_forest(const FeatureMatrix& x, std::span<const TargetClass> y, const ForestParams& params);

/// Mean of per-tree leaf class distributions.
Matrix predict_proba_forest(const ForestModel& model, const FeatureMatrix& x);
Matrix predict_proba_forest(const ForestModel& model, const Matrix& x);

/// Mean multiclass log-loss of softmax(scores) against labels.
double softmax_log_loss(const Matrix& scores, std::span<const int> labels);

/// Analytic gradient of the log-loss of one row w.r.t. its class scores:
/// softmax(scores) - onehot(label).
std::vector<double> softmax_gradient(std::span<const double> scores, int label);

void to_json(nlohmann::json& j, const GbdtParams& params);
void from_json(const nlohmann::json& j, GbdtParams& params);
void to_json(nlohmann::json& j, const ForestParams& params);
void from_json(const nlohmann::json& j, ForestParams& params);
void to_json(nlohmann::json& j, const DecisionTree& tree);
void from_json(const nlohmann::json& j, DecisionTree& tree);
void to_json(nlohmann::json& j, const GbdtModel& model);
void from_json(const nlohmann::json& j, GbdtModel& model);
void to_json(nlohmann::json& j, const ForestModel& model);
void from_json(const nlohmann::json& j, ForestModel& model);

} // namespace skyglow
