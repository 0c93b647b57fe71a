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

#include <gtest/gtest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "skyglow/error.hpp"
#include "skyglow/modeling.hpp"
#include "skyglow/synthetic.hpp"
#include "skyglow/validation.hpp"

namespace skyglow {
namespace {

struct Prepared {
    ObservationTable train;
    std::vector<int> folds;
};

Prepared prepared(std::size_t rows, std::uint64_t seed) {
    SyntheticConfig config;
    config.rows = rows;
    config.seed = seed;
    auto data = generate_synthetic(config);
    Prepared p;
    p.train = labeled_rows(join_population(data.observations, data.population));
    for (std::size_t i = 0; i < p.train.size(); ++i) {
        p.folds.push_back(static_cast<int>(i % 3));
    }
    return p;
}

ModelingConfig quick_config() {
    ModelingConfig config;
    config.svd_rank = 3;
    config.features.knn_k = 4;
    return config;
}

ModelSpec quick_spec(LearnerKind learner) {
    auto spec = default_model_specs()[learner == LearnerKind::gbdt ? 0 : 2];
    spec.gbdt.rounds = 10;
    spec.gbdt.min_samples_leaf = 3;
    spec.forest.trees = 10;
    return spec;
}

TEST(Modeling, DefaultSpecs) {
    const auto specs = default_model_specs();
    ASSERT_EQ(specs.size(), 3u);
    EXPECT_EQ(specs[0].id, "gbdt_full");
    EXPECT_TRUE(specs[0].text_features && specs[0].neighbor_features);
    EXPECT_EQ(specs[1].id, "gbdt_base");
    EXPECT_FALSE(specs[1].text_features || specs[1].neighbor_features);
    EXPECT_EQ(specs[2].learner, LearnerKind::forest);
}

TEST(Modeling, FeatureColumnsIncludeTextAndNeighbors) {
    const auto data = prepared(150, 3);
    const auto model = fit_model(data.train, data.folds, quick_spec(LearnerKind::gbdt), quick_config(), 0);
    const auto x = model_features(model, data.train);
    const auto has = [&](const std::string& name) {
        return std::find(x.columns.begin(), x.columns.end(), name) != x.columns.end();
    };
    EXPECT_TRUE(has("comment_1_svd_0"));
    EXPECT_TRUE(has("comment_2_svd_2"));
    EXPECT_FALSE(has("comment_1_svd_3"));
    EXPECT_TRUE(has("knn_target_mean"));
    EXPECT_TRUE(has("knn_target_count"));
    EXPECT_TRUE(has("knn_sensor_mean"));
    EXPECT_EQ(x.values.cols(), x.columns.size());
}

TEST(Modeling, JsonRoundTripPredictsIdentically) {
    const auto data = prepared(150, 4);
    for (auto learner : {LearnerKind::gbdt, LearnerKind::forest}) {
        const auto model = fit_model(data.train, data.folds, quick_spec(learner), quick_config(), 1);
        const nlohmann::json j = model;
        const auto reloaded = nlohmann::json::parse(j.dump()).get<FittedModel>();
        EXPECT_EQ(predict_model(reloaded, data.train), predict_model(model, data.train));
    }
}

TEST(Modeling, UnseenCountryAndMissingCoordinatesStillPredict) {
    const auto data = prepared(150, 5);
    const auto model = fit_model(data.train, data.folds, quick_spec(LearnerKind::gbdt), quick_config(), 0);
    auto stranger = data.train[0];
    stranger.id = "stranger";
    stranger.country = "Atlantis";
    stranger.population = PopulationJoin{123.0, false};
    stranger.latitude.reset();
    stranger.comment_1 = "words nobody used before";
    const ObservationRecord rows[] = {stranger};
    const Matrix p = predict_model(model, rows);
    double sum = 0.0;
    for (double v : p.row(0)) {
        sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
}

TEST(Modeling, RowsWithoutTargetAreRejected) {
    auto data = prepared(60, 6);
    data.train[3].limiting_magnitude.reset();
    EXPECT_THROW(fit_model(data.train, data.folds, quick_spec(LearnerKind::forest), quick_config()), InputError);
}

TEST(Modeling, NeighborFeaturesNeedFolds) {
    const auto data = prepared(60, 7);
    EXPECT_THROW(fit_model(data.train, {}, quick_spec(LearnerKind::forest), quick_config()), ParameterError);
}

TEST(Synthetic, RatesMatchConfiguration) {
    SyntheticConfig config;
    const auto data = generate_synthetic(config);
    ASSERT_EQ(data.observations.size(), 2000u);
    const auto missing = missingness_report(data.observations);
    EXPECT_NEAR(missing.at("sensor_reading").missing_fraction, 0.828, 0.01);
    EXPECT_NEAR(missing.at("comment_1").missing_fraction, 0.429, 0.01);
    EXPECT_NEAR(missing.at("comment_2").missing_fraction, 0.480, 0.01);
    EXPECT_NEAR(missing.at("constellation").missing_fraction, 0.121, 0.01);
    EXPECT_NEAR(missing.at("limiting_magnitude").missing_fraction, 0.080, 0.01);
    EXPECT_NEAR(category_distribution(data.observations, "type").fraction("GAN"), 0.801, 0.01);
    EXPECT_NEAR(category_distribution(data.observations, "clouds").fraction("clear"), 0.594, 0.01);
    EXPECT_NEAR(category_distribution(data.observations, "constellation").fraction("Orion"), 0.410, 0.01);
    EXPECT_NEAR(category_distribution(data.observations, "time_of_day_category").fraction("evening"), 0.827, 0.01);
}

TEST(Synthetic, DeterministicPerSeed) {
    SyntheticConfig config;
    config.rows = 300;
    EXPECT_EQ(generate_synthetic(config).observations, generate_synthetic(config).observations);
    auto other = config;
    other.seed = config.seed + 1;
    EXPECT_NE(generate_synthetic(config).observations, generate_synthetic(other).observations);
}

TEST(Synthetic, FourTargetClasses) {
    const auto data = generate_synthetic(SyntheticConfig{});
    std::set<int> seen;
    for (const auto& rec : data.observations) {
        if (rec.limiting_magnitude) {
            seen.insert(bin_target(*rec.limiting_magnitude).id);
        }
    }
    EXPECT_EQ(seen.size(), 4u);
}

} // namespace
} // namespace skyglow
