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

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "skyglow/error.hpp"
#include "skyglow/neighbors.hpp"

namespace skyglow {
namespace {

Matrix line_points(std::initializer_list<double> xs) {
    Matrix m(xs.size(), 1);
    std::size_t i = 0;
    for (double x : xs) {
        m(i++, 0) = x;
    }
    return m;
}

std::vector<std::size_t> rows_of(const std::vector<Neighbor>& found) {
    std::vector<std::size_t> rows;
    for (const auto& n : found) {
        rows.push_back(n.row);
    }
    return rows;
}

TEST(NeighborIndex, OneDimensionalExample) {
    const NeighborIndex index(line_points({0, 1, 3}));
    EXPECT_EQ(rows_of(index.query_row(0, 2)), (std::vector<std::size_t>{1, 2}));
}

TEST(NeighborIndex, TruncatesWhenKExceedsRows) {
    const NeighborIndex index(line_points({0, 1, 3}));
    EXPECT_EQ(index.query_row(1, 10).size(), 2u);
}

TEST(NeighborIndex, DuplicatePointCountsAtDistanceZero) {
    const NeighborIndex index(line_points({2, 2, 5}));
    const auto found = index.query_row(0, 1);
    ASSERT_EQ(found.size(), 1u);
    EXPECT_EQ(found[0].row, 1u);
    EXPECT_EQ(found[0].distance2, 0.0);
}

TEST(NeighborIndex, TiesResolveToSmallerRow) {
    const NeighborIndex index(line_points({0, -1, 1, 2}));
    EXPECT_EQ(rows_of(index.query_row(0, 2)), (std::vector<std::size_t>{1, 2}));
}

TEST(NeighborMeans, ExamplesOnALine) {
    const NeighborIndex index(line_points({0, 1, 3}));
    const std::vector<std::optional<double>> values{10.0, 20.0, 40.0};
    EXPECT_DOUBLE_EQ(neighbor_mean_features(index, values, 1, NeighborMode::all).mean[0], 20.0);
    EXPECT_DOUBLE_EQ(neighbor_mean_features(index, values, 2, NeighborMode::all).mean[1], 25.0);
}

TEST(NeighborMeans, NoEligibleNeighborFallsBackToGlobalMean) {
    const NeighborIndex index(line_points({0, 1, 3}), {0, 0, 1});
    const std::vector<std::optional<double>> values{10.0, 20.0, std::nullopt};
    const auto means = neighbor_mean_features(index, values, 2, NeighborMode::out_of_fold);
    EXPECT_EQ(means.count[0], 0u);
    EXPECT_DOUBLE_EQ(means.mean[0], 15.0);
    EXPECT_EQ(means.count[1], 0u);
    EXPECT_EQ(means.count[2], 2u);
}

TEST(NeighborMeans, MissingValuesAreSkipped) {
    const NeighborIndex index(line_points({0, 1, 2, 3}));
    const std::vector<std::optional<double>> values{1.0, std::nullopt, 5.0, 7.0};
    const auto means = neighbor_mean_features(index, values, 1, NeighborMode::all);
    EXPECT_DOUBLE_EQ(means.mean[0], 5.0);
    EXPECT_EQ(means.count[0], 1u);
}

TEST(NeighborMeans, RejectsZeroK) {
    const NeighborIndex index(line_points({0, 1}));
    const std::vector<std::optional<double>> values{1.0, 2.0};
    EXPECT_THROW(neighbor_mean_features(index, values, 0, NeighborMode::all), ParameterError);
}

class RandomCloud : public ::testing::TestWithParam<int> {};

TEST_P(RandomCloud, QueriesMatchBruteForce) {
    std::mt19937_64 gen(static_cast<std::uint64_t>(GetParam()));
    const std::size_t n = 20 + gen() % 300;
    Matrix points(n, 4);
    for (double& v : points.data()) {
        // Coarse grid values force plenty of exact distance ties.
        v = static_cast<double>(gen() % 7) - 3.0;
    }
    const NeighborIndex index(points);
    for (std::size_t row = 0; row < n; row += 7) {
        const std::size_t k = 1 + gen() % 15;
        EXPECT_EQ(index.query_row(row, k), oracle::brute_force_knn(points, points.row(row), k, row));
    }
    const std::vector<double> outside{0.5, -0.25, 1.75, 9.0};
    EXPECT_EQ(index.query(outside, 12), oracle::brute_force_knn(points, outside, 12));
}

TEST_P(RandomCloud, OutOfFoldMeansMatchBruteForceAndIgnoreOwnFold) {
    std::mt19937_64 gen(static_cast<std::uint64_t>(GetParam()) + 100);
    std::normal_distribution<double> normal;
    const std::size_t n = 50 + gen() % 200;
    Matrix points(n, 4);
    for (double& v : points.data()) {
        v = normal(gen);
    }
    std::vector<int> folds(n);
    std::vector<std::optional<double>> target(n);
    for (std::size_t i = 0; i < n; ++i) {
        folds[i] = static_cast<int>(gen() % 5);
        if (gen() % 10 != 0) {
            target[i] = normal(gen);
        }
    }
    const NeighborIndex index(points, folds);
    const std::size_t k = 1 + gen() % 12;
    const auto base = neighbor_mean_features(index, target, k, NeighborMode::out_of_fold);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t count = 0;
        const double expected = oracle::brute_force_neighbor_mean(points, target, folds, i, k, true, &count);
        EXPECT_DOUBLE_EQ(base.mean[i], expected);
        EXPECT_EQ(base.count[i], count);
    }

    const int fold = static_cast<int>(gen() % 5);
    auto perturbed = target;
    for (std::size_t i = 0; i < n; ++i) {
        if (folds[i] == fold && perturbed[i]) {
            *perturbed[i] += 100.0;
        }
    }
    const auto after = neighbor_mean_features(index, perturbed, k, NeighborMode::out_of_fold);
    for (std::size_t i = 0; i < n; ++i) {
        if (folds[i] == fold && base.count[i] > 0) {
            EXPECT_EQ(after.mean[i], base.mean[i]) << "row " << i;
        }
    }
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomCloud, ::testing::Range(0, 12));

TEST(NeighborSpace, RowsWithoutCoordinatesAreDiagnosed) {
    ObservationTable table;
    for (int i = 0; i < 5; ++i) {
        table.push_back(testing::make_record("r" + std::to_string(i), i, -i));
    }
    table[2].latitude.reset();
    table[4].time.reset();
    const auto pipeline = fit_feature_pipeline(table, FeatureConfig{});
    const auto space = build_neighbor_index(table, pipeline);
    EXPECT_EQ(space.index.size(), 3u);
    EXPECT_EQ(space.table_rows, (std::vector<std::size_t>{0, 1, 3}));
    EXPECT_EQ(space.diagnostics.size(), 2u);
}

TEST(NeighborSpace, FewerThanTwoRowsIsInsufficient) {
    ObservationTable table{testing::make_record("a"), testing::make_record("b")};
    table[1].longitude.reset();
    const auto pipeline = fit_feature_pipeline(table, FeatureConfig{});
    EXPECT_THROW(build_neighbor_index(table, pipeline), InsufficientDataError);
}

} // namespace
} // namespace skyglow
