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
#include <cmath>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "skyglow/error.hpp"
#include "skyglow/features.hpp"

namespace skyglow {
namespace {

FeatureConfig numeric_only(std::vector<std::string> columns, double low = 0.01, double high = 0.99) {
    FeatureConfig config;
    config.numeric = std::move(columns);
    config.categorical.clear();
    config.clip_low = low;
    config.clip_high = high;
    return config;
}

std::size_t column_index(const FeatureMatrix& m, const std::string& name) {
    const auto it = std::find(m.columns.begin(), m.columns.end(), name);
    EXPECT_NE(it, m.columns.end()) << name;
    return static_cast<std::size_t>(it - m.columns.begin());
}

TEST(DecomposeTime, EveningExample) {
    const auto t = decompose_time("2015-03-21 21:30:00");
    EXPECT_EQ(t.year, 2015);
    EXPECT_EQ(t.month, 3);
    EXPECT_EQ(t.seconds_of_day, 77400);
    EXPECT_EQ(t.category, "evening");
    EXPECT_EQ(t.day_of_year, 31 + 28 + 21);
}

TEST(DecomposeTime, MidnightIsNight) {
    const auto t = decompose_time("2015-01-01 00:00:00");
    EXPECT_EQ(t.seconds_of_day, 0);
    EXPECT_EQ(t.category, "night");
    EXPECT_EQ(t.day_of_year, 1);
}

TEST(DecomposeTime, UnparseableTextIsCarried) {
    try {
        decompose_time("21/03/2015 9pm");
        FAIL() << "expected TimeError";
    } catch (const TimeError& e) {
        EXPECT_NE(std::string(e.what()).find("21/03/2015 9pm"), std::string::npos);
    }
}

TEST(BinTarget, RoundingAndClamping) {
    EXPECT_EQ(bin_target(4.4).id, 4);
    EXPECT_EQ(bin_target(4.5).id, 5);
    EXPECT_EQ(bin_target(7.6).id, 7);
    EXPECT_EQ(bin_target(-0.2).id, 0);
    EXPECT_EQ(bin_target(-0.5).id, 0);
    EXPECT_FALSE(bin_target(std::optional<double>{}).has_value());
    EXPECT_THROW(bin_target(std::nan("")), InputError);
    for (int c = 0; c <= 7; ++c) {
        EXPECT_EQ(bin_target(static_cast<double>(c) + 0.0).id, c);
    }
}

TEST(Quantile, LinearInterpolation) {
    const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    EXPECT_NEAR(quantile_sorted(v, 0.1), 1.9, 1e-12);
    EXPECT_NEAR(quantile_sorted(v, 0.9), 9.1, 1e-12);
    EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.5), 5.5);
}

TEST(FitPipeline, ClipBoundsFromQuantiles) {
    ObservationTable table;
    for (int i = 1; i <= 10; ++i) {
        auto r = testing::make_record("r" + std::to_string(i));
        r.elevation_m = i;
        table.push_back(r);
    }
    const auto model = fit_feature_pipeline(table, numeric_only({"elevation_m"}, 0.1, 0.9));
    const auto* col = model.find_numeric("elevation_m");
    ASSERT_NE(col, nullptr);
    EXPECT_NEAR(col->clip_low, 1.9, 1e-12);
    EXPECT_NEAR(col->clip_high, 9.1, 1e-12);
}

TEST(FitPipeline, PopulationStdOfTwoPoints) {
    ObservationTable table{testing::make_record("a"), testing::make_record("b")};
    table[0].elevation_m = 0.0;
    table[1].elevation_m = 10.0;
    const auto model = fit_feature_pipeline(table, numeric_only({"elevation_m"}, 0.0, 1.0));
    const auto* col = model.find_numeric("elevation_m");
    EXPECT_DOUBLE_EQ(col->clip_low, 0.0);
    EXPECT_DOUBLE_EQ(col->clip_high, 10.0);
    EXPECT_DOUBLE_EQ(col->mean, 5.0);
    EXPECT_DOUBLE_EQ(col->stddev, 5.0);
}

TEST(FitPipeline, AllMissingColumnIsExcluded) {
    ObservationTable table{testing::make_record("a"), testing::make_record("b")};
    for (auto& r : table) {
        r.sensor_reading.reset();
    }
    const auto model = fit_feature_pipeline(table, numeric_only({"sensor_reading", "latitude"}));
    EXPECT_EQ(model.excluded, std::vector<std::string>{"sensor_reading"});
    EXPECT_FALSE(model.diagnostics.empty());
    EXPECT_EQ(model.find_numeric("sensor_reading"), nullptr);
    const auto matrix = apply_feature_pipeline(model, table);
    EXPECT_EQ(std::count(matrix.columns.begin(), matrix.columns.end(), "sensor_reading"), 0);
}

TEST(ApplyPipeline, ClampThenStandardize) {
    FeaturePipelineModel model;
    NumericColumnModel col;
    col.name = "elevation_m";
    col.clip_low = 1.0;
    col.clip_high = 7.0;
    col.mean = 4.0;
    col.stddev = 2.0;
    col.impute = 4.0;
    col.indicator = true;
    model.numeric.push_back(col);
    EXPECT_DOUBLE_EQ(model.transform_numeric("elevation_m", 9.2), 1.5);
    EXPECT_DOUBLE_EQ(model.transform_numeric("elevation_m", std::nullopt), 0.0);

    auto rec = testing::make_record("m");
    rec.elevation_m.reset();
    const ObservationRecord rows[] = {rec};
    const auto matrix = apply_feature_pipeline(model, rows);
    EXPECT_DOUBLE_EQ(matrix.values(0, column_index(matrix, "elevation_m")), 0.0);
    EXPECT_DOUBLE_EQ(matrix.values(0, column_index(matrix, "elevation_m_missing")), 1.0);
}

TEST(ApplyPipeline, UnseenCategoryMapsToReservedIndex) {
    ObservationTable table{testing::make_record("a"), testing::make_record("b")};
    table[1].sensor_type = "SQM";
    FeatureConfig config;
    config.numeric.clear();
    config.categorical = {"type"};
    const auto model = fit_feature_pipeline(table, config);
    EXPECT_DOUBLE_EQ(model.categorical[0].encode("XYZ"), 0.0);
    EXPECT_DOUBLE_EQ(model.categorical[0].encode(std::nullopt), 0.0);
    EXPECT_DOUBLE_EQ(model.categorical[0].encode("GAN"), 1.0);
    EXPECT_DOUBLE_EQ(model.categorical[0].encode("SQM"), 2.0);
}

TEST(ApplyPipeline, ConstantColumnEmitsZero) {
    ObservationTable table{testing::make_record("a"), testing::make_record("b")};
    const auto model = fit_feature_pipeline(table, numeric_only({"elevation_m"}));
    EXPECT_TRUE(model.numeric[0].constant);
    auto other = testing::make_record("c");
    other.elevation_m = 5000.0;
    const ObservationRecord rows[] = {other};
    EXPECT_DOUBLE_EQ(apply_feature_pipeline(model, rows).values(0, 0), 0.0);
}

class RandomTable : public ::testing::TestWithParam<int> {
protected:
    ObservationTable make(std::size_t n, bool with_missing) {
        std::mt19937_64 gen(static_cast<std::uint64_t>(GetParam()));
        std::normal_distribution<double> normal;
        std::uniform_real_distribution<double> unit;
        const char* types[] = {"GAN", "SQM", "SQM-L"};
        ObservationTable table;
        for (std::size_t i = 0; i < n; ++i) {
            auto r = testing::make_record("r" + std::to_string(i), 80 * unit(gen) - 40, 300 * unit(gen) - 150);
            r.elevation_m = std::exp(3 + 2 * normal(gen));
            r.sensor_reading = 18 + 2 * normal(gen);
            r.time_zone = std::round(24 * unit(gen) - 12);
            r.sensor_type = types[gen() % 3];
            if (with_missing) {
                if (unit(gen) < 0.3) {
                    r.sensor_reading.reset();
                }
                if (unit(gen) < 0.1) {
                    r.sensor_type.reset();
                }
                if (unit(gen) < 0.05) {
                    r.elevation_m = 1e300;
                }
            }
            table.push_back(r);
        }
        return table;
    }
};

TEST_P(RandomTable, TrainingColumnsAreStandardized) {
    const auto table = make(400, false);
    FeatureConfig config;
    config.numeric = {"latitude", "longitude", "elevation_m", "sensor_reading", "time_zone"};
    config.categorical = {"type"};
    const auto model = fit_feature_pipeline(table, config);
    const auto matrix = apply_feature_pipeline(model, table);
    for (const auto& col : model.numeric) {
        ASSERT_FALSE(col.constant);
        const std::size_t c = column_index(matrix, col.name);
        double sum = 0.0;
        for (std::size_t r = 0; r < matrix.rows(); ++r) {
            sum += matrix.values(r, c);
        }
        const double mean = sum / static_cast<double>(matrix.rows());
        double squares = 0.0;
        for (std::size_t r = 0; r < matrix.rows(); ++r) {
            squares += (matrix.values(r, c) - mean) * (matrix.values(r, c) - mean);
        }
        EXPECT_NEAR(mean, 0.0, 1e-9) << col.name;
        EXPECT_NEAR(std::sqrt(squares / static_cast<double>(matrix.rows())), 1.0, 1e-9) << col.name;
    }
}

TEST_P(RandomTable, OutputIsFiniteForAnyTable) {
    const auto train = make(300, true);
    auto probe = make(50, true);
    probe[0].latitude.reset();
    probe[1].time.reset();
    probe[2].sensor_type = "never seen";
    probe[3].country = "Atlantis";
    const auto model = fit_feature_pipeline(train, FeatureConfig{});
    const auto matrix = apply_feature_pipeline(model, probe);
    EXPECT_EQ(matrix.columns.size(), matrix.values.cols());
    for (double v : matrix.values.data()) {
        EXPECT_TRUE(std::isfinite(v));
    }
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomTable, ::testing::Values(1, 2, 3, 4));

TEST(PipelineJson, RoundTripReproducesTransform) {
    ObservationTable table;
    for (int i = 0; i < 30; ++i) {
        auto r = testing::make_record("r" + std::to_string(i), i * 1.5, -i * 0.7);
        r.elevation_m = i * i;
        if (i % 4 == 0) {
            r.sensor_reading.reset();
        }
        table.push_back(r);
    }
    const auto model = fit_feature_pipeline(table, FeatureConfig{});
    const nlohmann::json j = model;
    const auto reloaded = nlohmann::json::parse(j.dump()).get<FeaturePipelineModel>();
    EXPECT_EQ(apply_feature_pipeline(reloaded, table).values, apply_feature_pipeline(model, table).values);
}

TEST(FeatureConfig, RejectsBadParameters) {
    FeatureConfig config;
    config.clip_low = 0.9;
    config.clip_high = 0.1;
    EXPECT_THROW(config.validate(), ParameterError);
    config = FeatureConfig{};
    config.knn_k = 0;
    EXPECT_THROW(config.validate(), ParameterError);
    config = FeatureConfig{};
    config.numeric.push_back("shoe_size");
    EXPECT_THROW(config.validate(), FieldError);
}

} // namespace
} // namespace skyglow
