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

#include <sstream>

#include "fixtures.hpp"
#include "skyglow/cli.hpp"
#include "skyglow/csv.hpp"
#include "skyglow/error.hpp"
#include "workspace.hpp"

namespace skyglow {
namespace {

namespace fs = std::filesystem;

RunConfig parse(const std::string& text, const fs::path& base = "/data") {
    std::istringstream in(text);
    return parse_config(in, base);
}

int run(const RunConfig& config, std::string_view command, std::string* err_text = nullptr) {
    std::ostringstream err;
    const int rc = dispatch(command, config, err);
    if (err_text) {
        *err_text = err.str();
    }
    return rc;
}

TEST(Config, MinimalFileGetsDefaults) {
    const auto config = parse("[paths]\nobservations = obs.csv\npopulation = pop.csv\n");
    EXPECT_EQ(config.observations, fs::path("/data/obs.csv"));
    EXPECT_EQ(config.population, fs::path("/data/pop.csv"));
    EXPECT_EQ(config.cv_k, 5);
    EXPECT_TRUE(config.cv_stratified);
    EXPECT_EQ(config.modeling.features.knn_k, 10u);
    EXPECT_DOUBLE_EQ(config.modeling.features.clip_low, 0.01);
    EXPECT_DOUBLE_EQ(config.modeling.features.clip_high, 0.99);
    EXPECT_EQ(config.modeling.svd_rank, 32u);
    EXPECT_EQ(config.modeling.vocabulary_cap, 20000u);
    EXPECT_EQ(config.gbdt.rounds, 300u);
    EXPECT_DOUBLE_EQ(config.gbdt.learning_rate, 0.05);
    EXPECT_EQ(config.gbdt.max_leaves, 31u);
    EXPECT_EQ(config.gbdt.min_samples_leaf, 20u);
    EXPECT_EQ(config.gbdt.max_bins, 256u);
    EXPECT_DOUBLE_EQ(config.gbdt.l2, 1.0);
    EXPECT_EQ(config.gbdt.early_stopping_patience, 30u);
    EXPECT_EQ(config.forest.trees, 300u);
    EXPECT_EQ(config.models.size(), 3u);
    EXPECT_NO_THROW(config.validate());
}

TEST(Config, FoldCountOfOneIsAParameterError) {
    const auto config = parse("cv.k = 1\n");
    EXPECT_THROW(config.validate(), ParameterError);
}

TEST(Config, UnknownKeyIsNamed) {
    try {
        parse("[cv]\nkk = 5\n");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("cv.kk"), std::string::npos) << e.what();
    }
}

TEST(Config, MalformedInput) {
    EXPECT_THROW(parse("cv.k = 3\ncv.k = 4\n"), ConfigError);
    EXPECT_THROW(parse("cv.k = three\n"), ConfigError);
    EXPECT_THROW(parse("[cv\nk = 3\n"), ConfigError);
    EXPECT_THROW(parse("just words\n"), ConfigError);
    EXPECT_THROW(parse("ingest.mode = sloppy\n"), ConfigError);
}

TEST(Config, EchoParsesBackToTheSameValues) {
    auto config = parse("[gbdt]\nrounds = 17\n[ensemble]\nsteps = 0.3, 0.02\n[features]\nnumeric = latitude, year\n");
    std::ostringstream echo;
    write_config(echo, config);
    const auto again = parse(echo.str(), "/");
    std::ostringstream echo2;
    write_config(echo2, again);
    EXPECT_EQ(echo.str(), echo2.str());
    EXPECT_EQ(again.gbdt.rounds, 17u);
    EXPECT_EQ(again.ensemble_steps, (std::vector<double>{0.3, 0.02}));
    EXPECT_EQ(echo.str().find("paths.output"), std::string::npos);
}

TEST(Config, SeedOverrideReachesEverySeed) {
    auto config = parse("");
    config.apply_seed(42);
    EXPECT_EQ(config.cv_seed, 42u);
    EXPECT_EQ(config.gbdt.seed, 42u);
    EXPECT_EQ(config.forest.seed, 42u);
    EXPECT_EQ(config.modeling.seed, 42u);
    EXPECT_EQ(config.ensemble_seed, 42u);
}

TEST(Config, MissingInputFileIsReported) {
    testing::TempDir dir("cfg");
    testing::write_file(dir / "c.conf", "[paths]\nobservations = nowhere.csv\n");
    EXPECT_THROW(load_config(dir / "c.conf"), ConfigError);
}

TEST(Cli, CvBeforeFeaturesIsADependencyError) {
    testing::TempDir dir("dep");
    auto config = load_config(testing::write_workspace(dir.path(), 60, 1, testing::kQuickModels));
    std::string err;
    EXPECT_EQ(run(config, "cv", &err), 3);
    EXPECT_NE(err.find("feature_matrix.csv"), std::string::npos) << err;
    EXPECT_THROW(run_command("cv", config), DependencyError);
}

TEST(Cli, UnknownCommandAndBadArguments) {
    testing::TempDir dir("args");
    const auto conf = testing::write_workspace(dir.path(), 40, 1).string();
    std::vector<std::string> args{"skyglow", "explode", "--config", conf};
    std::vector<char*> argv;
    for (auto& a : args) {
        argv.push_back(a.data());
    }
    EXPECT_NE(cli_main(static_cast<int>(argv.size()), argv.data()), 0);

    testing::write_file(dir / "bad.conf", "cv.kk = 2\n");
    std::vector<std::string> bad{"skyglow", "ingest", "--config", (dir / "bad.conf").string()};
    std::vector<char*> bad_argv;
    for (auto& a : bad) {
        bad_argv.push_back(a.data());
    }
    EXPECT_EQ(cli_main(static_cast<int>(bad_argv.size()), bad_argv.data()), 2);
}

class Pipeline : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = new testing::TempDir("pipeline");
        config_ = new RunConfig(load_config(testing::write_workspace(dir_->path(), 300, 7, testing::kQuickModels)));
        for (const auto& command : command_names()) {
            std::string err;
            ASSERT_EQ(run(*config_, command, &err), 0) << command << ": " << err;
        }
    }
    static void TearDownTestSuite() {
        delete config_;
        delete dir_;
    }
    static fs::path out(std::string_view name) { return config_->output / name; }

    static testing::TempDir* dir_;
    static RunConfig* config_;
};

testing::TempDir* Pipeline::dir_ = nullptr;
RunConfig* Pipeline::config_ = nullptr;

TEST_F(Pipeline, ComparisonHasEveryModelAndOrderedEnsembles) {
    const auto rows = testing::read_csv(out("report/model_comparison.csv"));
    ASSERT_EQ(rows.size(), 6u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"model_id", "kind", "rows", "micro_f1"}));
    std::map<std::string, double> f1;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        f1[rows[r][0]] = *csv::parse_double(rows[r][3]);
    }
    for (const char* id : {"gbdt_full", "gbdt_base", "forest", "ensemble_mean", "ensemble_opt"}) {
        EXPECT_EQ(f1.count(id), 1u) << id;
    }
    EXPECT_GE(f1["ensemble_opt"], f1["ensemble_mean"]);
    EXPECT_GE(f1["ensemble_opt"], std::max({f1["gbdt_full"], f1["gbdt_base"], f1["forest"]}));
}

TEST_F(Pipeline, PredictHandlesUnseenCountry) {
    const auto rows = testing::read_csv(out("predict/predictions.csv"));
    ASSERT_EQ(rows.size(), 26u);
    EXPECT_EQ(rows[0][0], "row_id");
    EXPECT_EQ(rows[0][1], "predicted_class");
    EXPECT_EQ(rows.back().size(), 10u);
    double sum = 0.0;
    for (std::size_t c = 2; c < rows.back().size(); ++c) {
        sum += *csv::parse_double(rows.back()[c]);
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
}

TEST_F(Pipeline, EveryCsvHasAHeaderAndEverySvgCloses) {
    std::size_t svgs = 0;
    for (const auto& rel : testing::list_files(config_->output)) {
        const auto path = config_->output / rel;
        if (rel.extension() == ".csv") {
            const auto rows = testing::read_csv(path);
            ASSERT_FALSE(rows.empty()) << rel;
            EXPECT_FALSE(rows[0].empty()) << rel;
        } else if (rel.extension() == ".svg") {
            ++svgs;
            const std::string text = testing::read_file(path);
            EXPECT_EQ(text.rfind("</svg>\n"), text.size() - 7) << rel;
        }
    }
    EXPECT_GT(svgs, 4u);
    EXPECT_FALSE(fs::exists(out(".skyglow.lock")));
}

TEST_F(Pipeline, RerunningACommandIsIdempotent) {
    const std::string before = testing::read_file(out("ensemble/weights.csv"));
    ASSERT_EQ(run(*config_, "ensemble"), 0);
    EXPECT_EQ(testing::read_file(out("ensemble/weights.csv")), before);
}

TEST_F(Pipeline, HeldLockRefusesASecondRun) {
    testing::write_file(out(".skyglow.lock"), "");
    std::string err;
    EXPECT_EQ(run(*config_, "report", &err), 1);
    EXPECT_NE(err.find("lock"), std::string::npos) << err;
    fs::remove(out(".skyglow.lock"));
}

} // namespace
} // namespace skyglow
