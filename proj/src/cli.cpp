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

#include "skyglow/cli.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "skyglow/csv.hpp"
#include "skyglow/ensemble.hpp"
#include "skyglow/error.hpp"
#include "skyglow/svg.hpp"
#include "skyglow/validation.hpp"

namespace skyglow {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kDistributionFields{"type", "clouds", "constellation", "time_of_day_category"};

/// Exclusive claim on an output directory for the lifetime of a command.
class OutputLock {
public:
    explicit OutputLock(const fs::path& dir) : path_(dir / ".skyglow.lock") {
        fs::create_directories(dir);
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0) {
            throw Error("output directory '" + dir.string() + "' is in use by another run (lock file " +
                        path_.string() + ")");
        }
    }
    ~OutputLock() {
        ::close(fd_);
        std::error_code ignored;
        fs::remove(path_, ignored);
    }
    OutputLock(const OutputLock&) = delete;
    OutputLock& operator=(const OutputLock&) = delete;

private:
    fs::path path_;
    int fd_ = -1;
};

class Workspace {
public:
    explicit Workspace(const RunConfig& config) : config_(config), root_(config.output) {}

    fs::path path(const std::string& relative) const { return root_ / relative; }

    void require(const std::string& relative, std::string_view producer) const {
        if (!fs::exists(path(relative))) {
            throw DependencyError("missing prerequisite '" + path(relative).string() + "'; run '" +
                                  std::string(producer) + "' first");
        }
    }

    std::ifstream open(const std::string& relative) const {
        std::ifstream in(path(relative), std::ios::binary);
        if (!in) {
            throw InputError("cannot read '" + path(relative).string() + "'");
        }
        return in;
    }

    std::ofstream create(const std::string& relative) const {
        const fs::path p = path(relative);
        fs::create_directories(p.parent_path());
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw InputError("cannot write '" + p.string() + "'");
        }
        return out;
    }

    const RunConfig& config() const { return config_; }

private:
    const RunConfig& config_;
    fs::path root_;
};

void report_diagnostics(std::string_view stage, const std::vector<std::string>& notes) {
    for (const auto& note : notes) {
        std::cerr << "skyglow " << stage << ": " << note << '\n';
    }
}

ParsedObservations read_observations(const fs::path& path, Strictness strictness) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot read observations '" + path.string() + "'");
    }
    return parse_observations(in, strictness);
}

/// Ingested observations with the census join applied when a population
/// table was ingested.
ObservationTable load_table(const Workspace& ws) {
    ws.require("ingest/observations.csv", "ingest");
    auto in = ws.open("ingest/observations.csv");
    ObservationTable table = parse_observations(in, Strictness::strict).records;
    if (fs::exists(ws.path("ingest/population.csv"))) {
        auto pop_in = ws.open("ingest/population.csv");
        table = join_population(std::move(table), parse_population(pop_in));
    }
    return table;
}

std::vector<TargetClass> labels_of(std::span<const ObservationRecord> table) {
    std::vector<TargetClass> out;
    for (const auto& rec : table) {
        out.push_back(*bin_target(rec.limiting_magnitude));
    }
    return out;
}

FoldAssignment assign_folds(const RunConfig& config, std::span<const TargetClass> labels) {
    return config.cv_stratified ? stratified_folds(labels, config.cv_k, config.cv_seed)
                                : random_folds(labels.size(), config.cv_k, config.cv_seed);
}

void cmd_ingest(const Workspace& ws) {
    const RunConfig& config = ws.config();
    ParsedObservations parsed = read_observations(config.observations, config.strictness);
    {
        auto out = ws.create("ingest/observations.csv");
        write_observations(out, parsed.records);
    }
    if (!config.population.empty()) {
        std::ifstream in(config.population, std::ios::binary);
        if (!in) {
            throw InputError("cannot read population '" + config.population.string() + "'");
        }
        const PopulationTable population = parse_population(in);
        auto out = ws.create("ingest/population.csv");
        write_population(out, population);
    } else {
        fs::remove(ws.path("ingest/population.csv"));
    }
    auto out = ws.create("ingest/diagnostics.csv");
    csv::write_row(out, {"line", "row_id", "message"});
    for (const auto& d : parsed.diagnostics) {
        csv::write_row(out, {std::to_string(d.line), d.row_id, d.message});
    }
    if (!parsed.diagnostics.empty()) {
        std::cerr << "skyglow ingest: " << parsed.diagnostics.size() << " rows dropped; see "
                  << ws.path("ingest/diagnostics.csv").string() << '\n';
    }
}

void cmd_eda(const Workspace& ws) {
    const ObservationTable table = load_table(ws);
    {
        auto out = ws.create("eda/missingness.csv");
        write_missingness_report(out, missingness_report(table));
    }
    for (const auto& field : kDistributionFields) {
        auto out = ws.create("eda/distribution_" + field + ".csv");
        write_frequency_table(out, category_distribution(table, field));
    }
    {
        std::vector<std::optional<double>> target;
        for (const auto& rec : table) {
            target.push_back(rec.limiting_magnitude);
        }
        auto out = ws.create("eda/correlation.csv");
        csv::write_row(out, {"field", "pearson_with_limiting_magnitude", "complete_pairs"});
        for (const auto& name : numeric_feature_names()) {
            std::vector<std::optional<double>> values;
            std::size_t pairs = 0;
            for (std::size_t i = 0; i < table.size(); ++i) {
                values.push_back(numeric_field(table[i], name));
                pairs += values.back() && target[i] ? 1 : 0;
            }
            const auto r = pearson(std::span<const std::optional<double>>(values), target);
            csv::write_row(out, {name, r ? csv::format_double(*r) : "", std::to_string(pairs)});
        }
    }
    auto out = ws.create("eda/annual_trend.csv");
    csv::write_row(out, {"field", "year", "mean"});
    for (const auto& field : ws.config().trend_fields) {
        for (const auto& [year, mean] : annual_trend(table, field)) {
            csv::write_row(out, {field, std::to_string(year), csv::format_double(mean)});
        }
    }
}

void cmd_features(const Workspace& ws) {
    const ObservationTable table = load_table(ws);
    const FeaturePipelineModel pipeline = fit_feature_pipeline(table, ws.config().modeling.features);
    report_diagnostics("features", pipeline.diagnostics);
    {
        auto out = ws.create("features/feature_matrix.csv");
        write_feature_matrix(out, apply_feature_pipeline(pipeline, table));
    }
    {
        auto out = ws.create("features/pipeline.json");
        out << nlohmann::json(pipeline).dump(2) << '\n';
    }
    auto out = ws.create("features/labels.csv");
    csv::write_row(out, {"row_id", "limiting_magnitude", "target_class"});
    for (const auto& rec : table) {
        if (rec.limiting_magnitude) {
            csv::write_row(out, {rec.id, csv::format_double(*rec.limiting_magnitude),
                                 std::to_string(bin_target(*rec.limiting_magnitude).id)});
        }
    }
}

void cmd_cv(const Workspace& ws) {
    ws.require("features/feature_matrix.csv", "features");
    const RunConfig& config = ws.config();
    const ObservationTable table = load_table(ws);
    bool truth_written = false;
    for (const auto& spec : config.model_specs()) {
        const CvResult result =
            run_cv(table, config.modeling, spec, config.cv_k, config.cv_seed, config.cv_stratified);
        report_diagnostics("cv " + spec.id, result.diagnostics);
        {
            auto out = ws.create("cv/oof_" + spec.id + ".csv");
            write_oof(out, result.oof);
        }
        {
            auto out = ws.create("cv/metrics_" + spec.id + ".csv");
            write_metrics(out, spec.id, result.metrics);
        }
        {
            auto out = ws.create("cv/confusion_" + spec.id + ".csv");
            write_confusion(out, result.metrics);
        }
        if (!truth_written) {
            auto out = ws.create("cv/truth.csv");
            csv::write_row(out, {"row_id", "fold", "target_class"});
            for (std::size_t i = 0; i < result.truth.size(); ++i) {
                csv::write_row(out, {result.oof.row_ids[i], std::to_string(result.oof.fold[i]),
                                     std::to_string(result.truth[i].id)});
            }
            truth_written = true;
        }
    }
}

void cmd_train(const Workspace& ws) {
    ws.require("features/feature_matrix.csv", "features");
    const RunConfig& config = ws.config();
    const ObservationTable rows = labeled_rows(load_table(ws));
    if (rows.empty()) {
        throw InsufficientDataError("training needs labeled rows");
    }
    const FoldAssignment folds = assign_folds(config, labels_of(rows));
    for (const auto& spec : config.model_specs()) {
        const FittedModel model = fit_model(rows, folds.fold, spec, config.modeling, 0);
        report_diagnostics("train " + spec.id, model.diagnostics);
        auto out = ws.create("models/" + spec.id + ".json");
        out << nlohmann::json(model).dump() << '\n';
    }
}

struct OofSet {
    std::vector<std::string> row_ids;
    std::vector<int> folds;
    std::vector<TargetClass> truth;
    std::vector<std::string> model_ids;
    std::vector<Matrix> probabilities;
};

OofSet load_oof_set(const Workspace& ws) {
    ws.require("cv/truth.csv", "cv");
    OofSet set;
    {
        auto in = ws.open("cv/truth.csv");
        const auto rows = csv::read_all(in);
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const auto fold = csv::parse_integer(rows[r].at(1));
            const auto label = csv::parse_integer(rows[r].at(2));
            if (!fold || !label) {
                throw ParseError("cv/truth.csv line " + std::to_string(r + 1) + " is malformed");
            }
            set.row_ids.push_back(rows[r][0]);
            set.folds.push_back(static_cast<int>(*fold));
            set.truth.push_back(TargetClass{static_cast<int>(*label)});
        }
    }
    for (const auto& id : ws.config().models) {
        const std::string file = "cv/oof_" + id + ".csv";
        ws.require(file, "cv");
        auto in = ws.open(file);
        OofPredictions oof = read_oof(in);
        if (oof.row_ids != set.row_ids) {
            throw InputError("'" + file + "' is not row-aligned with cv/truth.csv; rerun 'cv'");
        }
        set.model_ids.push_back(id);
        set.probabilities.push_back(std::move(oof.probabilities));
    }
    return set;
}

void write_blend(const Workspace& ws, const OofSet& set, const std::string& id, const Matrix& probabilities) {
    {
        auto out = ws.create("ensemble/oof_" + id + ".csv");
        write_oof(out, OofPredictions{id, set.row_ids, set.folds, probabilities});
    }
    auto out = ws.create("ensemble/metrics_" + id + ".csv");
    write_metrics(out, id,
                  classification_metrics(predicted_classes(probabilities), set.truth, set.folds, ws.config().cv_k));
}

void cmd_ensemble(const Workspace& ws) {
    const RunConfig& config = ws.config();
    const OofSet set = load_oof_set(ws);
    const EnsembleWeights weights =
        optimize_weights(set.probabilities, set.truth, config.ensemble_steps, config.ensemble_seed, set.model_ids);
    {
        auto out = ws.create("ensemble/weights.csv");
        write_weights(out, weights);
    }
    write_blend(ws, set, "ensemble_mean", mean_blend(set.probabilities));
    write_blend(ws, set, "ensemble_opt", blend(set.probabilities, weights.weights));
}

void cmd_predict(const Workspace& ws) {
    const RunConfig& config = ws.config();
    if (config.predict_input.empty()) {
        throw ConfigError("paths.predict_input is required for 'predict'");
    }
    ws.require("ensemble/weights.csv", "ensemble");
    EnsembleWeights weights;
    {
        auto in = ws.open("ensemble/weights.csv");
        weights = read_weights(in);
    }
    ParsedObservations parsed = read_observations(config.predict_input, Strictness::lenient);
    for (const auto& d : parsed.diagnostics) {
        std::cerr << "skyglow predict: line " << d.line << " (" << d.row_id << "): " << d.message << '\n';
    }
    ObservationTable table = std::move(parsed.records);
    if (fs::exists(ws.path("ingest/population.csv"))) {
        auto in = ws.open("ingest/population.csv");
        table = join_population(std::move(table), parse_population(in));
    }

    std::vector<Matrix> probabilities;
    for (const auto& id : weights.model_ids) {
        const std::string file = "models/" + id + ".json";
        ws.require(file, "train");
        auto in = ws.open(file);
        const FittedModel model = nlohmann::json::parse(in).get<FittedModel>();
        probabilities.push_back(predict_model(model, table));
    }
    const Matrix blended = blend(probabilities, weights.weights);

    auto out = ws.create("predict/predictions.csv");
    std::vector<std::string> header{"row_id", "predicted_class"};
    for (int c = 0; c < kNumClasses; ++c) {
        header.push_back("p_class_" + std::to_string(c));
    }
    csv::write_row(out, header);
    for (std::size_t i = 0; i < table.size(); ++i) {
        std::vector<std::string> row{table[i].id, std::to_string(argmax_class(blended.row(i)))};
        for (double p : blended.row(i)) {
            row.push_back(csv::format_double(p));
        }
        csv::write_row(out, row);
    }
}

void copy_artifact(const Workspace& ws, const std::string& from, const std::string& to) {
    auto in = ws.open(from);
    auto out = ws.create(to);
    out << in.rdbuf();
}

void cmd_report(const Workspace& ws) {
    const RunConfig& config = ws.config();
    ws.require("eda/missingness.csv", "eda");
    ws.require("ensemble/weights.csv", "ensemble");
    const OofSet set = load_oof_set(ws);
    EnsembleWeights weights;
    {
        auto in = ws.open("ensemble/weights.csv");
        weights = read_weights(in);
    }
    if (weights.model_ids != set.model_ids) {
        throw InputError("ensemble/weights.csv does not list the configured models; rerun 'ensemble'");
    }

    std::vector<std::pair<std::string, Matrix>> entries;
    for (std::size_t m = 0; m < set.model_ids.size(); ++m) {
        entries.emplace_back(set.model_ids[m], set.probabilities[m]);
    }
    entries.emplace_back("ensemble_mean", mean_blend(set.probabilities));
    entries.emplace_back("ensemble_opt", blend(set.probabilities, weights.weights));

    ChartData comparison_chart{"Out-of-fold micro-F1 by model", {}, {}};
    {
        auto comparison = ws.create("report/model_comparison.csv");
        auto folds = ws.create("report/fold_metrics.csv");
        csv::write_row(comparison, {"model_id", "kind", "rows", "micro_f1"});
        csv::write_row(folds, {"model_id", "fold", "rows", "micro_f1"});
        for (const auto& [id, probs] : entries) {
            const MetricsReport metrics =
                classification_metrics(predicted_classes(probs), set.truth, set.folds, config.cv_k);
            const bool ensemble = id.starts_with("ensemble_");
            csv::write_row(comparison, {id, ensemble ? "ensemble" : "single", std::to_string(metrics.rows),
                                        csv::format_double(metrics.f1)});
            for (std::size_t f = 0; f < metrics.fold_f1.size(); ++f) {
                csv::write_row(folds, {id, std::to_string(f), std::to_string(metrics.fold_rows[f]),
                                       csv::format_double(metrics.fold_f1[f])});
            }
            comparison_chart.bars.push_back({id, metrics.f1});
        }
    }

    std::vector<std::string> eda_files{"missingness.csv", "correlation.csv", "annual_trend.csv"};
    for (const auto& field : kDistributionFields) {
        eda_files.push_back("distribution_" + field + ".csv");
    }
    for (const auto& file : eda_files) {
        ws.require("eda/" + file, "eda");
        copy_artifact(ws, "eda/" + file, "report/" + file);
    }

    if (!config.report_charts) {
        return;
    }
    emit_svg_chart(comparison_chart, ChartKind::bar, ws.path("report/model_comparison.svg"));

    const ObservationTable table = load_table(ws);
    ChartData missing_chart{"Missing fraction by field", {}, {}};
    for (const auto& entry : missingness_report(table).fields) {
        missing_chart.bars.push_back({entry.field, entry.missing_fraction});
    }
    emit_svg_chart(missing_chart, ChartKind::bar, ws.path("report/missingness.svg"));

    for (const auto& field : kDistributionFields) {
        const FrequencyTable freq = category_distribution(table, field);
        if (freq.entries.empty()) {
            continue;
        }
        ChartData chart{"Share of " + field, {}, {}};
        for (const auto& entry : freq.entries) {
            chart.bars.push_back({entry.category, entry.fraction});
        }
        emit_svg_chart(chart, ChartKind::bar, ws.path("report/distribution_" + field + ".svg"));
    }

    for (const auto& field : config.trend_fields) {
        const auto trend = annual_trend(table, field);
        if (trend.empty()) {
            continue;
        }
        LineSeries series{field, {}};
        for (const auto& [year, mean] : trend) {
            series.points.emplace_back(static_cast<double>(year), mean);
        }
        emit_svg_chart(ChartData{"Annual mean of " + field, {series}, {}}, ChartKind::line,
                       ws.path("report/annual_trend_" + field + ".svg"));
    }
}

} // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"ingest", "eda", "features", "cv", "train", "ensemble", "predict",
                                                "report"};
    return names;
}

void run_command(std::string_view command, const RunConfig& config) {
    static const std::map<std::string, void (*)(const Workspace&), std::less<>> handlers{
        {"ingest", cmd_ingest}, {"eda", cmd_eda},           {"features", cmd_features}, {"cv", cmd_cv},
        {"train", cmd_train},   {"ensemble", cmd_ensemble}, {"predict", cmd_predict},   {"report", cmd_report}};
    const auto it = handlers.find(command);
    if (it == handlers.end()) {
        throw ConfigError("unknown command '" + std::string(command) + "'");
    }
    config.validate();
    OutputLock lock(config.output);
    const Workspace ws(config);
    {
        auto out = ws.create("config.effective");
        write_config(out, config);
    }
    it->second(ws);
}

int dispatch(std::string_view command, const RunConfig& config, std::ostream& err) {
    const std::string prefix = "skyglow " + std::string(command) + ": ";
    try {
        run_command(command, config);
        return 0;
    } catch (const DependencyError& e) {
        err << prefix << "dependency error: " << e.what() << '\n';
        return 3;
    } catch (const ConfigError& e) {
        err << prefix << "config error: " << e.what() << '\n';
        return 2;
    } catch (const ParameterError& e) {
        err << prefix << "parameter error: " << e.what() << '\n';
        return 2;
    } catch (const FieldError& e) {
        err << prefix << "field error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << prefix << "error: " << e.what() << '\n';
        return 1;
    }
}

int cli_main(int argc, char** argv) {
    CLI::App app{"Night-sky brightness pipeline"};
    std::string command;
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    app.add_option("command", command, "Workflow step")
        ->required()
        ->check(CLI::IsMember(command_names()));
    app.add_option("--config", config_path, "Config file (key = value)")->required();
    app.add_option("--out", out_dir, "Output directory, overrides paths.output");
    app.add_option("--seed", seed, "Sets every seed in the config");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    RunConfig config;
    try {
        config = load_config(config_path);
        if (!out_dir.empty()) {
            config.output = out_dir;
        }
        if (seed) {
            config.apply_seed(*seed);
        }
    } catch (const std::exception& e) {
        std::cerr << "skyglow " << command << ": config error: " << e.what() << '\n';
        return 2;
    }
    return dispatch(command, config, std::cerr);
}

} // namespace skyglow
