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

#include "skyglow/modeling.hpp"

#include <algorithm>

#include "skyglow/error.hpp"
#include "skyglow/neighbors.hpp"
#include "skyglow/random.hpp"

namespace skyglow {

void ModelingConfig::validate() const {
    features.validate();
    if (svd_rank < 1) {
        throw ParameterError("svd rank must be at least 1");
    }
    if (vocabulary_cap < 1) {
        throw ParameterError("vocabulary cap must be at least 1");
    }
    for (const auto& field : text_fields) {
        if (field != "comment_1" && field != "comment_2") {
            throw FieldError("unknown text field '" + field + "'");
        }
    }
}

std::vector<ModelSpec> default_model_specs(const GbdtParams& gbdt, const ForestParams& forest) {
    ModelSpec full;
    full.id = "gbdt_full";
    full.learner = LearnerKind::gbdt;
    full.text_features = true;
    full.neighbor_features = true;
    full.gbdt = gbdt;

    ModelSpec base;
    base.id = "gbdt_base";
    base.learner = LearnerKind::gbdt;
    base.gbdt = gbdt;

    ModelSpec rf;
    rf.id = "forest";
    rf.learner = LearnerKind::forest;
    rf.text_features = true;
    rf.neighbor_features = true;
    rf.forest = forest;
    return {full, base, rf};
}

const std::optional<std::string>& text_field(const ObservationRecord& record, const std::string& field) {
    if (field == "comment_1") {
        return record.comment_1;
    }
    if (field == "comment_2") {
        return record.comment_2;
    }
    throw FieldError("unknown text field '" + field + "'");
}

namespace {

constexpr const char* kNeighborColumns[] = {"knn_target_mean", "knn_target_count", "knn_sensor_mean"};

std::vector<std::vector<std::string>> tokenize_field(std::span<const ObservationRecord> table, const std::string& field) {
    std::vector<std::vector<std::string>> docs;
    docs.reserve(table.size());
    for (const auto& rec : table) {
        docs.push_back(tokenize(text_field(rec, field)));
    }
    return docs;
}

std::vector<std::string> svd_column_names(const TextColumnModel& text) {
    std::vector<std::string> names;
    for (std::size_t j = 0; j < text.svd.rank; ++j) {
        names.push_back(text.field + "_svd_" + std::to_string(j));
    }
    return names;
}

double present_mean(std::span<const std::optional<double>> values) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& v : values) {
        if (v) {
            sum += *v;
            ++count;
        }
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

void append_text_features(FeatureMatrix& x, const FittedModel& model, std::span<const ObservationRecord> table) {
    for (const auto& text : model.text) {
        const auto docs = tokenize_field(table, text.field);
        const CsrMatrix tfidf = transform_tfidf(text.tfidf, docs);
        x.append(svd_column_names(text), transform_svd(text.svd, tfidf));
    }
}

Matrix neighbor_block(std::size_t rows, const std::vector<std::size_t>& positions, const NeighborMeans& target,
                      const NeighborMeans& sensor, double target_fallback, double sensor_fallback) {
    Matrix block(rows, 3);
    for (std::size_t i = 0; i < rows; ++i) {
        block(i, 0) = target_fallback;
        block(i, 1) = 0.0;
        block(i, 2) = sensor_fallback;
    }
    for (std::size_t p = 0; p < positions.size(); ++p) {
        const std::size_t i = positions[p];
        block(i, 0) = target.mean[p];
        block(i, 1) = static_cast<double>(target.count[p]);
        block(i, 2) = sensor.mean[p];
    }
    return block;
}

std::vector<std::string> neighbor_column_names() {
    return {std::begin(kNeighborColumns), std::end(kNeighborColumns)};
}

FeatureMatrix select_rows(const FeatureMatrix& x, const std::vector<std::size_t>& rows) {
    FeatureMatrix out;
    out.columns = x.columns;
    out.values = Matrix(rows.size(), x.values.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row_ids.push_back(x.row_ids[rows[i]]);
        auto src = x.values.row(rows[i]);
        std::copy(src.begin(), src.end(), out.values.row(i).begin());
    }
    return out;
}

} // namespace

FittedModel fit_model(std::span<const ObservationRecord> train, std::span<const int> folds, const ModelSpec& spec,
                      const ModelingConfig& config, std::optional<int> early_stopping_fold) {
    config.validate();
    if (train.empty()) {
        throw InsufficientDataError("model fitting needs at least one training row");
    }
    if (!folds.empty() && folds.size() != train.size()) {
        throw DimensionError("fold labels do not match the training table");
    }
    std::vector<TargetClass> labels;
    labels.reserve(train.size());
    for (const auto& rec : train) {
        auto label = bin_target(rec.limiting_magnitude);
        if (!label) {
            throw InputError("training row '" + rec.id + "' has no target");
        }
        labels.push_back(*label);
    }

    FittedModel model;
    model.spec = spec;
    model.pipeline = fit_feature_pipeline(train, config.features);
    FeatureMatrix x = apply_feature_pipeline(model.pipeline, train);

    if (spec.text_features) {
        for (std::size_t f = 0; f < config.text_fields.size(); ++f) {
            const std::string& field = config.text_fields[f];
            const auto docs = tokenize_field(train, field);
            TextColumnModel text;
            text.field = field;
            text.tfidf = fit_tfidf(docs, config.vocabulary_cap);
            if (text.tfidf.vocabulary.empty()) {
                model.diagnostics.push_back("text field '" + field + "' has an empty vocabulary; skipped");
                continue;
            }
            const CsrMatrix tfidf = transform_tfidf(text.tfidf, docs);
            const std::size_t rank = std::min({config.svd_rank, tfidf.rows, tfidf.cols});
            text.svd = fit_truncated_svd(tfidf, rank, mix_seed(config.seed, f));
            x.append(svd_column_names(text), transform_svd(text.svd, tfidf));
            model.text.push_back(std::move(text));
        }
    }

    if (spec.neighbor_features) {
        if (folds.empty()) {
            throw ParameterError("neighbor target features need fold labels for the training rows");
        }
        NeighborSpace space = build_neighbor_index(train, model.pipeline, folds);
        for (std::size_t row : space.table_rows) {
            model.neighbor_target.push_back(train[row].limiting_magnitude);
            model.neighbor_sensor.push_back(train[row].sensor_reading);
        }
        const std::size_t k = config.features.knn_k;
        const auto target = neighbor_mean_features(space.index, model.neighbor_target, k, NeighborMode::out_of_fold);
        const auto sensor = neighbor_mean_features(space.index, model.neighbor_sensor, k, NeighborMode::all);
        x.append(neighbor_column_names(),
                 neighbor_block(train.size(), space.table_rows, target, sensor, present_mean(model.neighbor_target),
                                present_mean(model.neighbor_sensor)));
        model.neighbor_points = space.index.points();
        if (!space.diagnostics.empty()) {
            model.diagnostics.push_back(std::to_string(space.diagnostics.size()) +
                                        " training rows lack neighbor coordinates");
        }
    }

    if (spec.learner == LearnerKind::gbdt) {
        if (early_stopping_fold && folds.empty()) {
            throw ParameterError("early stopping needs fold labels for the training rows");
        }
        std::vector<std::size_t> fit_rows;
        std::vector<std::size_t> stop_rows;
        for (std::size_t i = 0; i < train.size(); ++i) {
            (early_stopping_fold && folds[i] == *early_stopping_fold ? stop_rows : fit_rows).push_back(i);
        }
        if (stop_rows.empty() || fit_rows.empty()) {
            model.gbdt = fit_gbdt(x, labels, spec.gbdt);
        } else {
            const FeatureMatrix fit_x = select_rows(x, fit_rows);
            const FeatureMatrix stop_x = select_rows(x, stop_rows);
            std::vector<TargetClass> fit_y;
            std::vector<TargetClass> stop_y;
            for (std::size_t i : fit_rows) {
                fit_y.push_back(labels[i]);
            }
            for (std::size_t i : stop_rows) {
                stop_y.push_back(labels[i]);
            }
            model.gbdt = fit_gbdt(fit_x, fit_y, spec.gbdt, ValidationSet{&stop_x, stop_y});
        }
        const auto& notes = model.gbdt->diagnostics;
        model.diagnostics.insert(model.diagnostics.end(), notes.begin(), notes.end());
    } else {
        model.forest = fit_forest(x, labels, spec.forest);
    }
    return model;
}

FeatureMatrix model_features(const FittedModel& model, std::span<const ObservationRecord> table) {
    FeatureMatrix x = apply_feature_pipeline(model.pipeline, table);
    append_text_features(x, model, table);
    if (model.spec.neighbor_features) {
        const NeighborIndex index(model.neighbor_points);
        std::vector<std::size_t> positions;
        std::vector<std::vector<double>> coords;
        for (std::size_t i = 0; i < table.size(); ++i) {
            if (auto c = neighbor_coordinates(model.pipeline, table[i])) {
                positions.push_back(i);
                coords.push_back(std::move(*c));
            }
        }
        Matrix queries(coords.size(), index.dims());
        for (std::size_t i = 0; i < coords.size(); ++i) {
            std::copy(coords[i].begin(), coords[i].end(), queries.row(i).begin());
        }
        const std::size_t k = model.pipeline.config.knn_k;
        const auto target = neighbor_mean_for_points(index, model.neighbor_target, queries, k);
        const auto sensor = neighbor_mean_for_points(index, model.neighbor_sensor, queries, k);
        x.append(neighbor_column_names(), neighbor_block(table.size(), positions, target, sensor,
                                                         present_mean(model.neighbor_target),
                                                         present_mean(model.neighbor_sensor)));
    }
    return x;
}

Matrix predict_model(const FittedModel& model, std::span<const ObservationRecord> table) {
    const FeatureMatrix x = model_features(model, table);
    if (model.gbdt) {
        return predict_proba_gbdt(*model.gbdt, x);
    }
    if (model.forest) {
        return predict_proba_forest(*model.forest, x);
    }
    throw InputError("model '" + model.spec.id + "' holds no fitted learner");
}

void to_json(nlohmann::json& j, const ModelSpec& spec) {
    j = nlohmann::json{{"id", spec.id},
                       {"learner", spec.learner == LearnerKind::gbdt ? "gbdt" : "forest"},
                       {"text_features", spec.text_features},
                       {"neighbor_features", spec.neighbor_features},
                       {"gbdt", spec.gbdt},
                       {"forest", spec.forest}};
}

void from_json(const nlohmann::json& j, ModelSpec& spec) {
    j.at("id").get_to(spec.id);
    const auto learner = j.at("learner").get<std::string>();
    if (learner != "gbdt" && learner != "forest") {
        throw ParseError("unknown learner '" + learner + "'");
    }
    spec.learner = learner == "gbdt" ? LearnerKind::gbdt : LearnerKind::forest;
    j.at("text_features").get_to(spec.text_features);
    j.at("neighbor_features").get_to(spec.neighbor_features);
    j.at("gbdt").get_to(spec.gbdt);
    j.at("forest").get_to(spec.forest);
}

namespace {

nlohmann::json optional_values(const std::vector<std::optional<double>>& values) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& v : values) {
        out.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
    }
    return out;
}

std::vector<std::optional<double>> read_optional_values(const nlohmann::json& j) {
    std::vector<std::optional<double>> out;
    for (const auto& v : j) {
        out.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
    }
    return out;
}

} // namespace

void to_json(nlohmann::json& j, const FittedModel& model) {
    nlohmann::json text = nlohmann::json::array();
    for (const auto& t : model.text) {
        text.push_back({{"field", t.field}, {"tfidf", t.tfidf}, {"svd", t.svd}});
    }
    j = nlohmann::json{{"spec", model.spec},
                       {"pipeline", model.pipeline},
                       {"text", text},
                       {"neighbor_rows", model.neighbor_points.rows()},
                       {"neighbor_points", model.neighbor_points.data()},
                       {"neighbor_target", optional_values(model.neighbor_target)},
                       {"neighbor_sensor", optional_values(model.neighbor_sensor)},
                       {"diagnostics", model.diagnostics}};
    if (model.gbdt) {
        j["gbdt"] = *model.gbdt;
    }
    if (model.forest) {
        j["forest"] = *model.forest;
    }
}

void from_json(const nlohmann::json& j, FittedModel& model) {
    j.at("spec").get_to(model.spec);
    j.at("pipeline").get_to(model.pipeline);
    model.text.clear();
    for (const auto& t : j.at("text")) {
        TextColumnModel text;
        t.at("field").get_to(text.field);
        t.at("tfidf").get_to(text.tfidf);
        t.at("svd").get_to(text.svd);
        model.text.push_back(std::move(text));
    }
    const auto rows = j.at("neighbor_rows").get<std::size_t>();
    const auto points = j.at("neighbor_points").get<std::vector<double>>();
    model.neighbor_points = Matrix(rows, rows == 0 ? 0 : points.size() / rows);
    if (model.neighbor_points.data().size() != points.size()) {
        throw ParseError("neighbor points do not form a matrix");
    }
    std::copy(points.begin(), points.end(), model.neighbor_points.data().begin());
    model.neighbor_target = read_optional_values(j.at("neighbor_target"));
    model.neighbor_sensor = read_optional_values(j.at("neighbor_sensor"));
    j.at("diagnostics").get_to(model.diagnostics);
    model.gbdt.reset();
    model.forest.reset();
    if (j.contains("gbdt")) {
        model.gbdt = j.at("gbdt").get<GbdtModel>();
    }
    if (j.contains("forest")) {
        model.forest = j.at("forest").get<ForestModel>();
    }
}

} // namespace skyglow
