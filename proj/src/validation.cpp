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

#include "skyglow/validation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>

#include "skyglow/csv.hpp"
#include "skyglow/error.hpp"
#include "skyglow/parallel.hpp"
#include "skyglow/random.hpp"

namespace skyglow {

void check_fold_count(int k) {
    if (k < 2) {
        throw ParameterError("fold count k must be at least 2, got " + std::to_string(k));
    }
}

FoldAssignment stratified_folds(std::span<const TargetClass> labels, int k, std::uint64_t seed) {
    check_fold_count(k);
    if (labels.empty()) {
        throw InsufficientDataError("fold assignment needs at least one row");
    }
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        by_class[labels[i].id].push_back(i);
    }

    FoldAssignment out;
    out.k = k;
    out.seed = seed;
    out.fold.assign(labels.size(), 0);
    Rng rng(seed);
    std::size_t next = 0;
    std::size_t smallest = labels.size();
    for (auto& [label, rows] : by_class) {
        rng.shuffle(std::span<std::size_t>(rows));
        for (std::size_t row : rows) {
            out.fold[row] = static_cast<int>(next % static_cast<std::size_t>(k));
            ++next;
        }
        smallest = std::min(smallest, rows.size());
    }
    if (static_cast<std::size_t>(k) > smallest) {
        out.diagnostics.push_back("k = " + std::to_string(k) + " exceeds the smallest class count (" +
                                  std::to_string(smallest) + "); some folds lack that class");
    }
    return out;
}

FoldAssignment random_folds(std::size_t rows, int k, std::uint64_t seed) {
    check_fold_count(k);
    if (rows == 0) {
        throw InsufficientDataError("fold assignment needs at least one row");
    }
    std::vector<std::size_t> order(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        order[i] = i;
    }
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
    FoldAssignment out;
    out.k = k;
    out.seed = seed;
    out.fold.assign(rows, 0);
    for (std::size_t i = 0; i < rows; ++i) {
        out.fold[order[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
    return out;
}

int argmax_class(std::span<const double> probabilities) {
    if (probabilities.empty()) {
        throw InputError("argmax of an empty probability row");
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < probabilities.size(); ++c) {
        if (probabilities[c] > probabilities[best]) {
            best = c;
        }
    }
    return static_cast<int>(best);
}

std::vector<TargetClass> predicted_classes(const Matrix& probabilities) {
    std::vector<TargetClass> out(probabilities.rows());
    for (std::size_t i = 0; i < probabilities.rows(); ++i) {
        out[i] = TargetClass{argmax_class(probabilities.row(i))};
    }
    return out;
}

MetricsReport classification_metrics(std::span<const TargetClass> predicted, std::span<const TargetClass> truth) {
    if (predicted.size() != truth.size()) {
        throw InputError("predicted (" + std::to_string(predicted.size()) + ") and true (" +
                         std::to_string(truth.size()) + ") classes differ in length");
    }
    if (truth.empty()) {
        throw InputError("metrics need at least one row");
    }
    constexpr auto classes = static_cast<std::size_t>(kNumClasses);
    MetricsReport report;
    report.rows = truth.size();
    report.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        for (int label : {predicted[i].id, truth[i].id}) {
            if (label < 0 || label >= kNumClasses) {
                throw InputError("class " + std::to_string(label) + " outside [0, " + std::to_string(kNumClasses) + ")");
            }
        }
        ++report.confusion[static_cast<std::size_t>(truth[i].id)][static_cast<std::size_t>(predicted[i].id)];
    }

    // Pool per-class counts: false positives come from column sums, false
    // negatives from row sums.
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        std::size_t row_sum = 0;
        std::size_t col_sum = 0;
        for (std::size_t o = 0; o < classes; ++o) {
            row_sum += report.confusion[c][o];
            col_sum += report.confusion[o][c];
        }
        tp += report.confusion[c][c];
        fp += col_sum - report.confusion[c][c];
        fn += row_sum - report.confusion[c][c];
    }
    const auto n = static_cast<double>(truth.size());
    report.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    report.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    const double pr = report.precision + report.recall;
    report.f1 = pr > 0.0 ? 2.0 * report.precision * report.recall / pr : 0.0;
    report.accuracy = static_cast<double>(tp) / n;

    const double tolerance = 1e-12;
    if (std::fabs(report.precision - report.accuracy) > tolerance ||
        std::fabs(report.recall - report.accuracy) > tolerance || std::fabs(report.f1 - report.accuracy) > tolerance) {
        throw std::logic_error("micro precision, recall and F1 disagree with accuracy");
    }
    return report;
}

MetricsReport classification_metrics(std::span<const TargetClass> predicted, std::span<const TargetClass> truth,
                                     std::span<const int> folds, int k) {
    if (folds.size() != truth.size()) {
        throw InputError("fold labels and true classes differ in length");
    }
    MetricsReport report = classification_metrics(predicted, truth);
    for (int f = 0; f < k; ++f) {
        std::vector<TargetClass> p;
        std::vector<TargetClass> t;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (folds[i] == f) {
                p.push_back(predicted[i]);
                t.push_back(truth[i]);
            }
        }
        report.fold_rows.push_back(t.size());
        report.fold_f1.push_back(t.empty() ? 0.0 : classification_metrics(p, t).f1);
    }
    return report;
}

std::optional<double> pearson(std::span<const std::optional<double>> x, std::span<const std::optional<double>> y) {
    if (x.size() != y.size()) {
        throw DimensionError("pearson inputs differ in length");
    }
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] && y[i]) {
            xs.push_back(*x[i]);
            ys.push_back(*y[i]);
        }
    }
    return pearson(std::span<const double>(xs), std::span<const double>(ys));
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw DimensionError("pearson inputs differ in length");
    }
    if (x.size() < 2) {
        return std::nullopt;
    }
    const auto n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        return std::nullopt;
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> numeric_field(const ObservationRecord& record, std::string_view field) {
    if (field == "limiting_magnitude") {
        return record.limiting_magnitude;
    }
    return numeric_feature(record, field);
}

std::vector<std::pair<int, double>> annual_trend(std::span<const ObservationRecord> table, std::string_view field) {
    std::map<int, std::pair<double, std::size_t>> sums;
    for (const auto& rec : table) {
        const auto value = numeric_field(rec, field);
        if (!rec.time || !value) {
            continue;
        }
        auto& [sum, count] = sums[rec.time->year];
        sum += *value;
        ++count;
    }
    std::vector<std::pair<int, double>> out;
    for (const auto& [year, acc] : sums) {
        out.emplace_back(year, acc.first / static_cast<double>(acc.second));
    }
    return out;
}

void write_oof(std::ostream& out, const OofPredictions& oof) {
    std::vector<std::string> header{"row_id", "fold", "model_id"};
    for (std::size_t c = 0; c < oof.probabilities.cols(); ++c) {
        header.push_back("p_class_" + std::to_string(c));
    }
    csv::write_row(out, header);
    for (std::size_t i = 0; i < oof.row_ids.size(); ++i) {
        std::vector<std::string> row{oof.row_ids[i], std::to_string(oof.fold[i]), oof.model_id};
        for (double p : oof.probabilities.row(i)) {
            row.push_back(csv::format_double(p));
        }
        csv::write_row(out, row);
    }
}

OofPredictions read_oof(std::istream& in) {
    const auto rows = csv::read_all(in);
    if (rows.empty()) {
        throw EmptyInputError("prediction file has no header");
    }
    const auto& header = rows[0];
    if (header.size() < 4 || header[0] != "row_id" || header[1] != "fold" || header[2] != "model_id") {
        throw SchemaError("prediction file header must start with row_id,fold,model_id");
    }
    const std::size_t classes = header.size() - 3;
    OofPredictions oof;
    oof.probabilities = Matrix(rows.size() - 1, classes);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != header.size()) {
            throw ParseError("prediction line " + std::to_string(r + 1) + " has " + std::to_string(row.size()) +
                             " fields, expected " + std::to_string(header.size()));
        }
        const auto fold = csv::parse_integer(row[1]);
        if (!fold) {
            throw ParseError("prediction line " + std::to_string(r + 1) + " has a bad fold '" + row[1] + "'");
        }
        oof.row_ids.push_back(row[0]);
        oof.fold.push_back(static_cast<int>(*fold));
        if (oof.model_id.empty()) {
            oof.model_id = row[2];
        }
        for (std::size_t c = 0; c < classes; ++c) {
            const auto p = csv::parse_double(row[3 + c]);
            if (!p) {
                throw ParseError("prediction line " + std::to_string(r + 1) + " has a bad probability '" + row[3 + c] +
                                 "'");
            }
            oof.probabilities(r - 1, c) = *p;
        }
    }
    return oof;
}

void write_metrics(std::ostream& out, const std::string& model_id, const MetricsReport& report) {
    csv::write_row(out, {"model_id", "scope", "rows", "micro_precision", "micro_recall", "micro_f1", "accuracy"});
    csv::write_row(out, {model_id, "pooled", std::to_string(report.rows), csv::format_double(report.precision),
                         csv::format_double(report.recall), csv::format_double(report.f1),
                         csv::format_double(report.accuracy)});
    for (std::size_t f = 0; f < report.fold_f1.size(); ++f) {
        const std::string f1 = csv::format_double(report.fold_f1[f]);
        const std::string rows = f < report.fold_rows.size() ? std::to_string(report.fold_rows[f]) : "";
        csv::write_row(out, {model_id, "fold_" + std::to_string(f), rows, f1, f1, f1, f1});
    }
}

void write_confusion(std::ostream& out, const MetricsReport& report) {
    std::vector<std::string> header{"true_class"};
    for (std::size_t c = 0; c < report.confusion.size(); ++c) {
        header.push_back("predicted_" + std::to_string(c));
    }
    csv::write_row(out, header);
    for (std::size_t t = 0; t < report.confusion.size(); ++t) {
        std::vector<std::string> row{std::to_string(t)};
        for (std::size_t count : report.confusion[t]) {
            row.push_back(std::to_string(count));
        }
        csv::write_row(out, row);
    }
}

ObservationTable labeled_rows(std::span<const ObservationRecord> table) {
    ObservationTable out;
    for (const auto& rec : table) {
        if (rec.limiting_magnitude) {
            out.push_back(rec);
        }
    }
    return out;
}

namespace {

template <typename E>
bool rethrow_as(const std::exception_ptr& error, const std::string& context) {
    try {
        std::rethrow_exception(error);
    } catch (const E& e) {
        throw E(context + ": " + e.what());
    } catch (...) {
    }
    return false;
}

[[noreturn]] void rethrow_with_context(const std::exception_ptr& error, const std::string& context) {
    rethrow_as<SchemaError>(error, context);
    rethrow_as<ValidationError>(error, context);
    rethrow_as<DuplicateKeyError>(error, context);
    rethrow_as<ParseError>(error, context);
    rethrow_as<EmptyInputError>(error, context);
    rethrow_as<FieldError>(error, context);
    rethrow_as<TimeError>(error, context);
    rethrow_as<ParameterError>(error, context);
    rethrow_as<DimensionError>(error, context);
    rethrow_as<InsufficientDataError>(error, context);
    rethrow_as<InputError>(error, context);
    rethrow_as<ConfigError>(error, context);
    rethrow_as<DependencyError>(error, context);
    std::rethrow_exception(error);
}

} // namespace

CvResult run_cv(std::span<const ObservationRecord> table, const ModelingConfig& config, const ModelSpec& spec, int k,
                std::uint64_t seed, bool stratified) {
    check_fold_count(k);
    config.validate();
    const ObservationTable rows = labeled_rows(table);
    if (rows.empty()) {
        throw InsufficientDataError("cross-validation needs labeled rows");
    }
    std::vector<TargetClass> truth;
    truth.reserve(rows.size());
    for (const auto& rec : rows) {
        truth.push_back(*bin_target(rec.limiting_magnitude));
    }
    const FoldAssignment folds = stratified ? stratified_folds(truth, k, seed) : random_folds(rows.size(), k, seed);

    CvResult result;
    result.truth = truth;
    result.diagnostics = folds.diagnostics;
    result.oof.model_id = spec.id;
    result.oof.fold = folds.fold;
    result.oof.probabilities = Matrix(rows.size(), static_cast<std::size_t>(kNumClasses));
    for (const auto& rec : rows) {
        result.oof.row_ids.push_back(rec.id);
    }

    std::vector<std::vector<std::string>> fold_notes(static_cast<std::size_t>(k));
    parallel_for(static_cast<std::size_t>(k), [&](std::size_t f) {
        const int fold = static_cast<int>(f);
        ObservationTable train;
        std::vector<int> train_folds;
        ObservationTable held_out;
        std::vector<std::size_t> held_rows;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (folds.fold[i] == fold) {
                held_out.push_back(rows[i]);
                held_rows.push_back(i);
            } else {
                train.push_back(rows[i]);
                train_folds.push_back(folds.fold[i]);
            }
        }
        if (held_out.empty()) {
            fold_notes[f].push_back("fold " + std::to_string(f) + " is empty");
            return;
        }
        try {
            const FittedModel model = fit_model(train, train_folds, spec, config, (fold + 1) % k);
            const Matrix probs = predict_model(model, held_out);
            for (std::size_t i = 0; i < held_rows.size(); ++i) {
                auto src = probs.row(i);
                std::copy(src.begin(), src.end(), result.oof.probabilities.row(held_rows[i]).begin());
            }
            for (const auto& note : model.diagnostics) {
                fold_notes[f].push_back("fold " + std::to_string(f) + ": " + note);
            }
        } catch (...) {
            rethrow_with_context(std::current_exception(), "fold " + std::to_string(f) + " of model '" + spec.id + "'");
        }
    });
    for (const auto& notes : fold_notes) {
        result.diagnostics.insert(result.diagnostics.end(), notes.begin(), notes.end());
    }

    result.metrics = classification_metrics(predicted_classes(result.oof.probabilities), truth, folds.fold, k);
    return result;
}

} // namespace skyglow
