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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails or exceeds its time bound.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "skyglow/cli.hpp"
#include "skyglow/csv.hpp"
#include "skyglow/ensemble.hpp"
#include "skyglow/learners.hpp"
#include "skyglow/neighbors.hpp"
#include "skyglow/synthetic.hpp"
#include "skyglow/textfeat.hpp"
#include "skyglow/validation.hpp"
#include "workspace.hpp"

namespace {

using namespace skyglow;
namespace fs = std::filesystem;

/// Collects failed checks; the first few messages become the detail line.
class Outcome {
public:
    void check(bool ok, const std::string& what) {
        ++checks_;
        if (!ok) {
            if (failures_.size() < 3) {
                failures_.push_back(what);
            }
            ++failed_;
        }
    }
    void note(const std::string& text) { notes_.push_back(text); }

    bool passed() const { return failed_ == 0 && checks_ > 0; }
    std::string detail() const {
        std::string out = std::to_string(checks_ - failed_) + "/" + std::to_string(checks_) + " checks";
        for (const auto& n : notes_) {
            out += "; " + n;
        }
        for (const auto& f : failures_) {
            out += "; failed: " + f;
        }
        return out;
    }

private:
    std::size_t checks_ = 0;
    std::size_t failed_ = 0;
    std::vector<std::string> failures_;
    std::vector<std::string> notes_;
};

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::vector<TargetClass> random_labels(std::size_t n, std::mt19937_64& gen, int classes = kNumClasses) {
    std::vector<TargetClass> out(n);
    for (auto& t : out) {
        t.id = static_cast<int>(gen() % static_cast<std::uint64_t>(classes));
    }
    return out;
}

// 1 -----------------------------------------------------------------------

void metric_identity(Outcome& out) {
    std::mt19937_64 gen(1001);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + gen() % 300;
        const auto truth = random_labels(n, gen);
        std::vector<TargetClass> pred(n);
        std::size_t hits = 0;
        const auto skill = gen() % 4;
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = gen() % 4 < skill ? truth[i] : TargetClass{static_cast<int>(gen() % kNumClasses)};
            hits += pred[i] == truth[i];
        }
        const auto m = classification_metrics(pred, truth);
        const double acc = static_cast<double>(hits) / static_cast<double>(n);
        const bool ok = std::fabs(m.precision - acc) <= 1e-12 && std::fabs(m.recall - acc) <= 1e-12 &&
                        std::fabs(m.f1 - acc) <= 1e-12 && std::fabs(m.accuracy - acc) <= 1e-12 &&
                        std::fabs(m.f1 - oracle::micro_f1_by_counts(pred, truth)) <= 1e-12;
        out.check(ok, "case " + std::to_string(trial));
    }
    // [A,B,A] against [A,B,B]: TP 2, FP 1, FN 1.
    const std::vector<TargetClass> pred{{0}, {1}, {0}};
    const std::vector<TargetClass> truth{{0}, {1}, {1}};
    const auto m = classification_metrics(pred, truth);
    const double p = 2.0 / 3.0;
    const double r = 2.0 / 3.0;
    out.check(std::fabs(m.f1 - 2.0 * p * r / (p + r)) <= 1e-12 && std::fabs(m.f1 - 2.0 / 3.0) <= 1e-12,
              "[A,B,A] vs [A,B,B] gave " + fmt(m.f1, 12));
    const auto none = classification_metrics(std::vector<TargetClass>{{1}, {1}}, std::vector<TargetClass>{{0}, {2}});
    out.check(none.f1 == 0.0, "all-wrong F1 is " + fmt(none.f1));
    out.note("[A,B,A] vs [A,B,B] F1 = " + fmt(m.f1, 6));
}

// 2 -----------------------------------------------------------------------

void svd_oracle(Outcome& out) {
    std::mt19937_64 gen(2002);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t rows = 2 + gen() % 59;
        const std::size_t cols = 2 + gen() % 39;
        Matrix a = oracle::random_matrix(rows, cols, gen());
        if (trial % 3 == 1) {
            // Sparse nonnegative input resembling a tf-idf block.
            for (double& v : a.data()) {
                v = gen() % 4 == 0 ? std::fabs(v) : 0.0;
            }
        }
        const std::size_t max_rank = std::min<std::size_t>({10, rows, cols});
        const std::size_t r = 1 + gen() % max_rank;
        const auto expected = oracle::singular_values(a);
        const auto model = fit_truncated_svd(a, r, gen());
        for (std::size_t i = 0; i < r; ++i) {
            const double rel = std::fabs(model.singular_values[i] - expected[i]) / std::max(expected[i], 1e-300);
            worst = std::max(worst, rel);
            out.check(rel <= 1e-6, "matrix " + std::to_string(trial) + " value " + std::to_string(i) +
                                       " rel err " + fmt(rel, 12));
        }
        double previous = INFINITY;
        for (std::size_t rank = 1; rank <= max_rank; ++rank) {
            const double err = oracle::projection_residual(a, fit_truncated_svd(a, rank, 7).components);
            out.check(err <= previous + 1e-9 * std::max(1.0, previous),
                      "matrix " + std::to_string(trial) + " residual rose at rank " + std::to_string(rank));
            previous = err;
        }
    }
    out.note("worst relative error " + fmt(worst * 1e9, 3) + "e-9");
}

// 3 -----------------------------------------------------------------------

void knn_oracle(Outcome& out) {
    std::mt19937_64 gen(3003);
    std::normal_distribution<double> normal;
    std::size_t queries = 0;
    std::size_t perturbed = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + gen() % 499;
        const bool grid = trial % 2 == 0;
        Matrix points(n, 4);
        for (double& v : points.data()) {
            v = grid ? static_cast<double>(gen() % 5) : normal(gen);
        }
        const int k_folds = 2 + static_cast<int>(gen() % 9);
        std::vector<int> folds(n);
        std::vector<std::optional<double>> target(n);
        for (std::size_t i = 0; i < n; ++i) {
            folds[i] = static_cast<int>(gen() % static_cast<std::uint64_t>(k_folds));
            if (gen() % 8 != 0) {
                target[i] = 1.0 + normal(gen);
            }
        }
        const NeighborIndex index(points, folds);
        const std::size_t k = 1 + gen() % 20;

        bool equal = true;
        for (std::size_t row = 0; row < n; ++row) {
            equal = equal && index.query_row(row, k) == oracle::brute_force_knn(points, points.row(row), k, row);
            ++queries;
        }
        out.check(equal, "instance " + std::to_string(trial) + " query mismatch");

        const auto base = neighbor_mean_features(index, target, k, NeighborMode::out_of_fold);
        bool oracle_equal = true;
        for (std::size_t row = 0; row < n; ++row) {
            oracle_equal = oracle_equal &&
                           base.mean[row] == oracle::brute_force_neighbor_mean(points, target, folds, row, k, true);
        }
        out.check(oracle_equal, "instance " + std::to_string(trial) + " neighbor mean mismatch");

        // Own target, then the whole fold's targets.
        const std::size_t victim = gen() % n;
        auto own = target;
        own[victim] = own[victim] ? *own[victim] * -7.0 + 3.0 : 42.0;
        const auto after_own = neighbor_mean_features(index, own, k, NeighborMode::out_of_fold);
        out.check(std::memcmp(&after_own.mean[victim], &base.mean[victim], sizeof(double)) == 0 ||
                      base.count[victim] == 0,
                  "instance " + std::to_string(trial) + " own target leaked");

        auto fold_changed = target;
        const int fold = folds[victim];
        for (std::size_t i = 0; i < n; ++i) {
            if (folds[i] == fold) {
                fold_changed[i] = fold_changed[i] ? *fold_changed[i] + 50.0 : 13.0;
            }
        }
        const auto after_fold = neighbor_mean_features(index, fold_changed, k, NeighborMode::out_of_fold);
        for (std::size_t i = 0; i < n; ++i) {
            if (folds[i] == fold && after_fold.count[i] > 0) {
                out.check(std::memcmp(&after_fold.mean[i], &base.mean[i], sizeof(double)) == 0,
                          "instance " + std::to_string(trial) + " fold targets leaked into row " + std::to_string(i));
                ++perturbed;
            }
        }
    }
    out.note(std::to_string(queries) + " queries, " + std::to_string(perturbed) + " perturbed rows");
}

// 4 -----------------------------------------------------------------------

void stratification(Outcome& out) {
    std::mt19937_64 gen(4004);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + gen() % 1000;
        const int k = 2 + static_cast<int>(gen() % 14);
        const int classes = 1 + static_cast<int>(gen() % kNumClasses);
        std::vector<TargetClass> labels(n);
        const bool skewed = trial % 2 == 0;
        for (auto& l : labels) {
            l.id = skewed && gen() % 10 < 7 ? 0 : static_cast<int>(gen() % static_cast<std::uint64_t>(classes));
        }
        const std::uint64_t seed = gen();
        const auto folds = stratified_folds(labels, k, seed);
        bool partition = folds.fold.size() == n;
        std::map<int, std::vector<long>> counts;
        for (std::size_t i = 0; i < n && partition; ++i) {
            partition = folds.fold[i] >= 0 && folds.fold[i] < k;
            auto& c = counts[labels[i].id];
            c.resize(static_cast<std::size_t>(k));
            ++c[static_cast<std::size_t>(folds.fold[i])];
        }
        out.check(partition, "trial " + std::to_string(trial) + " is not a partition");
        for (const auto& [label, c] : counts) {
            const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
            out.check(*hi - *lo <= 1, "trial " + std::to_string(trial) + " class " + std::to_string(label) +
                                          " spread " + std::to_string(*hi - *lo));
        }
        out.check(stratified_folds(labels, k, seed).fold == folds.fold,
                  "trial " + std::to_string(trial) + " not reproducible");
    }
}

// 5 -----------------------------------------------------------------------

FeatureMatrix named(const Matrix& values) {
    FeatureMatrix fm;
    fm.values = values;
    for (std::size_t c = 0; c < values.cols(); ++c) {
        fm.columns.push_back("x" + std::to_string(c));
    }
    fm.row_ids.resize(values.rows());
    return fm;
}

void learner_sanity(Outcome& out) {
    std::mt19937_64 gen(5005);
    std::normal_distribution<double> normal;
    for (int dataset = 0; dataset < 4; ++dataset) {
        const std::size_t n = 300;
        Matrix x(n, 5);
        std::vector<TargetClass> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            const int c = static_cast<int>(i % (2 + static_cast<std::size_t>(dataset)));
            y[i].id = c;
            for (std::size_t f = 0; f < 5; ++f) {
                x(i, f) = normal(gen) + (f < 2 ? 1.5 * c * (f == 0 ? 1.0 : -1.0) : 0.0);
            }
        }
        GbdtParams params;
        params.rounds = 100;
        params.learning_rate = dataset == 3 ? 0.5 : 0.1;
        const auto model = fit_gbdt(named(x), y, params);
        bool monotone = true;
        for (std::size_t r = 1; r < model.train_loss.size(); ++r) {
            monotone = monotone && model.train_loss[r] <= model.train_loss[r - 1];
        }
        out.check(monotone && model.train_loss.size() == 101,
                  "training loss rose on dataset " + std::to_string(dataset));
    }

    Matrix xor_x(4, 2);
    const double pts[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    for (std::size_t i = 0; i < 4; ++i) {
        xor_x(i, 0) = pts[i][0];
        xor_x(i, 1) = pts[i][1];
    }
    const std::vector<TargetClass> xor_y{{0}, {1}, {1}, {0}};
    GbdtParams xor_params;
    xor_params.rounds = 50;
    xor_params.max_leaves = 4;
    xor_params.min_samples_leaf = 1;
    const auto xor_model = fit_gbdt(named(xor_x), xor_y, xor_params);
    const auto xor_pred = predicted_classes(predict_proba_gbdt(xor_model, xor_x));
    out.check(xor_pred == xor_y, "XOR not fitted within 50 rounds");

    GbdtParams zero;
    zero.rounds = 0;
    const std::vector<TargetClass> prior_y{{1}, {3}, {3}, {3}, {6}, {6}, {6}, {6}};
    const auto prior_model = fit_gbdt(named(oracle::random_matrix(8, 3, 1)), prior_y, zero);
    const Matrix prior_p = predict_proba_gbdt(prior_model, oracle::random_matrix(20, 3, 2));
    bool priors = true;
    for (std::size_t r = 0; r < prior_p.rows(); ++r) {
        priors = priors && std::fabs(prior_p(r, 1) - 0.125) < 1e-12 && std::fabs(prior_p(r, 3) - 0.375) < 1e-12 &&
                 std::fabs(prior_p(r, 6) - 0.5) < 1e-12 && prior_p(r, 0) == 0.0;
    }
    out.check(priors, "zero-round model does not reproduce priors");

    double worst = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t k = 2 + static_cast<std::size_t>(trial % 7);
        Matrix scores(1, k);
        for (double& s : scores.data()) {
            s = 4.0 * normal(gen);
        }
        const int label = static_cast<int>(gen() % k);
        const std::vector<int> labels{label};
        const auto analytic = softmax_gradient(scores.row(0), label);
        for (std::size_t c = 0; c < k; ++c) {
            const double h = 1e-5;
            Matrix up = scores;
            Matrix down = scores;
            up(0, c) += h;
            down(0, c) -= h;
            const double numeric = (softmax_log_loss(up, labels) - softmax_log_loss(down, labels)) / (2.0 * h);
            worst = std::max(worst, std::fabs(numeric - analytic[c]));
        }
    }
    out.check(worst <= 1e-6, "gradient error " + fmt(worst, 10));
    out.note("max gradient error " + fmt(worst * 1e9, 3) + "e-9");
}

// 6 and 7 -----------------------------------------------------------------

ObservationTable synthetic_table(const SyntheticConfig& config) {
    auto data = generate_synthetic(config);
    return join_population(data.observations, data.population);
}

void cv_analogue(Outcome& out) {
    const auto table = synthetic_table(SyntheticConfig{});
    const ModelingConfig config;
    for (const auto& spec : default_model_specs()) {
        const double f5 = run_cv(table, config, spec, 5, 0).metrics.f1;
        const double f10 = run_cv(table, config, spec, 10, 0).metrics.f1;
        out.check(f5 >= 0.95, spec.id + " k=5 F1 " + fmt(f5));
        out.check(f10 >= 0.95, spec.id + " k=10 F1 " + fmt(f10));
        out.check(std::fabs(f5 - f10) <= 0.03, spec.id + " k=5/k=10 gap " + fmt(std::fabs(f5 - f10)));
        out.note(spec.id + " " + fmt(f5) + "/" + fmt(f10));
    }
}

struct Ordering {
    double opt = 0.0;
    double mean = 0.0;
    double min_single = 1.0;
    double max_single = 0.0;
};

Ordering ensemble_ordering(const ObservationTable& table) {
    const ModelingConfig config;
    std::vector<Matrix> oof;
    std::vector<std::string> ids;
    std::vector<TargetClass> truth;
    Ordering o;
    for (const auto& spec : default_model_specs()) {
        const auto cv = run_cv(table, config, spec, 5, 0);
        oof.push_back(cv.oof.probabilities);
        ids.push_back(spec.id);
        truth = cv.truth;
        o.min_single = std::min(o.min_single, cv.metrics.f1);
        o.max_single = std::max(o.max_single, cv.metrics.f1);
    }
    o.opt = optimize_weights(oof, truth, kDefaultStepSchedule, 0, ids).objective;
    o.mean = classification_metrics(predicted_classes(mean_blend(oof)), truth).f1;
    return o;
}

void ensemble_order(Outcome& out) {
    const auto o = ensemble_ordering(synthetic_table(SyntheticConfig{}));
    out.check(o.opt >= o.mean, "opt " + fmt(o.opt) + " < mean " + fmt(o.mean));
    out.check(o.mean >= o.min_single, "mean " + fmt(o.mean) + " < min single " + fmt(o.min_single));
    out.check(o.opt >= o.max_single, "opt " + fmt(o.opt) + " < max single " + fmt(o.max_single));
    out.note("opt " + fmt(o.opt) + ", mean " + fmt(o.mean) + ", singles " + fmt(o.min_single) + ".." +
             fmt(o.max_single));

    // Label noise separates the models; the two floors that hold by
    // construction must still hold.
    SyntheticConfig wide;
    wide.cluster_spread_deg = 10.0;
    auto noisy = synthetic_table(wide);
    std::mt19937_64 gen(7007);
    std::uniform_real_distribution<double> magnitude(2.0, 7.0);
    for (auto& rec : noisy) {
        if (rec.limiting_magnitude && gen() % 10 < 3) {
            rec.limiting_magnitude = std::round(magnitude(gen) * 100.0) / 100.0;
        }
    }
    const auto h = ensemble_ordering(noisy);
    out.check(h.opt >= h.mean, "noisy: opt " + fmt(h.opt) + " < mean " + fmt(h.mean));
    out.check(h.opt >= h.max_single, "noisy: opt " + fmt(h.opt) + " < max single " + fmt(h.max_single));
    out.note("30% noisy labels: opt " + fmt(h.opt) + ", mean " + fmt(h.mean) + ", singles " + fmt(h.min_single) +
             ".." + fmt(h.max_single));
}

// 8 -----------------------------------------------------------------------

int run_cli(const std::vector<std::string>& args) {
    std::vector<std::string> owned{"skyglow"};
    owned.insert(owned.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : owned) {
        argv.push_back(a.data());
    }
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

double lookup(const fs::path& file, const std::string& key_a, const std::string& key_b, const std::string& column) {
    const auto rows = testing::read_csv(file);
    if (rows.empty()) {
        return NAN;
    }
    const auto col = std::find(rows[0].begin(), rows[0].end(), column) - rows[0].begin();
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const bool match = rows[r][0] == key_a && (key_b.empty() || rows[r][1] == key_b);
        if (match && static_cast<std::size_t>(col) < rows[r].size()) {
            return csv::parse_double(rows[r][static_cast<std::size_t>(col)]).value_or(NAN);
        }
    }
    return NAN;
}

void statistics_replay(Outcome& out) {
    testing::TempDir dir("accept_stats");
    const auto conf = testing::write_workspace(dir.path(), 2000, SyntheticConfig{}.seed);
    out.check(run_cli({"ingest", "--config", conf.string()}) == 0, "ingest failed");
    out.check(run_cli({"eda", "--config", conf.string()}) == 0, "eda failed");
    const fs::path eda = dir / "run" / "eda";
    const std::pair<const char*, double> missing[] = {{"sensor_reading", 0.828},
                                                      {"comment_1", 0.429},
                                                      {"comment_2", 0.480},
                                                      {"constellation", 0.121},
                                                      {"limiting_magnitude", 0.080}};
    for (const auto& [field, expected] : missing) {
        const double got = lookup(eda / "missingness.csv", field, "", "missing_fraction");
        out.check(std::fabs(got - expected) <= 0.01, std::string(field) + " missing " + fmt(got));
        out.note(std::string(field) + " " + fmt(got, 3));
    }
    const std::tuple<const char*, const char*, double> shares[] = {
        {"type", "GAN", 0.801}, {"clouds", "clear", 0.594}, {"constellation", "Orion", 0.410},
        {"time_of_day_category", "evening", 0.827}};
    for (const auto& [field, category, expected] : shares) {
        const auto file = eda / ("distribution_" + std::string(field) + ".csv");
        const double got = lookup(file, field, category, "fraction");
        out.check(std::fabs(got - expected) <= 0.01, std::string(category) + " share " + fmt(got));
        out.note(std::string(category) + " " + fmt(got, 3));
    }
}

// 9 -----------------------------------------------------------------------

void determinism(Outcome& out) {
    testing::TempDir dir("accept_det");
    const auto conf = testing::write_workspace(dir.path(), 2000, SyntheticConfig{}.seed);
    const fs::path first = dir / "first";
    const fs::path second = dir / "second";
    for (const auto& target : {first, second}) {
        for (const auto& command : command_names()) {
            out.check(run_cli({command, "--config", conf.string(), "--out", target.string(), "--seed", "11"}) == 0,
                      command + " failed into " + target.filename().string());
        }
    }
    const auto files = testing::list_files(first);
    out.check(files == testing::list_files(second), "artifact lists differ");
    std::set<std::string> kinds;
    std::size_t identical = 0;
    for (const auto& rel : files) {
        const bool same = testing::read_file(first / rel) == testing::read_file(second / rel);
        out.check(same, rel.string() + " differs");
        identical += same;
        kinds.insert(rel.parent_path().string() + "/*" + rel.extension().string());
    }
    for (const char* required : {"models/*.json", "cv/*.csv", "ensemble/*.csv", "report/*.svg"}) {
        out.check(kinds.count(required) == 1, std::string("no artifact matching ") + required);
    }
    out.note(std::to_string(identical) + " of " + std::to_string(files.size()) + " files byte-identical");
}

struct Criterion {
    int number;
    const char* name;
    double bound_seconds;
    std::function<void(Outcome&)> body;
};

} // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "metric identity", 5, metric_identity},
        {2, "svd oracle", 30, svd_oracle},
        {3, "knn oracle and leakage", 60, knn_oracle},
        {4, "stratification", 10, stratification},
        {5, "learner sanity", 30, learner_sanity},
        {6, "cv analogue k=5/k=10", 180, cv_analogue},
        {7, "ensemble ordering", 180, ensemble_order},
        {8, "statistics replay", 30, statistics_replay},
        {9, "pipeline determinism", 300, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome outcome;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.body(outcome);
        } catch (const std::exception& e) {
            outcome.check(false, std::string("exception: ") + e.what());
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = seconds <= c.bound_seconds;
        const bool ok = outcome.passed() && in_time;
        failed += !ok;
        std::printf("%s [%d] %s (%.2fs, bound %.0fs)%s: %s\n", ok ? "PASS" : "FAIL", c.number, c.name, seconds,
                    c.bound_seconds, in_time ? "" : " over time bound", outcome.detail().c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
