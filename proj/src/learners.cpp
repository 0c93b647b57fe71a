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

#include "skyglow/learners.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "skyglow/error.hpp"
#include "skyglow/parallel.hpp"
#include "skyglow/random.hpp"

namespace skyglow {

// ---------------------------------------------------------------------------
// Binning
// ---------------------------------------------------------------------------

BinMapper BinMapper::fit(const Matrix& x, std::size_t max_bins) {
    if (max_bins < 2 || max_bins > 256) {
        throw ParameterError("histogram bin count must lie in [2, 256]");
    }
    BinMapper mapper;
    mapper.edges.resize(x.cols());
    std::vector<double> column(x.rows());
    for (std::size_t f = 0; f < x.cols(); ++f) {
        for (std::size_t i = 0; i < x.rows(); ++i) {
            column[i] = x(i, f);
        }
        std::sort(column.begin(), column.end());
        std::vector<double> distinct;
        std::vector<std::size_t> counts;
        for (double v : column) {
            if (distinct.empty() || v != distinct.back()) {
                distinct.push_back(v);
                counts.push_back(0);
            }
            ++counts.back();
        }
        auto& edges = mapper.edges[f];
        if (distinct.size() <= max_bins) {
            edges.assign(distinct.begin(), distinct.end() - 1);
            continue;
        }
        // Equal-frequency cuts placed on distinct values.
        const double n = static_cast<double>(column.size());
        std::size_t cumulative = 0;
        for (std::size_t d = 0; d + 1 < distinct.size() && edges.size() + 1 < max_bins; ++d) {
            cumulative += counts[d];
            const double target = static_cast<double>(edges.size() + 1) * n / static_cast<double>(max_bins);
            if (static_cast<double>(cumulative) >= target) {
                edges.push_back(distinct[d]);
            }
        }
    }
    return mapper;
}

std::uint8_t BinMapper::bin(std::size_t feature, double value) const {
    const auto& e = edges[feature];
    return static_cast<std::uint8_t>(std::lower_bound(e.begin(), e.end(), value) - e.begin());
}

std::vector<std::vector<std::uint8_t>> BinMapper::transform(const Matrix& x) const {
    if (x.cols() != edges.size()) {
        throw DimensionError("bin mapper expects " + std::to_string(edges.size()) + " features");
    }
    std::vector<std::vector<std::uint8_t>> codes(x.cols(), std::vector<std::uint8_t>(x.rows()));
    for (std::size_t f = 0; f < x.cols(); ++f) {
        for (std::size_t i = 0; i < x.rows(); ++i) {
            codes[f][i] = bin(f, x(i, f));
        }
    }
    return codes;
}

// ---------------------------------------------------------------------------
// Parameters and shared helpers
// ---------------------------------------------------------------------------

void GbdtParams::validate() const {
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
        throw ParameterError("learning rate must lie in (0, 1]");
    }
    if (max_leaves < 2) {
        throw ParameterError("max leaves must be at least 2");
    }
    if (min_samples_leaf < 1) {
        throw ParameterError("min samples per leaf must be positive");
    }
    if (max_bins < 2 || max_bins > 256) {
        throw ParameterError("histogram bin count must lie in [2, 256]");
    }
    if (!(l2 > 0.0)) {
        throw ParameterError("L2 leaf regularization must be positive");
    }
    if (early_stopping_patience < 1) {
        throw ParameterError("early stopping patience must be positive");
    }
    if (num_classes < 2) {
        throw ParameterError("class count must be at least 2");
    }
}

void ForestParams::validate() const {
    if (trees < 1) {
        throw ParameterError("forest needs at least one tree");
    }
    if (min_samples_leaf < 1) {
        throw ParameterError("min samples per leaf must be positive");
    }
    if (max_bins < 2 || max_bins > 256) {
        throw ParameterError("histogram bin count must lie in [2, 256]");
    }
    if (num_classes < 2) {
        throw ParameterError("class count must be at least 2");
    }
}

namespace {

void check_training_input(const FeatureMatrix& x, std::span<const TargetClass> y, int num_classes) {
    if (x.rows() != y.size()) {
        throw DimensionError("feature rows (" + std::to_string(x.rows()) + ") and labels (" +
                             std::to_string(y.size()) + ") differ");
    }
    if (y.empty()) {
        throw InsufficientDataError("training needs at least one row");
    }
    if (x.columns.size() != x.values.cols()) {
        throw DimensionError("feature names do not match the matrix width");
    }
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (double v : x.values.row(i)) {
            if (!std::isfinite(v)) {
                throw InputError("non-finite feature value in row " + std::to_string(i));
            }
        }
    }
    for (const auto& label : y) {
        if (label.id < 0 || label.id >= num_classes) {
            throw InputError("label " + std::to_string(label.id) + " outside [0, " + std::to_string(num_classes) + ")");
        }
    }
}

void check_prediction_columns(const std::vector<std::string>& expected, const FeatureMatrix& x) {
    if (x.columns != expected) {
        throw SchemaError("feature columns do not match the model's feature list");
    }
}

void softmax_row(std::span<const double> scores, std::span<double> out) {
    const double top = *std::max_element(scores.begin(), scores.end());
    double total = 0.0;
    for (std::size_t c = 0; c < scores.size(); ++c) {
        out[c] = std::exp(scores[c] - top);
        total += out[c];
    }
    for (double& p : out) {
        p /= total;
    }
}

} // namespace

double softmax_log_loss(const Matrix& scores, std::span<const int> labels) {
    if (scores.rows() != labels.size()) {
        throw DimensionError("scores and labels differ in length");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        auto row = scores.row(i);
        const double top = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double s : row) {
            sum += std::exp(s - top);
        }
        total += top + std::log(sum) - row[static_cast<std::size_t>(labels[i])];
    }
    return total / static_cast<double>(scores.rows());
}

std::vector<double> softmax_gradient(std::span<const double> scores, int label) {
    std::vector<double> grad(scores.size());
    softmax_row(scores, grad);
    grad[static_cast<std::size_t>(label)] -= 1.0;
    return grad;
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> row) const {
    std::size_t node = 0;
    while (!nodes[node].is_leaf()) {
        const auto& n = nodes[node];
        node = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[node];
}

std::size_t DecisionTree::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

// ---------------------------------------------------------------------------
// Histogram gradient boosting
// ---------------------------------------------------------------------------

namespace {

struct HistBin {
    double g = 0.0;
    double h = 0.0;
    std::uint32_t n = 0;
};

struct Split {
    double gain = -std::numeric_limits<double>::infinity();
    int feature = -1;
    int bin = -1;

    bool valid() const { return feature >= 0; }
};

struct GrowingLeaf {
    int node = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
    double g = 0.0;
    double h = 0.0;
    std::vector<HistBin> hist;
    Split best;

    std::size_t size() const { return end - begin; }
};

class HistogramTreeGrower {
public:
    HistogramTreeGrower(const BinMapper& mapper, const std::vector<std::vector<std::uint8_t>>& codes,
                        const GbdtParams& params)
        : mapper_(mapper), codes_(codes), params_(params) {
        offsets_.resize(codes.size() + 1, 0);
        for (std::size_t f = 0; f < codes.size(); ++f) {
            offsets_[f + 1] = offsets_[f] + mapper.bin_count(f);
        }
        rows_.resize(codes.empty() ? 0 : codes[0].size());
    }

    /// Grows one tree on (g, h); writes each training row's leaf value into
    /// `update`.
    DecisionTree grow(std::span<const double> g, std::span<const double> h, std::span<double> update) {
        std::iota(rows_.begin(), rows_.end(), std::uint32_t{0});
        DecisionTree tree;
        tree.nodes.emplace_back();

        std::vector<GrowingLeaf> leaves;
        GrowingLeaf root;
        root.node = 0;
        root.begin = 0;
        root.end = rows_.size();
        build_histogram(root, g, h);
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            root.g += g[i];
            root.h += h[i];
        }
        root.best = find_split(root);
        leaves.push_back(std::move(root));

        while (leaves.size() < params_.max_leaves) {
            std::size_t pick = leaves.size();
            for (std::size_t i = 0; i < leaves.size(); ++i) {
                const auto& leaf = leaves[i];
                if (!leaf.best.valid()) {
                    continue;
                }
                if (pick == leaves.size() || leaf.best.gain > leaves[pick].best.gain ||
                    (leaf.best.gain == leaves[pick].best.gain && leaf.node < leaves[pick].node)) {
                    pick = i;
                }
            }
            if (pick == leaves.size()) {
                break;
            }
            auto [left, right] = split_leaf(tree, leaves[pick], g, h);
            leaves[pick] = std::move(left);
            leaves.push_back(std::move(right));
        }

        for (const auto& leaf : leaves) {
            const double value = -params_.learning_rate * leaf.g / (leaf.h + params_.l2);
            tree.nodes[static_cast<std::size_t>(leaf.node)].value = value;
            for (std::size_t i = leaf.begin; i < leaf.end; ++i) {
                update[rows_[i]] = value;
            }
        }
        return tree;
    }

private:
    void build_histogram(GrowingLeaf& leaf, std::span<const double> g, std::span<const double> h) const {
        leaf.hist.assign(offsets_.back(), HistBin{});
        for (std::size_t f = 0; f < codes_.size(); ++f) {
            HistBin* bins = leaf.hist.data() + offsets_[f];
            const std::uint8_t* code = codes_[f].data();
            for (std::size_t i = leaf.begin; i < leaf.end; ++i) {
                const std::uint32_t r = rows_[i];
                HistBin& b = bins[code[r]];
                b.g += g[r];
                b.h += h[r];
                ++b.n;
            }
        }
    }

    Split find_split(const GrowingLeaf& leaf) const {
        Split best;
        const double lambda = params_.l2;
        const std::size_t min_leaf = params_.min_samples_leaf;
        if (leaf.size() < 2 * min_leaf) {
            return best;
        }
        const double parent = leaf.g * leaf.g / (leaf.h + lambda);
        for (std::size_t f = 0; f < codes_.size(); ++f) {
            const std::size_t nb = mapper_.bin_count(f);
            const HistBin* bins = leaf.hist.data() + offsets_[f];
            double gl = 0.0;
            double hl = 0.0;
            std::size_t nl = 0;
            for (std::size_t b = 0; b + 1 < nb; ++b) {
                gl += bins[b].g;
                hl += bins[b].h;
                nl += bins[b].n;
                const std::size_t nr = leaf.size() - nl;
                if (nl < min_leaf) {
                    continue;
                }
                if (nr < min_leaf) {
                    break;
                }
                const double gr = leaf.g - gl;
                const double hr = leaf.h - hl;
                const double gain = gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent;
                if (gain >= 0.0 && gain > best.gain) {
                    best = Split{gain, static_cast<int>(f), static_cast<int>(b)};
                }
            }
        }
        return best;
    }

    std::pair<GrowingLeaf, GrowingLeaf> split_leaf(DecisionTree& tree, GrowingLeaf& parent, std::span<const double> g,
                                                   std::span<const double> h) {
        const auto feature = static_cast<std::size_t>(parent.best.feature);
        const auto bin = static_cast<std::uint8_t>(parent.best.bin);
        const std::uint8_t* code = codes_[feature].data();
        auto first = rows_.begin() + static_cast<std::ptrdiff_t>(parent.begin);
        auto last = rows_.begin() + static_cast<std::ptrdiff_t>(parent.end);
        auto mid = std::stable_partition(first, last, [&](std::uint32_t r) { return code[r] <= bin; });

        GrowingLeaf left;
        GrowingLeaf right;
        left.begin = parent.begin;
        left.end = static_cast<std::size_t>(mid - rows_.begin());
        right.begin = left.end;
        right.end = parent.end;
        for (std::size_t i = left.begin; i < left.end; ++i) {
            left.g += g[rows_[i]];
            left.h += h[rows_[i]];
        }
        for (std::size_t i = right.begin; i < right.end; ++i) {
            right.g += g[rows_[i]];
            right.h += h[rows_[i]];
        }

        // Build the smaller child directly, derive the larger by subtraction.
        GrowingLeaf& small = left.size() <= right.size() ? left : right;
        GrowingLeaf& large = left.size() <= right.size() ? right : left;
        build_histogram(small, g, h);
        large.hist = std::move(parent.hist);
        for (std::size_t k = 0; k < large.hist.size(); ++k) {
            large.hist[k].g -= small.hist[k].g;
            large.hist[k].h -= small.hist[k].h;
            large.hist[k].n -= small.hist[k].n;
        }

        const auto node_index = static_cast<std::size_t>(parent.node);
        left.node = static_cast<int>(tree.nodes.size());
        right.node = left.node + 1;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        auto& node = tree.nodes[node_index];
        node.feature = parent.best.feature;
        node.threshold = mapper_.edges[feature][bin];
        node.left = left.node;
        node.right = right.node;

        left.best = find_split(left);
        right.best = find_split(right);
        return {std::move(left), std::move(right)};
    }

    const BinMapper& mapper_;
    const std::vector<std::vector<std::uint8_t>>& codes_;
    const GbdtParams& params_;
    std::vector<std::size_t> offsets_;
    std::vector<std::uint32_t> rows_;
};

double mean_log_loss(const Matrix& scores, std::span<const int> active_labels) {
    double total = 0.0;
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        auto row = scores.row(i);
        const double top = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double s : row) {
            sum += std::exp(s - top);
        }
        const double log_norm = top + std::log(sum);
        // Labels unseen in training get the loss of probability 1e-15.
        total += active_labels[i] < 0 ? -std::log(1e-15) : log_norm - row[static_cast<std::size_t>(active_labels[i])];
    }
    return total / static_cast<double>(scores.rows());
}

std::vector<int> active_label_index(std::span<const TargetClass> y, const std::vector<int>& active_classes) {
    std::vector<int> lookup(kNumClasses + 1, -1);
    for (std::size_t a = 0; a < active_classes.size(); ++a) {
        lookup[static_cast<std::size_t>(active_classes[a])] = static_cast<int>(a);
    }
    std::vector<int> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const auto id = static_cast<std::size_t>(y[i].id);
        out[i] = id < lookup.size() ? lookup[id] : -1;
    }
    return out;
}

Matrix gbdt_scores(const GbdtModel& model, const Matrix& x, std::size_t round_limit) {
    const std::size_t active = model.active_classes.size();
    Matrix scores(x.rows(), active);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto row = x.row(i);
        auto out = scores.row(i);
        for (std::size_t a = 0; a < active; ++a) {
            out[a] = model.initial_scores[a];
        }
        for (std::size_t r = 0; r < round_limit; ++r) {
            for (std::size_t a = 0; a < active; ++a) {
                out[a] += model.rounds[r][a].leaf_for(row).value;
            }
        }
    }
    return scores;
}

} // namespace

GbdtModel fit_gbdt(const FeatureMatrix& x, std::span<const TargetClass> y, const GbdtParams& params,
                   const ValidationSet& validation) {
    params.validate();
    check_training_input(x, y, params.num_classes);

    GbdtModel model;
    model.params = params;
    model.feature_names = x.columns;

    std::vector<std::size_t> counts(static_cast<std::size_t>(params.num_classes), 0);
    for (const auto& label : y) {
        ++counts[static_cast<std::size_t>(label.id)];
    }
    const double n = static_cast<double>(y.size());
    for (int c = 0; c < params.num_classes; ++c) {
        if (counts[static_cast<std::size_t>(c)] > 0) {
            model.active_classes.push_back(c);
            model.initial_scores.push_back(std::log(static_cast<double>(counts[static_cast<std::size_t>(c)]) / n));
        }
    }
    const std::size_t active = model.active_classes.size();
    const auto labels = active_label_index(y, model.active_classes);

    Matrix scores(x.rows(), active);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        std::copy(model.initial_scores.begin(), model.initial_scores.end(), scores.row(i).begin());
    }
    model.train_loss.push_back(mean_log_loss(scores, labels));

    if (active < 2) {
        model.diagnostics.push_back("single training class; model holds initial scores only");
        return model;
    }

    const bool has_validation = validation.features != nullptr;
    Matrix valid_scores;
    std::vector<int> valid_labels;
    if (has_validation) {
        check_prediction_columns(x.columns, *validation.features);
        if (validation.features->rows() != validation.labels.size()) {
            throw DimensionError("validation features and labels differ in length");
        }
        valid_scores = Matrix(validation.features->rows(), active);
        for (std::size_t i = 0; i < valid_scores.rows(); ++i) {
            std::copy(model.initial_scores.begin(), model.initial_scores.end(), valid_scores.row(i).begin());
        }
        valid_labels = active_label_index(validation.labels, model.active_classes);
        model.valid_loss.push_back(mean_log_loss(valid_scores, valid_labels));
    }

    const BinMapper mapper = BinMapper::fit(x.values, params.max_bins);
    const auto codes = mapper.transform(x.values);
    HistogramTreeGrower grower(mapper, codes, params);

    const std::size_t rows = x.rows();
    std::vector<double> prob(active);
    std::vector<double> grad(rows * active);
    std::vector<double> hess(rows * active);
    std::vector<double> g(rows);
    std::vector<double> h(rows);
    std::vector<double> update(rows);
    std::size_t best_round = 0;
    double best_loss = has_validation ? model.valid_loss[0] : 0.0;

    for (std::size_t round = 0; round < params.rounds; ++round) {
        for (std::size_t i = 0; i < rows; ++i) {
            softmax_row(scores.row(i), prob);
            for (std::size_t a = 0; a < active; ++a) {
                const double target = labels[i] == static_cast<int>(a) ? 1.0 : 0.0;
                grad[a * rows + i] = prob[a] - target;
                hess[a * rows + i] = prob[a] * (1.0 - prob[a]);
            }
        }
        std::vector<DecisionTree> trees;
        trees.reserve(active);
        for (std::size_t a = 0; a < active; ++a) {
            std::copy_n(grad.begin() + static_cast<std::ptrdiff_t>(a * rows), rows, g.begin());
            std::copy_n(hess.begin() + static_cast<std::ptrdiff_t>(a * rows), rows, h.begin());
            trees.push_back(grower.grow(g, h, update));
            for (std::size_t i = 0; i < rows; ++i) {
                scores(i, a) += update[i];
            }
        }
        model.train_loss.push_back(mean_log_loss(scores, labels));

        if (has_validation) {
            const Matrix& vx = validation.features->values;
            for (std::size_t i = 0; i < vx.rows(); ++i) {
                auto row = vx.row(i);
                for (std::size_t a = 0; a < active; ++a) {
                    valid_scores(i, a) += trees[a].leaf_for(row).value;
                }
            }
            model.valid_loss.push_back(mean_log_loss(valid_scores, valid_labels));
        }
        model.rounds.push_back(std::move(trees));

        if (has_validation) {
            const double loss = model.valid_loss.back();
            if (loss < best_loss) {
                best_loss = loss;
                best_round = model.rounds.size();
            } else if (model.rounds.size() - best_round >= params.early_stopping_patience) {
                break;
            }
        }
    }

    if (has_validation && best_round < model.rounds.size()) {
        model.diagnostics.push_back("early stopping kept " + std::to_string(best_round) + " of " +
                                    std::to_string(model.rounds.size()) + " rounds");
        model.rounds.resize(best_round);
        model.train_loss.resize(best_round + 1);
        model.valid_loss.resize(best_round + 1);
    }
    return model;
}

Matrix predict_proba_gbdt(const GbdtModel& model, const Matrix& x) {
    if (x.cols() != model.feature_names.size()) {
        throw DimensionError("gbdt expects " + std::to_string(model.feature_names.size()) + " features, got " +
                             std::to_string(x.cols()));
    }
    const Matrix scores = gbdt_scores(model, x, model.rounds.size());
    Matrix out(x.rows(), static_cast<std::size_t>(model.params.num_classes));
    std::vector<double> prob(model.active_classes.size());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        softmax_row(scores.row(i), prob);
        for (std::size_t a = 0; a < prob.size(); ++a) {
            out(i, static_cast<std::size_t>(model.active_classes[a])) = prob[a];
        }
    }
    return out;
}

Matrix predict_proba_gbdt(const GbdtModel& model, const FeatureMatrix& x) {
    check_prediction_columns(model.feature_names, x);
    return predict_proba_gbdt(model, x.values);
}

// ---------------------------------------------------------------------------
// Random forest
// ---------------------------------------------------------------------------

namespace {

struct ForestTask {
    int node = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
};

DecisionTree grow_forest_tree(const BinMapper& mapper, const std::vector<std::vector<std::uint8_t>>& codes,
                              std::span<const TargetClass> y, const ForestParams& params, std::size_t max_features,
                              std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t n = y.size();
    const auto classes = static_cast<std::size_t>(params.num_classes);
    const std::size_t features = codes.size();

    std::vector<std::uint32_t> rows(n);
    for (auto& r : rows) {
        r = static_cast<std::uint32_t>(rng.index(n));
    }

    DecisionTree tree;
    tree.nodes.emplace_back();
    std::vector<ForestTask> stack{{0, 0, n}};
    std::vector<std::size_t> order(features);
    std::vector<std::uint32_t> bin_class(256 * classes);
    std::vector<std::uint32_t> bin_total(256);
    std::vector<double> total(classes);
    std::vector<double> left(classes);

    while (!stack.empty()) {
        const ForestTask task = stack.back();
        stack.pop_back();
        const std::size_t size = task.end - task.begin;

        std::fill(total.begin(), total.end(), 0.0);
        for (std::size_t i = task.begin; i < task.end; ++i) {
            total[static_cast<std::size_t>(y[rows[i]].id)] += 1.0;
        }
        const bool pure = std::count_if(total.begin(), total.end(), [](double c) { return c > 0.0; }) <= 1;

        int best_feature = -1;
        int best_bin = -1;
        double best_impurity = std::numeric_limits<double>::infinity();
        if (!pure && size >= 2 * params.min_samples_leaf) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            rng.shuffle(std::span<std::size_t>(order));
            double sum_total_sq = 0.0;
            for (double c : total) {
                sum_total_sq += c * c;
            }
            // Evaluate max_features candidates, continuing past that only
            // while no valid partition has been found.
            for (std::size_t k = 0; k < features && (k < max_features || best_feature < 0); ++k) {
                const std::size_t f = order[k];
                const std::size_t nb = mapper.bin_count(f);
                if (nb < 2) {
                    continue;
                }
                std::fill_n(bin_class.begin(), nb * classes, 0u);
                std::fill_n(bin_total.begin(), nb, 0u);
                const std::uint8_t* code = codes[f].data();
                for (std::size_t i = task.begin; i < task.end; ++i) {
                    const std::uint32_t r = rows[i];
                    ++bin_class[code[r] * classes + static_cast<std::size_t>(y[r].id)];
                    ++bin_total[code[r]];
                }
                std::fill(left.begin(), left.end(), 0.0);
                double left_sq = 0.0;
                double right_sq = sum_total_sq;
                std::size_t nl = 0;
                for (std::size_t b = 0; b + 1 < nb; ++b) {
                    if (bin_total[b] == 0) {
                        continue;
                    }
                    for (std::size_t c = 0; c < classes; ++c) {
                        const double add = bin_class[b * classes + c];
                        if (add == 0.0) {
                            continue;
                        }
                        const double right_c = total[c] - left[c];
                        left_sq += 2.0 * left[c] * add + add * add;
                        right_sq += -2.0 * add * right_c + add * add;
                        left[c] += add;
                    }
                    nl += bin_total[b];
                    const std::size_t nr = size - nl;
                    if (nl < params.min_samples_leaf) {
                        continue;
                    }
                    if (nr < params.min_samples_leaf) {
                        break;
                    }
                    const double dl = static_cast<double>(nl);
                    const double dr = static_cast<double>(nr);
                    const double impurity = (dl - left_sq / dl) + (dr - right_sq / dr);
                    if (impurity < best_impurity) {
                        best_impurity = impurity;
                        best_feature = static_cast<int>(f);
                        best_bin = static_cast<int>(b);
                    }
                }
            }
        }

        auto& node = tree.nodes[static_cast<std::size_t>(task.node)];
        if (best_feature < 0) {
            node.distribution.resize(classes);
            for (std::size_t c = 0; c < classes; ++c) {
                node.distribution[c] = total[c] / static_cast<double>(size);
            }
            continue;
        }
        const auto feature = static_cast<std::size_t>(best_feature);
        const auto bin = static_cast<std::uint8_t>(best_bin);
        const std::uint8_t* code = codes[feature].data();
        auto mid = std::stable_partition(rows.begin() + static_cast<std::ptrdiff_t>(task.begin),
                                         rows.begin() + static_cast<std::ptrdiff_t>(task.end),
                                         [&](std::uint32_t r) { return code[r] <= bin; });
        const auto split = static_cast<std::size_t>(mid - rows.begin());
        const int left_id = static_cast<int>(tree.nodes.size());
        node.feature = best_feature;
        node.threshold = mapper.edges[feature][bin];
        node.left = left_id;
        node.right = left_id + 1;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        stack.push_back({left_id + 1, split, task.end});
        stack.push_back({left_id, task.begin, split});
    }
    return tree;
}

} // namespace

ForestModel fit_forest(const FeatureMatrix& x, std::span<const TargetClass> y, const ForestParams& params) {
    params.validate();
    check_training_input(x, y, params.num_classes);

    ForestModel model;
    model.params = params;
    model.feature_names = x.columns;
    const std::size_t features = x.values.cols();
    model.max_features = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(features)))));

    const BinMapper mapper = BinMapper::fit(x.values, params.max_bins);
    const auto codes = mapper.transform(x.values);
    model.trees.resize(params.trees);
    parallel_for(params.trees, [&](std::size_t t) {
        model.trees[t] = grow_forest_tree(mapper, codes, y, params, model.max_features, mix_seed(params.seed, t));
    });
    return model;
}

Matrix predict_proba_forest(const ForestModel& model, const Matrix& x) {
    if (x.cols() != model.feature_names.size()) {
        throw DimensionError("forest expects " + std::to_string(model.feature_names.size()) + " features, got " +
                             std::to_string(x.cols()));
    }
    const auto classes = static_cast<std::size_t>(model.params.num_classes);
    Matrix out(x.rows(), classes);
    const double scale = 1.0 / static_cast<double>(model.trees.size());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto row = x.row(i);
        auto dst = out.row(i);
        for (const auto& tree : model.trees) {
            const auto& leaf = tree.leaf_for(row);
            for (std::size_t c = 0; c < classes; ++c) {
                dst[c] += leaf.distribution[c];
            }
        }
        for (double& p : dst) {
            p *= scale;
        }
    }
    return out;
}

Matrix predict_proba_forest(const ForestModel& model, const FeatureMatrix& x) {
    check_prediction_columns(model.feature_names, x);
    return predict_proba_forest(model, x.values);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const GbdtParams& p) {
    j = nlohmann::json{{"rounds", p.rounds},
                       {"learning_rate", p.learning_rate},
                       {"max_leaves", p.max_leaves},
                       {"min_samples_leaf", p.min_samples_leaf},
                       {"max_bins", p.max_bins},
                       {"l2", p.l2},
                       {"early_stopping_patience", p.early_stopping_patience},
                       {"seed", p.seed},
                       {"num_classes", p.num_classes}};
}

void from_json(const nlohmann::json& j, GbdtParams& p) {
    j.at("rounds").get_to(p.rounds);
    j.at("learning_rate").get_to(p.learning_rate);
    j.at("max_leaves").get_to(p.max_leaves);
    j.at("min_samples_leaf").get_to(p.min_samples_leaf);
    j.at("max_bins").get_to(p.max_bins);
    j.at("l2").get_to(p.l2);
    j.at("early_stopping_patience").get_to(p.early_stopping_patience);
    j.at("seed").get_to(p.seed);
    j.at("num_classes").get_to(p.num_classes);
}

void to_json(nlohmann::json& j, const ForestParams& p) {
    j = nlohmann::json{{"trees", p.trees},
                       {"min_samples_leaf", p.min_samples_leaf},
                       {"max_bins", p.max_bins},
                       {"seed", p.seed},
                       {"num_classes", p.num_classes}};
}

void from_json(const nlohmann::json& j, ForestParams& p) {
    j.at("trees").get_to(p.trees);
    j.at("min_samples_leaf").get_to(p.min_samples_leaf);
    j.at("max_bins").get_to(p.max_bins);
    j.at("seed").get_to(p.seed);
    j.at("num_classes").get_to(p.num_classes);
}

// Trees are stored as parallel arrays, one entry per node.
void to_json(nlohmann::json& j, const DecisionTree& tree) {
    std::vector<int> feature;
    std::vector<double> threshold;
    std::vector<int> left;
    std::vector<int> right;
    std::vector<double> value;
    nlohmann::json distribution = nlohmann::json::array();
    for (const auto& node : tree.nodes) {
        feature.push_back(node.feature);
        threshold.push_back(node.threshold);
        left.push_back(node.left);
        right.push_back(node.right);
        value.push_back(node.value);
        distribution.push_back(node.distribution);
    }
    j = nlohmann::json{{"feature", feature}, {"threshold", threshold}, {"left", left},
                       {"right", right},     {"value", value},         {"distribution", distribution}};
}

void from_json(const nlohmann::json& j, DecisionTree& tree) {
    const auto feature = j.at("feature").get<std::vector<int>>();
    const auto threshold = j.at("threshold").get<std::vector<double>>();
    const auto left = j.at("left").get<std::vector<int>>();
    const auto right = j.at("right").get<std::vector<int>>();
    const auto value = j.at("value").get<std::vector<double>>();
    const auto& distribution = j.at("distribution");
    const std::size_t n = feature.size();
    if (threshold.size() != n || left.size() != n || right.size() != n || value.size() != n ||
        distribution.size() != n) {
        throw ParseError("tree arrays differ in length");
    }
    tree.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& node = tree.nodes[i];
        node.feature = feature[i];
        node.threshold = threshold[i];
        node.left = left[i];
        node.right = right[i];
        node.value = value[i];
        distribution[i].get_to(node.distribution);
        if (!node.is_leaf() && (node.left <= 0 || node.right <= 0 || static_cast<std::size_t>(node.left) >= n ||
                                static_cast<std::size_t>(node.right) >= n)) {
            throw ParseError("tree node " + std::to_string(i) + " has invalid children");
        }
    }
}

void to_json(nlohmann::json& j, const GbdtModel& m) {
    j = nlohmann::json{{"kind", "gbdt"},
                       {"params", m.params},
                       {"feature_names", m.feature_names},
                       {"active_classes", m.active_classes},
                       {"initial_scores", m.initial_scores},
                       {"rounds", m.rounds},
                       {"train_loss", m.train_loss},
                       {"valid_loss", m.valid_loss},
                       {"diagnostics", m.diagnostics}};
}

void from_json(const nlohmann::json& j, GbdtModel& m) {
    j.at("params").get_to(m.params);
    j.at("feature_names").get_to(m.feature_names);
    j.at("active_classes").get_to(m.active_classes);
    j.at("initial_scores").get_to(m.initial_scores);
    j.at("rounds").get_to(m.rounds);
    j.at("train_loss").get_to(m.train_loss);
    j.at("valid_loss").get_to(m.valid_loss);
    j.at("diagnostics").get_to(m.diagnostics);
}

void to_json(nlohmann::json& j, const ForestModel& m) {
    j = nlohmann::json{{"kind", "forest"},
                       {"params", m.params},
                       {"feature_names", m.feature_names},
                       {"max_features", m.max_features},
                       {"trees", m.trees}};
}

void from_json(const nlohmann::json& j, ForestModel& m) {
    j.at("params").get_to(m.params);
    j.at("feature_names").get_to(m.feature_names);
    j.at("max_features").get_to(m.max_features);
    j.at("trees").get_to(m.trees);
}

} // namespace skyglow
