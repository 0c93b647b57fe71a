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

#include "skyglow/ensemble.hpp"

#include <cmath>

#include "skyglow/csv.hpp"
#include "skyglow/error.hpp"
#include "skyglow/random.hpp"
#include "skyglow/validation.hpp"

namespace skyglow {

namespace {

void check_shapes(std::span<const Matrix> matrices) {
    if (matrices.empty()) {
        throw ParameterError("blending needs at least one model");
    }
    for (const auto& m : matrices) {
        if (m.rows() != matrices[0].rows() || m.cols() != matrices[0].cols()) {
            throw DimensionError("probability matrices differ in shape");
        }
    }
}

std::size_t correct_count(const Matrix& blended, std::span<const TargetClass> truth) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < blended.rows(); ++i) {
        if (argmax_class(blended.row(i)) == truth[i].id) {
            ++hits;
        }
    }
    return hits;
}

} // namespace

Matrix blend(std::span<const Matrix> matrices, std::span<const double> weights) {
    check_shapes(matrices);
    if (weights.size() != matrices.size()) {
        throw DimensionError("got " + std::to_string(weights.size()) + " weights for " +
                             std::to_string(matrices.size()) + " models");
    }
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) {
            throw ParameterError("blend weights must be nonnegative");
        }
        total += w;
    }
    if (std::fabs(total - 1.0) > 1e-9) {
        throw ParameterError("blend weights must sum to 1");
    }
    Matrix out(matrices[0].rows(), matrices[0].cols());
    auto& dst = out.data();
    for (std::size_t m = 0; m < matrices.size(); ++m) {
        const auto& src = matrices[m].data();
        for (std::size_t i = 0; i < dst.size(); ++i) {
            dst[i] += weights[m] * src[i];
        }
    }
    return out;
}

Matrix mean_blend(std::span<const Matrix> matrices) {
    check_shapes(matrices);
    const std::vector<double> uniform(matrices.size(), 1.0 / static_cast<double>(matrices.size()));
    return blend(matrices, uniform);
}

double blend_f1(std::span<const Matrix> matrices, std::span<const double> weights, std::span<const TargetClass> truth) {
    const Matrix blended = blend(matrices, weights);
    if (blended.rows() != truth.size()) {
        throw DimensionError("probability rows and true classes differ in length");
    }
    return classification_metrics(predicted_classes(blended), truth).f1;
}

EnsembleWeights optimize_weights(std::span<const Matrix> matrices, std::span<const TargetClass> truth,
                                 std::span<const double> steps, std::uint64_t seed, std::vector<std::string> model_ids) {
    check_shapes(matrices);
    if (matrices[0].rows() != truth.size()) {
        throw DimensionError("probability rows and true classes differ in length");
    }
    if (truth.empty()) {
        throw InputError("weight optimization needs at least one row");
    }
    for (double step : steps) {
        if (!(step > 0.0 && step <= 1.0)) {
            throw ParameterError("ensemble step sizes must lie in (0, 1]");
        }
    }
    const std::size_t models = matrices.size();
    if (model_ids.empty()) {
        for (std::size_t m = 0; m < models; ++m) {
            model_ids.push_back("model_" + std::to_string(m));
        }
    }
    if (model_ids.size() != models) {
        throw DimensionError("model id count differs from the model count");
    }

    // Objective in hit counts: micro-F1 is hits / rows, so comparisons on
    // counts are exact.
    auto hits = [&](const std::vector<double>& w) { return correct_count(blend(matrices, w), truth); };

    std::vector<std::vector<double>> starts;
    starts.emplace_back(models, 1.0 / static_cast<double>(models));
    if (models > 1) {
        for (std::size_t m = 0; m < models; ++m) {
            std::vector<double> corner(models, 0.0);
            corner[m] = 1.0;
            starts.push_back(std::move(corner));
        }
    }

    EnsembleWeights best;
    best.model_ids = model_ids;
    std::size_t best_hits = 0;
    for (std::size_t r = 0; r < starts.size(); ++r) {
        Rng rng(mix_seed(seed, r));
        std::vector<double> w = starts[r];
        std::size_t current = hits(w);
        for (double step : steps) {
            for (;;) {
                std::size_t top = current;
                std::vector<std::vector<double>> tied;
                for (std::size_t from = 0; from < models; ++from) {
                    const double mass = std::min(step, w[from]);
                    if (mass <= 0.0) {
                        continue;
                    }
                    for (std::size_t to = 0; to < models; ++to) {
                        if (to == from) {
                            continue;
                        }
                        std::vector<double> candidate = w;
                        candidate[from] -= mass;
                        candidate[to] += mass;
                        if (candidate[from] < 0.0) {
                            candidate[from] = 0.0;
                        }
                        const std::size_t score = hits(candidate);
                        if (score > top) {
                            top = score;
                            tied.clear();
                        }
                        if (score == top && score > current) {
                            tied.push_back(std::move(candidate));
                        }
                    }
                }
                if (tied.empty()) {
                    break;
                }
                w = std::move(tied[tied.size() == 1 ? 0 : rng.index(tied.size())]);
                current = top;
            }
        }
        if (r == 0 || current > best_hits) {
            best_hits = current;
            best.weights = w;
            best.restart = r;
        }
    }

    best.objective = blend_f1(matrices, best.weights, truth);
    return best;
}

void write_weights(std::ostream& out, const EnsembleWeights& weights) {
    csv::write_row(out, {"model_id", "weight"});
    for (std::size_t m = 0; m < weights.weights.size(); ++m) {
        csv::write_row(out, {weights.model_ids[m], csv::format_double(weights.weights[m])});
    }
}

EnsembleWeights read_weights(std::istream& in) {
    const auto rows = csv::read_all(in);
    if (rows.empty() || rows[0] != std::vector<std::string>{"model_id", "weight"}) {
        throw SchemaError("weights file header must be model_id,weight");
    }
    EnsembleWeights out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != 2) {
            throw ParseError("weights line " + std::to_string(r + 1) + " needs two fields");
        }
        const auto w = csv::parse_double(rows[r][1]);
        if (!w || *w < 0.0) {
            throw ParseError("weights line " + std::to_string(r + 1) + " has a bad weight '" + rows[r][1] + "'");
        }
        out.model_ids.push_back(rows[r][0]);
        out.weights.push_back(*w);
    }
    return out;
}

} // namespace skyglow
