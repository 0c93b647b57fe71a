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

#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "skyglow/features.hpp"
#include "skyglow/matrix.hpp"

namespace skyglow {

struct EnsembleWeights {
    std::vector<std::string> model_ids;
    std::vector<double> weights;
    /// Micro-F1 of the blended argmax predictions.
    double objective = 0.0;
    /// 0 is the uniform start; 1 + i starts at model i alone.
    std::size_t restart = 0;
};

inline const std::vector<double> kDefaultStepSchedule{0.5, 0.25, 0.1, 0.05, 0.01};

/// Sum of weights[i] * matrices[i], accumulated in model order. Weights must
/// be nonnegative and sum to 1 within 1e-9.
Matrix blend(std::span<const Matrix> matrices, std::span<const double> weights);

/// blend() with uniform weights.
Matrix mean_blend(std::span<const Matrix> matrices);

/// Micro-F1 of argmax(blend(matrices, weights)) against `truth`.
double blend_f1(std::span<const Matrix> matrices, std::span<const double> weights, std::span<const TargetClass> truth);

/// Coordinate ascent on the weight simplex maximizing blended micro-F1.
/// Restarts from the uniform point and from every corner; each step size of
/// the schedule moves mass between ordered model pairs and a move is kept only
/// when it strictly improves the objective. Equal best moves are broken by a
/// seeded draw; equal restarts keep the earlier one.
EnsembleWeights optimize_weights(std::span<const Matrix> matrices, std::span<const TargetClass> truth,
                                 std::span<const double> steps = kDefaultStepSchedule, std::uint64_t seed = 0,
                                 std::vector<std::string> model_ids = {});

void write_weights(std::ostream& out, const EnsembleWeights& weights);
EnsembleWeights read_weights(std::istream& in);

} // namespace skyglow
