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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "skyglow/matrix.hpp"

namespace skyglow {

/// Lowercases ASCII letters, splits on every character that is not a letter
/// or digit (bytes of multi-byte UTF-8 sequences count as letters) and drops
/// tokens shorter than two characters.
std::vector<std::string> tokenize(std::string_view text);
std::vector<std::string> tokenize(const std::optional<std::string>& text);
inline std::vector<std::string> tokenize(const char* text) { return tokenize(std::string_view(text)); }

/// Compressed sparse row matrix.
struct CsrMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_ptr{0};
    std::vector<std::size_t> col_index;
    std::vector<double> values;

    static CsrMatrix from_dense(const Matrix& dense);
    Matrix to_dense() const;

    /// this * dense
    Matrix multiply(const Matrix& dense) const;
    /// thisᵀ * dense
    Matrix multiply_transposed(const Matrix& dense) const;
};

inline constexpr std::size_t kDefaultVocabularyCap = 20000;

struct TfidfModel {
    /// Column order of the transformed matrix (lexicographic).
    std::vector<std::string> vocabulary;
    std::vector<double> idf;
    std::size_t document_count = 0;
    std::size_t cap = kDefaultVocabularyCap;
    std::vector<std::string> diagnostics;

    std::optional<std::size_t> column(std::string_view token) const;

    /// Must be called after `vocabulary` changes.
    void rebuild_lookup();

private:
    std::unordered_map<std::string, std::size_t> lookup_;
};

/// Keeps the `cap` tokens with highest document frequency (ties
/// lexicographic); idf(t) = ln((1 + N) / (1 + df(t))) + 1.
TfidfModel fit_tfidf(std::span<const std::vector<std::string>> corpus, std::size_t cap = kDefaultVocabularyCap);

/// Raw count times idf, each row scaled to unit L2 norm (zero rows stay zero).
CsrMatrix transform_tfidf(const TfidfModel& model, std::span<const std::vector<std::string>> documents);

struct SvdOptions {
    std::size_t oversampling = 8;
    std::size_t power_iterations = 4;
    /// Further subspace iterations run until every top-r residual
    /// ||A v - s u|| is within `tolerance * s_max`.
    std::size_t max_refinements = 200;
    double tolerance = 1e-12;
};

struct SvdModel {
    std::size_t rank = 0;
    /// rank x columns, orthonormal rows; each row's largest-magnitude entry
    /// is positive.
    Matrix components;
    std::vector<double> singular_values;
    std::uint64_t seed = 0;
    std::size_t iterations = 0;
};

SvdModel fit_truncated_svd(const CsrMatrix& matrix, std::size_t rank, std::uint64_t seed,
                           const SvdOptions& options = {});
SvdModel fit_truncated_svd(const Matrix& matrix, std::size_t rank, std::uint64_t seed, const SvdOptions& options = {});

Matrix transform_svd(const SvdModel& model, const CsrMatrix& matrix);
Matrix transform_svd(const SvdModel& model, const Matrix& matrix);

void to_json(nlohmann::json& j, const TfidfModel& model);
void from_json(const nlohmann::json& j, TfidfModel& model);
void to_json(nlohmann::json& j, const SvdModel& model);
void from_json(const nlohmann::json& j, SvdModel& model);

} // namespace skyglow
