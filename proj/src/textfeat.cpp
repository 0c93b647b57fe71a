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

#include "skyglow/textfeat.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "skyglow/error.hpp"
#include "skyglow/linalg.hpp"
#include "skyglow/random.hpp"

namespace skyglow {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (current.size() >= 2) {
            tokens.push_back(current);
        }
        current.clear();
    };
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (c >= 0x80 || std::isalnum(c)) {
            current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

std::vector<std::string> tokenize(const std::optional<std::string>& text) {
    if (!text) {
        return {};
    }
    return tokenize(std::string_view(*text));
}

CsrMatrix CsrMatrix::from_dense(const Matrix& dense) {
    CsrMatrix out;
    out.rows = dense.rows();
    out.cols = dense.cols();
    out.row_ptr.assign(1, 0);
    for (std::size_t r = 0; r < dense.rows(); ++r) {
        for (std::size_t c = 0; c < dense.cols(); ++c) {
            if (dense(r, c) != 0.0) {
                out.col_index.push_back(c);
                out.values.push_back(dense(r, c));
            }
        }
        out.row_ptr.push_back(out.values.size());
    }
    return out;
}

Matrix CsrMatrix::to_dense() const {
    Matrix out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
            out(r, col_index[p]) = values[p];
        }
    }
    return out;
}

Matrix CsrMatrix::multiply(const Matrix& dense) const {
    if (dense.rows() != cols) {
        throw DimensionError("sparse product: inner dimensions differ");
    }
    Matrix out(rows, dense.cols());
    for (std::size_t r = 0; r < rows; ++r) {
        auto out_row = out.row(r);
        for (std::size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
            const double a = values[p];
            auto d_row = dense.row(col_index[p]);
            for (std::size_t j = 0; j < d_row.size(); ++j) {
                out_row[j] += a * d_row[j];
            }
        }
    }
    return out;
}

Matrix CsrMatrix::multiply_transposed(const Matrix& dense) const {
    if (dense.rows() != rows) {
        throw DimensionError("sparse transposed product: inner dimensions differ");
    }
    Matrix out(cols, dense.cols());
    for (std::size_t r = 0; r < rows; ++r) {
        auto d_row = dense.row(r);
        for (std::size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
            const double a = values[p];
            auto out_row = out.row(col_index[p]);
            for (std::size_t j = 0; j < d_row.size(); ++j) {
                out_row[j] += a * d_row[j];
            }
        }
    }
    return out;
}

std::optional<std::size_t> TfidfModel::column(std::string_view token) const {
    auto it = lookup_.find(std::string(token));
    if (it == lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

void TfidfModel::rebuild_lookup() {
    lookup_.clear();
    for (std::size_t i = 0; i < vocabulary.size(); ++i) {
        lookup_.emplace(vocabulary[i], i);
    }
}

TfidfModel fit_tfidf(std::span<const std::vector<std::string>> corpus, std::size_t cap) {
    if (corpus.empty()) {
        throw ParameterError("tf-idf needs a nonempty corpus");
    }
    if (cap == 0) {
        throw ParameterError("vocabulary cap must be positive");
    }
    std::map<std::string, std::size_t> df;
    std::size_t nonempty = 0;
    for (const auto& doc : corpus) {
        if (!doc.empty()) {
            ++nonempty;
        }
        std::set<std::string_view> unique(doc.begin(), doc.end());
        for (auto token : unique) {
            ++df[std::string(token)];
        }
    }

    TfidfModel model;
    model.document_count = corpus.size();
    model.cap = cap;
    if (nonempty == 0) {
        model.diagnostics.push_back("corpus has no nonempty documents; vocabulary is empty");
        return model;
    }

    std::vector<std::pair<std::string, std::size_t>> ranked(df.begin(), df.end());
    // map order is lexicographic, so a stable sort keeps that order within ties.
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > cap) {
        ranked.resize(cap);
    }
    std::sort(ranked.begin(), ranked.end());

    const double n = static_cast<double>(corpus.size());
    for (const auto& [token, count] : ranked) {
        model.vocabulary.push_back(token);
        model.idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
    }
    model.rebuild_lookup();
    return model;
}

CsrMatrix transform_tfidf(const TfidfModel& model, std::span<const std::vector<std::string>> documents) {
    CsrMatrix out;
    out.rows = documents.size();
    out.cols = model.vocabulary.size();
    out.row_ptr.assign(1, 0);
    for (const auto& doc : documents) {
        std::map<std::size_t, double> counts;
        for (const auto& token : doc) {
            if (auto col = model.column(token)) {
                counts[*col] += 1.0;
            }
        }
        double norm = 0.0;
        for (auto& [col, value] : counts) {
            value *= model.idf[col];
            norm += value * value;
        }
        norm = std::sqrt(norm);
        for (const auto& [col, value] : counts) {
            out.col_index.push_back(col);
            out.values.push_back(value / norm);
        }
        out.row_ptr.push_back(out.values.size());
    }
    return out;
}

namespace {

Matrix take_columns(const Matrix& m, std::size_t count) {
    Matrix out(m.rows(), count);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < count; ++j) {
            out(i, j) = m(i, j);
        }
    }
    return out;
}

} // namespace

SvdModel fit_truncated_svd(const CsrMatrix& a, std::size_t rank, std::uint64_t seed, const SvdOptions& options) {
    const std::size_t smaller = std::min(a.rows, a.cols);
    if (rank < 1 || rank > smaller) {
        throw ParameterError("svd rank " + std::to_string(rank) + " outside [1, " + std::to_string(smaller) + "]");
    }
    const std::size_t width = std::min(rank + options.oversampling, smaller);

    Rng rng(seed);
    Matrix omega(a.cols, width);
    for (double& x : omega.data()) {
        x = rng.normal();
    }

    // Randomized range finder with power iterations.
    Matrix q = linalg::householder_qr(a.multiply(omega)).q;
    for (std::size_t it = 0; it < options.power_iterations; ++it) {
        const Matrix qz = linalg::householder_qr(a.multiply_transposed(q)).q;
        q = linalg::householder_qr(a.multiply(qz)).q;
    }

    SvdModel model;
    model.rank = rank;
    model.seed = seed;
    model.iterations = options.power_iterations;
    for (std::size_t refinement = 0;; ++refinement) {
        // Z = Aᵀ Q = Qz Rz and A ≈ (Q Vs) S (Qz Us)ᵀ with Rz = Us S Vsᵀ.
        auto [qz, rz] = linalg::householder_qr(a.multiply_transposed(q));
        const auto small = linalg::jacobi_svd(rz);
        const Matrix right = multiply(qz, take_columns(small.u, rank));
        const Matrix left = multiply(q, take_columns(small.v, rank));

        const Matrix image = a.multiply(right);
        const double scale = small.s.empty() ? 0.0 : small.s[0];
        double worst = 0.0;
        for (std::size_t j = 0; j < rank; ++j) {
            double residual = 0.0;
            for (std::size_t i = 0; i < image.rows(); ++i) {
                const double diff = image(i, j) - small.s[j] * left(i, j);
                residual += diff * diff;
            }
            worst = std::max(worst, std::sqrt(residual));
        }
        if (worst <= options.tolerance * scale || refinement >= options.max_refinements) {
            model.singular_values.assign(small.s.begin(), small.s.begin() + static_cast<std::ptrdiff_t>(rank));
            model.components = right.transposed();
            break;
        }
        q = linalg::householder_qr(a.multiply(qz)).q;
        ++model.iterations;
    }

    for (std::size_t j = 0; j < rank; ++j) {
        auto row = model.components.row(j);
        std::size_t pivot = 0;
        for (std::size_t c = 1; c < row.size(); ++c) {
            if (std::fabs(row[c]) > std::fabs(row[pivot])) {
                pivot = c;
            }
        }
        if (row[pivot] < 0.0) {
            for (double& x : row) {
                x = -x;
            }
        }
    }
    return model;
}

SvdModel fit_truncated_svd(const Matrix& matrix, std::size_t rank, std::uint64_t seed, const SvdOptions& options) {
    return fit_truncated_svd(CsrMatrix::from_dense(matrix), rank, seed, options);
}

Matrix transform_svd(const SvdModel& model, const CsrMatrix& matrix) {
    if (matrix.cols != model.components.cols()) {
        throw DimensionError("svd transform: matrix has " + std::to_string(matrix.cols) + " columns, model expects " +
                             std::to_string(model.components.cols()));
    }
    return matrix.multiply(model.components.transposed());
}

Matrix transform_svd(const SvdModel& model, const Matrix& matrix) {
    if (matrix.cols() != model.components.cols()) {
        throw DimensionError("svd transform: matrix has " + std::to_string(matrix.cols()) + " columns, model expects " +
                             std::to_string(model.components.cols()));
    }
    return multiply(matrix, model.components.transposed());
}

void to_json(nlohmann::json& j, const TfidfModel& model) {
    j = nlohmann::json{{"vocabulary", model.vocabulary},
                       {"idf", model.idf},
                       {"document_count", model.document_count},
                       {"cap", model.cap},
                       {"diagnostics", model.diagnostics}};
}

void from_json(const nlohmann::json& j, TfidfModel& model) {
    j.at("vocabulary").get_to(model.vocabulary);
    j.at("idf").get_to(model.idf);
    j.at("document_count").get_to(model.document_count);
    j.at("cap").get_to(model.cap);
    j.at("diagnostics").get_to(model.diagnostics);
    model.rebuild_lookup();
}

void to_json(nlohmann::json& j, const SvdModel& model) {
    j = nlohmann::json{{"rank", model.rank},
                       {"columns", model.components.cols()},
                       {"components", model.components.data()},
                       {"singular_values", model.singular_values},
                       {"seed", model.seed},
                       {"iterations", model.iterations}};
}

void from_json(const nlohmann::json& j, SvdModel& model) {
    j.at("rank").get_to(model.rank);
    const auto columns = j.at("columns").get<std::size_t>();
    model.components = Matrix(model.rank, columns);
    j.at("components").get_to(model.components.data());
    if (model.components.data().size() != model.rank * columns) {
        throw DimensionError("svd components do not match rank x columns");
    }
    j.at("singular_values").get_to(model.singular_values);
    j.at("seed").get_to(model.seed);
    j.at("iterations").get_to(model.iterations);
}

} // namespace skyglow
