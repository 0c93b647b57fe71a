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

#include <vector>

#include "skyglow/matrix.hpp"

namespace skyglow::linalg {

struct QrResult {
    Matrix q;  // m x n, orthonormal columns
    Matrix r;  // n x n, upper triangular
};

/// Thin Householder QR of an m x n matrix with m >= n. Rank-deficient input
/// still yields orthonormal Q columns.
QrResult householder_qr(const Matrix& a);

struct SvdResult {
    Matrix u;                  // m x k, orthonormal columns
    std::vector<double> s;     // k values, nonincreasing
    Matrix v;                  // n x k, orthonormal columns
};

/// Full thin SVD by one-sided (Hestenes) Jacobi rotations; k = min(m, n).
/// Columns belonging to zero singular values are completed to an orthonormal
/// set.
SvdResult jacobi_svd(const Matrix& a);

/// Replaces zero (or numerically dependent) columns of `m` so that all columns
/// are orthonormal, keeping the already orthonormal ones unchanged.
void complete_orthonormal_columns(Matrix& m, const std::vector<bool>& valid);

} // namespace skyglow::linalg
