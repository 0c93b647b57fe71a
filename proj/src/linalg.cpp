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

#include "skyglow/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "skyglow/error.hpp"

namespace skyglow::linalg {

QrResult householder_qr(const Matrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    if (m < n) {
        throw DimensionError("householder_qr needs rows >= cols");
    }
    Matrix work = a;
    std::vector<std::vector<double>> reflectors(n);

    for (std::size_t k = 0; k < n; ++k) {
        double norm = 0.0;
        for (std::size_t i = k; i < m; ++i) {
            norm += work(i, k) * work(i, k);
        }
        norm = std::sqrt(norm);
        auto& v = reflectors[k];
        if (norm == 0.0) {
            continue;
        }
        v.assign(m - k, 0.0);
        const double alpha = work(k, k) >= 0.0 ? -norm : norm;
        for (std::size_t i = k; i < m; ++i) {
            v[i - k] = work(i, k);
        }
        v[0] -= alpha;
        double vnorm = 0.0;
        for (double x : v) {
            vnorm += x * x;
        }
        vnorm = std::sqrt(vnorm);
        if (vnorm == 0.0) {
            v.clear();
            continue;
        }
        for (double& x : v) {
            x /= vnorm;
        }
        for (std::size_t j = k; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t i = k; i < m; ++i) {
                dot += v[i - k] * work(i, j);
            }
            for (std::size_t i = k; i < m; ++i) {
                work(i, j) -= 2.0 * v[i - k] * dot;
            }
        }
    }

    QrResult out;
    out.r = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            out.r(i, j) = work(i, j);
        }
    }
    // Q = H_0 ... H_{n-1} applied to the first n columns of the identity.
    out.q = Matrix(m, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.q(j, j) = 1.0;
    }
    for (std::size_t kk = n; kk-- > 0;) {
        const auto& v = reflectors[kk];
        if (v.empty()) {
            continue;
        }
        for (std::size_t j = 0; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t i = kk; i < m; ++i) {
                dot += v[i - kk] * out.q(i, j);
            }
            for (std::size_t i = kk; i < m; ++i) {
                out.q(i, j) -= 2.0 * v[i - kk] * dot;
            }
        }
    }
    return out;
}

void complete_orthonormal_columns(Matrix& m, const std::vector<bool>& valid) {
    const std::size_t rows = m.rows();
    std::size_t candidate = 0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
        if (valid[j]) {
            continue;
        }
        for (; candidate < rows; ++candidate) {
            std::vector<double> e(rows, 0.0);
            e[candidate] = 1.0;
            // Two Gram-Schmidt passes against every column already usable.
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t other = 0; other < m.cols(); ++other) {
                    if (other == j || (!valid[other] && other > j)) {
                        continue;
                    }
                    double dot = 0.0;
                    for (std::size_t i = 0; i < rows; ++i) {
                        dot += e[i] * m(i, other);
                    }
                    for (std::size_t i = 0; i < rows; ++i) {
                        e[i] -= dot * m(i, other);
                    }
                }
            }
            double norm = 0.0;
            for (double x : e) {
                norm += x * x;
            }
            norm = std::sqrt(norm);
            if (norm > 1e-8) {
                for (std::size_t i = 0; i < rows; ++i) {
                    m(i, j) = e[i] / norm;
                }
                ++candidate;
                break;
            }
        }
    }
}

namespace {

SvdResult jacobi_tall(const Matrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    Matrix u = a;
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        v(i, i) = 1.0;
    }
    constexpr double kEps = 1e-15;
    for (int sweep = 0; sweep < 80; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0;
                double beta = 0.0;
                double gamma = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    alpha += u(i, p) * u(i, p);
                    beta += u(i, q) * u(i, q);
                    gamma += u(i, p) * u(i, q);
                }
                if (gamma == 0.0 || std::fabs(gamma) <= kEps * std::sqrt(alpha * beta)) {
                    continue;
                }
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double up = u(i, p);
                    const double uq = u(i, q);
                    u(i, p) = c * up - s * uq;
                    u(i, q) = s * up + c * uq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vp = v(i, p);
                    const double vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) {
            break;
        }
    }

    std::vector<double> sigma(n);
    for (std::size_t j = 0; j < n; ++j) {
        double norm = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            norm += u(i, j) * u(i, j);
        }
        sigma[j] = std::sqrt(norm);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    SvdResult out;
    out.u = Matrix(m, n);
    out.v = Matrix(n, n);
    out.s.resize(n);
    const double largest = n > 0 ? sigma[order[0]] : 0.0;
    std::vector<bool> valid(n, true);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        out.s[j] = sigma[src];
        const bool usable = sigma[src] > 0.0 && sigma[src] > largest * 1e-14;
        valid[j] = usable;
        for (std::size_t i = 0; i < m; ++i) {
            out.u(i, j) = usable ? u(i, src) / sigma[src] : 0.0;
        }
        for (std::size_t i = 0; i < n; ++i) {
            out.v(i, j) = v(i, src);
        }
    }
    if (std::find(valid.begin(), valid.end(), false) != valid.end()) {
        complete_orthonormal_columns(out.u, valid);
    }
    return out;
}

} // namespace

SvdResult jacobi_svd(const Matrix& a) {
    if (a.rows() >= a.cols()) {
        return jacobi_tall(a);
    }
    SvdResult t = jacobi_tall(a.transposed());
    return SvdResult{std::move(t.v), std::move(t.s), std::move(t.u)};
}

} // namespace skyglow::linalg
