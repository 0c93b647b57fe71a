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

#include "skyglow/neighbors.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

#include "skyglow/error.hpp"

namespace skyglow {

namespace {

constexpr std::size_t kLeafSize = 16;

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = a[d] - b[d];
        sum += diff * diff;
    }
    return sum;
}

bool closer(const Neighbor& a, const Neighbor& b) {
    return a.distance2 < b.distance2 || (a.distance2 == b.distance2 && a.row < b.row);
}

} // namespace

NeighborIndex::NeighborIndex(Matrix points, std::vector<int> folds) : points_(std::move(points)), folds_(std::move(folds)) {
    if (!folds_.empty() && folds_.size() != points_.rows()) {
        throw DimensionError("fold labels do not match the number of indexed points");
    }
    order_.resize(points_.rows());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (!order_.empty()) {
        nodes_.reserve(2 * (order_.size() / kLeafSize + 1));
        build(0, order_.size());
    }
}

std::size_t NeighborIndex::build(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.emplace_back();
    Node node;
    node.begin = begin;
    node.end = end;
    const std::size_t dims = points_.cols();
    node.low.assign(dims, 0.0);
    node.high.assign(dims, 0.0);
    for (std::size_t d = 0; d < dims; ++d) {
        double lo = points_(order_[begin], d);
        double hi = lo;
        for (std::size_t i = begin + 1; i < end; ++i) {
            const double v = points_(order_[i], d);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        node.low[d] = lo;
        node.high[d] = hi;
    }

    double spread = 0.0;
    for (std::size_t d = 0; d < dims; ++d) {
        if (node.high[d] - node.low[d] > spread) {
            spread = node.high[d] - node.low[d];
            node.split_dim = d;
        }
    }
    if (end - begin > kLeafSize && spread > 0.0) {
        const std::size_t mid = begin + (end - begin) / 2;
        const std::size_t dim = node.split_dim;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                         order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::size_t a, std::size_t b) { return points_(a, dim) < points_(b, dim); });
        node.split_value = points_(order_[mid], dim);
        node.leaf = false;
        node.left = build(begin, mid);
        node.right = build(mid, end);
    }
    nodes_[id] = std::move(node);
    return id;
}

double NeighborIndex::box_distance2(const Node& node, std::span<const double> point) const {
    double sum = 0.0;
    for (std::size_t d = 0; d < point.size(); ++d) {
        double diff = 0.0;
        if (point[d] < node.low[d]) {
            diff = node.low[d] - point[d];
        } else if (point[d] > node.high[d]) {
            diff = point[d] - node.high[d];
        }
        sum += diff * diff;
    }
    return sum;
}

std::vector<Neighbor> NeighborIndex::query(std::span<const double> point, std::size_t k, const Eligible& eligible) const {
    if (point.size() != dims()) {
        throw DimensionError("query point has " + std::to_string(point.size()) + " coordinates, index has " +
                             std::to_string(dims()));
    }
    std::vector<Neighbor> heap;  // max-heap under `closer`
    if (k == 0 || nodes_.empty()) {
        return heap;
    }
    heap.reserve(k + 1);

    std::vector<std::size_t> stack{0};
    while (!stack.empty()) {
        const Node& node = nodes_[stack.back()];
        stack.pop_back();
        // Prune only strictly farther boxes so equal-distance ties with a
        // smaller row index are still visited.
        if (heap.size() == k && box_distance2(node, point) > heap.front().distance2) {
            continue;
        }
        if (node.leaf) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const std::size_t row = order_[i];
                if (eligible && !eligible(row)) {
                    continue;
                }
                Neighbor candidate{row, squared_distance(points_.row(row), point)};
                if (heap.size() < k) {
                    heap.push_back(candidate);
                    std::push_heap(heap.begin(), heap.end(), closer);
                } else if (closer(candidate, heap.front())) {
                    std::pop_heap(heap.begin(), heap.end(), closer);
                    heap.back() = candidate;
                    std::push_heap(heap.begin(), heap.end(), closer);
                }
            }
            continue;
        }
        // Visit the nearer child first: push it last.
        const bool go_left = point[node.split_dim] < node.split_value;
        stack.push_back(go_left ? node.right : node.left);
        stack.push_back(go_left ? node.left : node.right);
    }
    std::sort_heap(heap.begin(), heap.end(), closer);
    return heap;
}

std::vector<Neighbor> NeighborIndex::query_row(std::size_t row, std::size_t k, const Eligible& eligible) const {
    if (row >= size()) {
        throw DimensionError("row " + std::to_string(row) + " is not in the index");
    }
    return query(points_.row(row), k, [&](std::size_t other) { return other != row && (!eligible || eligible(other)); });
}

std::optional<std::vector<double>> neighbor_coordinates(const FeaturePipelineModel& pipeline,
                                                        const ObservationRecord& record) {
    if (!record.latitude || !record.longitude || !record.time) {
        return std::nullopt;
    }
    auto standardized = [&](const char* name, std::optional<double> value) {
        const auto* col = pipeline.find_numeric(name);
        if (col == nullptr || col->constant) {
            return 0.0;
        }
        return (value.value_or(col->impute) - col->mean) / col->stddev;
    };
    const double epoch = epoch_seconds(*record.time, record.time_zone.value_or(0.0));
    return std::vector<double>{standardized("latitude", record.latitude), standardized("longitude", record.longitude),
                               standardized("epoch_seconds", epoch), standardized("time_zone", record.time_zone)};
}

NeighborSpace build_neighbor_index(std::span<const ObservationRecord> table, const FeaturePipelineModel& pipeline,
                                   std::span<const int> folds) {
    if (!folds.empty() && folds.size() != table.size()) {
        throw DimensionError("fold labels do not match the table");
    }
    std::vector<std::vector<double>> coordinates;
    std::vector<std::size_t> rows;
    std::vector<int> kept_folds;
    std::vector<Diagnostic> diagnostics;
    for (std::size_t i = 0; i < table.size(); ++i) {
        auto coords = neighbor_coordinates(pipeline, table[i]);
        if (!coords) {
            diagnostics.push_back({0, table[i].id, "missing latitude, longitude or time; not indexed"});
            continue;
        }
        coordinates.push_back(std::move(*coords));
        rows.push_back(i);
        if (!folds.empty()) {
            kept_folds.push_back(folds[i]);
        }
    }
    if (coordinates.size() < 2) {
        throw InsufficientDataError("neighbor index needs at least 2 rows with coordinates and time, found " +
                                    std::to_string(coordinates.size()));
    }
    Matrix points(coordinates.size(), 4);
    for (std::size_t i = 0; i < coordinates.size(); ++i) {
        std::copy(coordinates[i].begin(), coordinates[i].end(), points.row(i).begin());
    }
    return NeighborSpace{NeighborIndex(std::move(points), std::move(kept_folds)), std::move(rows),
                         std::move(diagnostics)};
}

namespace {

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

void summarize(const std::vector<Neighbor>& found, std::span<const std::optional<double>> values, double fallback,
               double& mean, std::size_t& count) {
    if (found.empty()) {
        mean = fallback;
        count = 0;
        return;
    }
    double sum = 0.0;
    for (const auto& n : found) {
        sum += *values[n.row];
    }
    mean = sum / static_cast<double>(found.size());
    count = found.size();
}

} // namespace

NeighborMeans neighbor_mean_features(const NeighborIndex& index, std::span<const std::optional<double>> values,
                                     std::size_t k, NeighborMode mode) {
    if (k < 1) {
        throw ParameterError("neighbor count k must be at least 1");
    }
    if (values.size() != index.size()) {
        throw DimensionError("values are not row-aligned with the neighbor index");
    }
    if (mode == NeighborMode::out_of_fold && !index.has_folds()) {
        throw ParameterError("out-of-fold neighbor features need fold labels in the index");
    }
    const double fallback = present_mean(values);
    const auto& folds = index.folds();
    NeighborMeans out;
    out.mean.resize(index.size());
    out.count.resize(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        const auto found = index.query_row(i, k, [&](std::size_t j) {
            return values[j].has_value() && (mode == NeighborMode::all || folds[j] != folds[i]);
        });
        summarize(found, values, fallback, out.mean[i], out.count[i]);
    }
    return out;
}

NeighborMeans neighbor_mean_for_points(const NeighborIndex& index, std::span<const std::optional<double>> values,
                                       const Matrix& queries, std::size_t k) {
    if (k < 1) {
        throw ParameterError("neighbor count k must be at least 1");
    }
    if (values.size() != index.size()) {
        throw DimensionError("values are not row-aligned with the neighbor index");
    }
    const double fallback = present_mean(values);
    NeighborMeans out;
    out.mean.resize(queries.rows());
    out.count.resize(queries.rows());
    for (std::size_t i = 0; i < queries.rows(); ++i) {
        const auto found = index.query(queries.row(i), k, [&](std::size_t j) { return values[j].has_value(); });
        summarize(found, values, fallback, out.mean[i], out.count[i]);
    }
    return out;
}

} // namespace skyglow
