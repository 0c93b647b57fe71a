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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "skyglow/dataset.hpp"
#include "skyglow/features.hpp"
#include "skyglow/matrix.hpp"

namespace skyglow {

struct Neighbor {
    std::size_t row = 0;
    /// Squared Euclidean distance.
    double distance2 = 0.0;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Exact k-nearest-neighbor index under Euclidean distance. Results are
/// ordered by (distance, row index), so ties resolve to the smaller row.
class NeighborIndex {
public:
    using Eligible = std::function<bool(std::size_t)>;

    explicit NeighborIndex(Matrix points, std::vector<int> folds = {});

    std::size_t size() const { return points_.rows(); }
    std::size_t dims() const { return points_.cols(); }
    const Matrix& points() const { return points_; }
    bool has_folds() const { return !folds_.empty(); }
    const std::vector<int>& folds() const { return folds_; }

    /// Up to k nearest rows accepted by `eligible` (all rows when empty).
    std::vector<Neighbor> query(std::span<const double> point, std::size_t k, const Eligible& eligible = {}) const;

    /// Neighbors of an indexed row, never including the row itself.
    std::vector<Neighbor> query_row(std::size_t row, std::size_t k, const Eligible& eligible = {}) const;

private:
    struct Node {
        std::size_t begin = 0;
        std::size_t end = 0;
        std::size_t left = 0;
        std::size_t right = 0;
        std::size_t split_dim = 0;
        double split_value = 0.0;
        bool leaf = true;
        std::vector<double> low;
        std::vector<double> high;
    };

    std::size_t build(std::size_t begin, std::size_t end);
    double box_distance2(const Node& node, std::span<const double> point) const;

    Matrix points_;
    std::vector<int> folds_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

/// Coordinates of the neighbor space: z-scored latitude, longitude, epoch
/// seconds and UTC offset, using the pipeline's means and deviations.
struct NeighborSpace {
    NeighborIndex index;
    /// Position in the source table of each indexed row.
    std::vector<std::size_t> table_rows;
    std::vector<Diagnostic> diagnostics;
};

/// nullopt when latitude, longitude or time is missing.
std::optional<std::vector<double>> neighbor_coordinates(const FeaturePipelineModel& pipeline,
                                                        const ObservationRecord& record);

/// Indexes rows that have latitude, longitude and time; others are diagnosed.
/// `folds`, when given, is aligned with `table`. Throws InsufficientDataError
/// when fewer than two rows qualify.
NeighborSpace build_neighbor_index(std::span<const ObservationRecord> table, const FeaturePipelineModel& pipeline,
                                   std::span<const int> folds = {});

enum class NeighborMode { out_of_fold, all };

struct NeighborMeans {
    std::vector<double> mean;
    std::vector<std::size_t> count;
};

/// Per indexed row: mean of `values` over its k nearest eligible neighbors.
/// A neighbor is eligible when it is not the row itself, its value is
/// present and, in out_of_fold mode, it lies in a different fold. Rows with
/// no eligible neighbor get the mean of all present values and count 0.
NeighborMeans neighbor_mean_features(const NeighborIndex& index, std::span<const std::optional<double>> values,
                                     std::size_t k, NeighborMode mode);

/// Same statistic for points outside the index (every present value is
/// eligible).
NeighborMeans neighbor_mean_for_points(const NeighborIndex& index, std::span<const std::optional<double>> values,
                                       const Matrix& queries, std::size_t k);

} // namespace skyglow
