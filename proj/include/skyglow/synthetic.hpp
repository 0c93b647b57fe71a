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

#include "skyglow/dataset.hpp"

namespace skyglow {

/// Generator for a demonstration dataset with the observation schema. Rows
/// fall into four well-separated location clusters, each carrying its own
/// limiting-magnitude class, so the learning problem is separable. Category
/// shares and missingness rates are allocated by exact quota and then shuffled.
struct SyntheticConfig {
    std::size_t rows = 2000;
    std::uint64_t seed = 2024;

    double missing_sensor_reading = 0.828;
    double missing_comment_1 = 0.429;
    double missing_comment_2 = 0.480;
    double missing_constellation = 0.121;
    double missing_limiting_magnitude = 0.080;
    double missing_elevation = 0.000014;

    double share_gan = 0.801;           // of `type`
    double share_clear = 0.594;         // of `clouds`
    double share_orion = 0.410;         // of present `constellation`
    double share_evening = 0.827;       // of time_of_day_category

    double cluster_spread_deg = 1.5;
};

struct SyntheticDataset {
    ObservationTable observations;
    PopulationTable population;
};

SyntheticDataset generate_synthetic(const SyntheticConfig& config);

} // namespace skyglow
