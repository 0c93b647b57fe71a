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

#include "skyglow/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "skyglow/error.hpp"
#include "skyglow/random.hpp"

namespace skyglow {

namespace {

struct Cluster {
    const char* country;
    double latitude;
    double longitude;
    double elevation;
    double magnitude;  // class centre
    long long population_2006;
    double growth;
    std::array<const char*, 3> words;
};

constexpr std::array<Cluster, 4> kClusters{{
    {"United States", 40.0, -100.0, 300.0, 2.0, 298000000, 0.0075, {"bright", "city", "glow"}},
    {"Germany", 51.0, 10.0, 250.0, 3.0, 82400000, 0.0005, {"hazy", "suburban", "faint"}},
    {"Japan", 36.0, 138.0, 120.0, 4.0, 127800000, -0.0010, {"rural", "many", "stars"}},
    {"Chile", -30.0, -70.0, 1800.0, 5.0, 16300000, 0.0110, {"dark", "milky", "pristine"}},
}};

constexpr std::array<const char*, 5> kCommonWords{"sky", "clear", "night", "observed", "tonight"};
constexpr std::array<const char*, 6> kPlaces{"backyard", "park", "field", "rooftop", "beach", "mountain"};

/// Splits n slots across categories by largest remainder so each count is
/// within one of share * n.
std::vector<std::size_t> allocate(std::size_t n, const std::vector<double>& shares) {
    const double total = std::accumulate(shares.begin(), shares.end(), 0.0);
    std::vector<std::size_t> counts(shares.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < shares.size(); ++i) {
        const double exact = shares[i] / total * static_cast<double>(n);
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        assigned += counts[i];
        remainders.emplace_back(exact - std::floor(exact), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) {
        ++counts[remainders[i % remainders.size()].second];
    }
    return counts;
}

/// Shuffled vector of category indices honoring the quota.
std::vector<std::size_t> quota_labels(std::size_t n, const std::vector<double>& shares, Rng& rng) {
    const auto counts = allocate(n, shares);
    std::vector<std::size_t> labels;
    labels.reserve(n);
    for (std::size_t i = 0; i < counts.size(); ++i) {
        labels.insert(labels.end(), counts[i], i);
    }
    rng.shuffle(std::span<std::size_t>(labels));
    return labels;
}

/// Shuffled mask with exactly round(rate * n) true entries.
std::vector<bool> missing_mask(std::size_t n, double rate, Rng& rng) {
    const auto labels = quota_labels(n, {1.0 - rate, rate}, rng);
    std::vector<bool> mask(n);
    for (std::size_t i = 0; i < n; ++i) {
        mask[i] = labels[i] == 1;
    }
    return mask;
}

int pick_hour(std::size_t category, Rng& rng) {
    switch (category) {
        case 0:  // evening
            return 17 + static_cast<int>(rng.index(5));
        case 1:  // afternoon
            return 12 + static_cast<int>(rng.index(5));
        case 2:  // morning
            return 5 + static_cast<int>(rng.index(7));
        default: {  // night: 22, 23, 0..4
            const int slot = static_cast<int>(rng.index(7));
            return slot < 2 ? 22 + slot : slot - 2;
        }
    }
}

} // namespace

SyntheticDataset generate_synthetic(const SyntheticConfig& config) {
    if (config.rows == 0) {
        throw ParameterError("synthetic dataset needs at least one row");
    }
    const std::size_t n = config.rows;
    Rng rng(config.seed);

    static const std::vector<std::string> kTypes{"GAN", "DSM", "SQM", "LON", "BB"};
    static const std::vector<std::string> kClouds{"clear", "1/4 of sky", "1/2 of sky", "over 1/2 of sky"};
    static const std::vector<std::string> kConstellations{"Orion", "Leo", "Crux", "Bootes", "Cygnus", "Perseus"};

    const auto clusters = quota_labels(n, {1.0, 1.0, 1.0, 1.0}, rng);
    const double rest_type = 1.0 - config.share_gan;
    const auto types = quota_labels(
        n, {config.share_gan, rest_type * 0.40, rest_type * 0.35, rest_type * 0.15, rest_type * 0.10}, rng);
    const double rest_cloud = 1.0 - config.share_clear;
    const auto clouds = quota_labels(n, {config.share_clear, rest_cloud * 0.5, rest_cloud * 0.3, rest_cloud * 0.2}, rng);
    const double rest_tod = 1.0 - config.share_evening;
    const auto periods = quota_labels(n, {config.share_evening, rest_tod * 0.45, rest_tod * 0.35, rest_tod * 0.20}, rng);

    const auto no_sensor = missing_mask(n, config.missing_sensor_reading, rng);
    const auto no_comment_1 = missing_mask(n, config.missing_comment_1, rng);
    const auto no_comment_2 = missing_mask(n, config.missing_comment_2, rng);
    const auto no_constellation = missing_mask(n, config.missing_constellation, rng);
    const auto no_target = missing_mask(n, config.missing_limiting_magnitude, rng);
    const auto no_elevation = missing_mask(n, config.missing_elevation, rng);

    const std::size_t with_constellation =
        static_cast<std::size_t>(std::count(no_constellation.begin(), no_constellation.end(), false));
    const double rest_const = 1.0 - config.share_orion;
    const auto constellations =
        quota_labels(with_constellation,
                     {config.share_orion, rest_const * 0.32, rest_const * 0.24, rest_const * 0.18, rest_const * 0.14,
                      rest_const * 0.12},
                     rng);

    SyntheticDataset data;
    data.observations.reserve(n);
    std::size_t constellation_cursor = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Cluster& cluster = kClusters[clusters[i]];
        ObservationRecord rec;
        char id[32];
        std::snprintf(id, sizeof(id), "obs-%06zu", i + 1);
        rec.id = id;

        Timestamp ts;
        ts.year = kFirstPopulationYear + static_cast<int>(rng.index(kLastPopulationYear - kFirstPopulationYear + 1));
        ts.month = 1 + static_cast<int>(rng.index(12));
        ts.day = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(days_in_month(ts.year, ts.month))));
        ts.hour = pick_hour(periods[i], rng);
        ts.minute = static_cast<int>(rng.index(60));
        ts.second = static_cast<int>(rng.index(60));
        rec.time = ts;

        const double latitude = std::clamp(cluster.latitude + config.cluster_spread_deg * rng.normal(), -90.0, 90.0);
        const double longitude = std::clamp(cluster.longitude + config.cluster_spread_deg * rng.normal(), -180.0, 180.0);
        // Round coordinates the way observers report them.
        rec.latitude = std::round(latitude * 1e4) / 1e4;
        rec.longitude = std::round(longitude * 1e4) / 1e4;
        rec.time_zone = std::round(cluster.longitude / 15.0);
        rec.country = cluster.country;
        if (!no_elevation[i]) {
            rec.elevation_m = std::round(std::max(0.0, cluster.elevation + 80.0 * rng.normal()));
        }
        rec.sensor_type = kTypes[types[i]];

        const double magnitude = cluster.magnitude + rng.uniform(-0.35, 0.35);
        if (!no_sensor[i]) {
            rec.sensor_reading = std::round((16.0 + 1.2 * magnitude + 0.3 * rng.normal()) * 100.0) / 100.0;
        }
        rec.clouds = kClouds[clouds[i]];
        if (!no_constellation[i]) {
            rec.constellation = kConstellations[constellations[constellation_cursor++]];
        }
        if (!no_comment_1[i]) {
            std::string text = cluster.words[rng.index(3)];
            text += ' ';
            text += kCommonWords[rng.index(kCommonWords.size())];
            if (rng.uniform() < 0.5) {
                text += ", ";
                text += cluster.words[rng.index(3)];
            }
            rec.comment_1 = text;
        }
        if (!no_comment_2[i]) {
            rec.comment_2 = std::string("from the ") + kPlaces[rng.index(kPlaces.size())];
        }
        if (!no_target[i]) {
            rec.limiting_magnitude = std::round(magnitude * 100.0) / 100.0;
        }
        data.observations.push_back(std::move(rec));
    }

    for (const auto& cluster : kClusters) {
        double population = static_cast<double>(cluster.population_2006);
        for (int year = kFirstPopulationYear; year <= kLastPopulationYear; ++year) {
            data.population.push_back({cluster.country, year, static_cast<long long>(std::llround(population))});
            population *= 1.0 + cluster.growth;
        }
    }
    return data;
}

} // namespace skyglow
