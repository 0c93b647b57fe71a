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

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace skyglow {

enum class ChartKind { line, bar };

struct LineSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

struct BarItem {
    std::string label;
    double value = 0.0;
};

struct ChartData {
    std::string title;
    std::vector<LineSeries> lines;  // used by ChartKind::line
    std::vector<BarItem> bars;      // used by ChartKind::bar
};

inline constexpr int kChartWidth = 800;
inline constexpr int kChartHeight = 450;

/// Standalone SVG 1.1 document on a fixed 800x450 canvas. Line charts draw
/// one polyline per series; bar charts draw one rect per item. Coordinates
/// use two fixed decimals, so identical input gives identical bytes.
/// Throws InputError when there is nothing to draw.
std::string render_svg_chart(const ChartData& data, ChartKind kind);

void emit_svg_chart(const ChartData& data, ChartKind kind, const std::filesystem::path& path);

} // namespace skyglow
