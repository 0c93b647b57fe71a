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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skyglow/dataset.hpp"
#include "skyglow/learners.hpp"
#include "skyglow/modeling.hpp"

namespace skyglow {

/// Effective settings of a pipeline run. Relative paths in a config file are
/// resolved against the file's directory.
struct RunConfig {
    std::filesystem::path observations;
    std::filesystem::path population;
    std::filesystem::path output{"skyglow_out"};
    std::filesystem::path predict_input;
    Strictness strictness = Strictness::lenient;

    ModelingConfig modeling;
    GbdtParams gbdt;
    ForestParams forest;
    std::vector<std::string> models{"gbdt_full", "gbdt_base", "forest"};

    int cv_k = 5;
    std::uint64_t cv_seed = 0;
    bool cv_stratified = true;

    std::vector<double> ensemble_steps{0.5, 0.25, 0.1, 0.05, 0.01};
    std::uint64_t ensemble_seed = 0;

    bool report_charts = true;
    std::vector<std::string> trend_fields{"limiting_magnitude", "sensor_reading", "population", "elevation_m"};

    /// Sets every seed (cv, learners, text, ensemble) to `seed`.
    void apply_seed(std::uint64_t seed);

    /// Forwards each section to its owning module's bounds.
    void validate() const;

    std::vector<ModelSpec> model_specs() const;
};

/// Every key accepted in a config file.
const std::vector<std::string>& config_keys();

/// Parses `key = value` lines with optional `[section]` headers that prefix
/// the following keys. Blank lines and lines starting with '#' are ignored.
RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir);

/// Reads, parses and validates a config file; input paths must exist.
RunConfig load_config(const std::filesystem::path& path);

/// Effective values in the config syntax. The output directory is left out
/// so that runs into different directories echo identical files.
void write_config(std::ostream& out, const RunConfig& config);

const std::vector<std::string>& command_names();

/// Runs one workflow step, writing its artifacts below `config.output`.
/// Throws DependencyError naming the first missing prerequisite file.
void run_command(std::string_view command, const RunConfig& config);

/// run_command() reporting failures as one diagnostic line on `err`.
/// Returns 0 on success, 2 for config/parameter errors, 3 for missing
/// prerequisites and 1 otherwise.
int dispatch(std::string_view command, const RunConfig& config, std::ostream& err);

/// Full command-line entry point: `skyglow <command> --config <path>
/// [--out <dir>] [--seed <n>]`.
int cli_main(int argc, char** argv);

} // namespace skyglow
