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

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "skyglow/cli.hpp"
#include "skyglow/csv.hpp"
#include "skyglow/error.hpp"
#include "skyglow/validation.hpp"

namespace skyglow {

namespace fs = std::filesystem;

void RunConfig::apply_seed(std::uint64_t seed) {
    cv_seed = seed;
    gbdt.seed = seed;
    forest.seed = seed;
    modeling.seed = seed;
    ensemble_seed = seed;
}

void RunConfig::validate() const {
    modeling.validate();
    gbdt.validate();
    forest.validate();
    check_fold_count(cv_k);
    if (ensemble_steps.empty()) {
        throw ParameterError("ensemble step schedule is empty");
    }
    for (double step : ensemble_steps) {
        if (!(step > 0.0 && step <= 1.0)) {
            throw ParameterError("ensemble step sizes must lie in (0, 1]");
        }
    }
    if (models.empty()) {
        throw ConfigError("models: at least one model is required");
    }
    std::set<std::string> known;
    for (const auto& spec : default_model_specs()) {
        known.insert(spec.id);
    }
    std::set<std::string> seen;
    for (const auto& id : models) {
        if (!known.contains(id)) {
            throw ConfigError("models: unknown model '" + id + "'");
        }
        if (!seen.insert(id).second) {
            throw ConfigError("models: '" + id + "' listed twice");
        }
    }
    ObservationRecord probe;
    for (const auto& field : trend_fields) {
        numeric_field(probe, field);
    }
    if (observations.empty()) {
        throw ConfigError("paths.observations is required");
    }
}

std::vector<ModelSpec> RunConfig::model_specs() const {
    std::vector<ModelSpec> out;
    const auto all = default_model_specs(gbdt, forest);
    for (const auto& id : models) {
        for (const auto& spec : all) {
            if (spec.id == id) {
                out.push_back(spec);
            }
        }
    }
    return out;
}

namespace {

struct Entry {
    std::function<void(RunConfig&, std::string_view, std::string_view, const fs::path&)> set;
    std::function<std::string(const RunConfig&)> get;
};

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
    throw ConfigError("config key '" + std::string(key) + "': expected " + std::string(expected) + ", got '" +
                      std::string(value) + "'");
}

template <typename T>
T parse_unsigned(std::string_view key, std::string_view value) {
    T out{};
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        bad_value(key, value, "a nonnegative integer");
    }
    return out;
}

int parse_int(std::string_view key, std::string_view value) {
    int out = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        bad_value(key, value, "an integer");
    }
    return out;
}

double parse_real(std::string_view key, std::string_view value) {
    const auto out = csv::parse_double(value);
    if (!out) {
        bad_value(key, value, "a finite number");
    }
    return *out;
}

bool parse_bool(std::string_view key, std::string_view value) {
    if (value == "true" || value == "yes" || value == "1") {
        return true;
    }
    if (value == "false" || value == "no" || value == "0") {
        return false;
    }
    bad_value(key, value, "true or false");
}

std::vector<std::string> parse_list(std::string_view value) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= value.size()) {
        const std::size_t comma = value.find(',', start);
        const std::size_t end = comma == std::string_view::npos ? value.size() : comma;
        const auto item = csv::trim(value.substr(start, end - start));
        if (!item.empty()) {
            out.emplace_back(item);
        }
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        out += (i == 0 ? "" : ", ") + items[i];
    }
    return out;
}

fs::path resolve(const fs::path& base, std::string_view value) {
    if (value.empty()) {
        return {};
    }
    const fs::path p{std::string(value)};
    return (p.is_absolute() ? p : base / p).lexically_normal();
}

Entry path_entry(fs::path RunConfig::*member) {
    return {[member](RunConfig& c, std::string_view, std::string_view v, const fs::path& base) { c.*member = resolve(base, v); },
            [member](const RunConfig& c) { return (c.*member).string(); }};
}

template <typename T>
Entry unsigned_entry(std::function<T&(RunConfig&)> field) {
    return {[field](RunConfig& c, std::string_view key, std::string_view v, const fs::path&) {
                field(c) = parse_unsigned<T>(key, v);
            },
            [field](const RunConfig& c) { return std::to_string(field(const_cast<RunConfig&>(c))); }};
}

Entry real_entry(std::function<double&(RunConfig&)> field) {
    return {[field](RunConfig& c, std::string_view key, std::string_view v, const fs::path&) { field(c) = parse_real(key, v); },
            [field](const RunConfig& c) { return csv::format_double(field(const_cast<RunConfig&>(c))); }};
}

Entry bool_entry(std::function<bool&(RunConfig&)> field) {
    return {[field](RunConfig& c, std::string_view key, std::string_view v, const fs::path&) { field(c) = parse_bool(key, v); },
            [field](const RunConfig& c) { return std::string(field(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
}

Entry list_entry(std::function<std::vector<std::string>&(RunConfig&)> field) {
    return {[field](RunConfig& c, std::string_view, std::string_view v, const fs::path&) { field(c) = parse_list(v); },
            [field](const RunConfig& c) { return join(field(const_cast<RunConfig&>(c))); }};
}

const std::map<std::string, Entry>& entries() {
    static const std::map<std::string, Entry> table = [] {
        std::map<std::string, Entry> t;
        t["paths.observations"] = path_entry(&RunConfig::observations);
        t["paths.population"] = path_entry(&RunConfig::population);
        t["paths.output"] = path_entry(&RunConfig::output);
        t["paths.predict_input"] = path_entry(&RunConfig::predict_input);
        t["ingest.mode"] = {[](RunConfig& c, std::string_view key, std::string_view v, const fs::path&) {
                                if (v != "strict" && v != "lenient") {
                                    bad_value(key, v, "strict or lenient");
                                }
                                c.strictness = v == "strict" ? Strictness::strict : Strictness::lenient;
                            },
                            [](const RunConfig& c) {
                                return std::string(c.strictness == Strictness::strict ? "strict" : "lenient");
                            }};

        t["features.clip_low"] = real_entry([](RunConfig& c) -> double& { return c.modeling.features.clip_low; });
        t["features.clip_high"] = real_entry([](RunConfig& c) -> double& { return c.modeling.features.clip_high; });
        t["features.indicator_threshold"] =
            real_entry([](RunConfig& c) -> double& { return c.modeling.features.indicator_threshold; });
        t["features.knn_k"] =
            unsigned_entry<std::size_t>([](RunConfig& c) -> std::size_t& { return c.modeling.features.knn_k; });
        t["features.numeric"] = list_entry(
            [](RunConfig& c) -> std::vector<std::string>& { return c.modeling.features.numeric; });
        t["features.categorical"] = list_entry(
            [](RunConfig& c) -> std::vector<std::string>& { return c.modeling.features.categorical; });
        t["features.svd_rank"] =
            unsigned_entry<std::size_t>([](RunConfig& c) -> std::size_t& { return c.modeling.svd_rank; });
        t["features.vocabulary_cap"] =
            unsigned_entry<std::size_t>([](RunConfig& c) -> std::size_t& { return c.modeling.vocabulary_cap; });
        t["features.text_fields"] =
            list_entry([](RunConfig& c) -> std::vector<std::string>& { return c.modeling.text_fields; });
        t["features.seed"] =
            unsigned_entry<std::uint64_t>([](RunConfig& c) -> std::uint64_t& { return c.modeling.seed; });

        t["gbdt.rounds"] = unsigned_entry<std::size_t>([](RunConfig& c) -> std::size_t& { return c.gbdt.rounds; });
        t["gbdt.learning_rate"] = real_entry([](RunConfig& c) -> double& { return c.gbdt.learning_rate; });
        t["gbdt.max_leaves"] =
            unsigned_entry<std::size_t>([](RunConfig& c) -> std::size_t& { return c.gbdt.max_leaves; });
        t["gbdt.min_samples_leaf"] =
            unsigned_entry<std::size_t>([](RunConfig& c) -> std::size_t& { return c.gbdt.min_samples_leaf; });
        t["gbdt.max_bins"] = unsigned_entry<std::size_t>([](RunConfig& c) -> std::size_t& { return c.gbdt.max_bins; });
        t["gbdt.l2"] = real_entry([](RunConfig& c) -> double& { return c.gbdt.l2; });
        t["gbdt.early_stopping_patience"] =
            unsigned_entry<std::size_t>([](RunConfig& c) -> std::size_t& { return c.gbdt.early_stopping_patience; });
        t["gbdt.seed"] = unsigned_entry<std::uint64_t>([](RunConfig& c) -> std::uint64_t& { return c.gbdt.seed; });

        t["forest.trees"] = unsigned_entry<std::size_t>([](RunConfig& c) -> std::size_t& { return c.forest.trees; });
        t["forest.min_samples_leaf"] =
            unsigned_entry<std::size_t>([](RunConfig& c) -> std::size_t& { return c.forest.min_samples_leaf; });
        t["forest.max_bins"] =
            unsigned_entry<std::size_t>([](RunConfig& c) -> std::size_t& { return c.forest.max_bins; });
        t["forest.seed"] = unsigned_entry<std::uint64_t>([](RunConfig& c) -> std::uint64_t& { return c.forest.seed; });

        t["models"] = list_entry([](RunConfig& c) -> std::vector<std::string>& { return c.models; });

        t["cv.k"] = {[](RunConfig& c, std::string_view key, std::string_view v, const fs::path&) { c.cv_k = parse_int(key, v); },
                     [](const RunConfig& c) { return std::to_string(c.cv_k); }};
        t["cv.seed"] = unsigned_entry<std::uint64_t>([](RunConfig& c) -> std::uint64_t& { return c.cv_seed; });
        t["cv.stratified"] = bool_entry([](RunConfig& c) -> bool& { return c.cv_stratified; });

        t["ensemble.steps"] = {[](RunConfig& c, std::string_view key, std::string_view v, const fs::path&) {
                                   c.ensemble_steps.clear();
                                   for (const auto& item : parse_list(v)) {
                                       c.ensemble_steps.push_back(parse_real(key, item));
                                   }
                               },
                               [](const RunConfig& c) {
                                   std::vector<std::string> items;
                                   for (double s : c.ensemble_steps) {
                                       items.push_back(csv::format_double(s));
                                   }
                                   return join(items);
                               }};
        t["ensemble.seed"] =
            unsigned_entry<std::uint64_t>([](RunConfig& c) -> std::uint64_t& { return c.ensemble_seed; });

        t["report.charts"] = bool_entry([](RunConfig& c) -> bool& { return c.report_charts; });
        t["report.trend_fields"] = list_entry([](RunConfig& c) -> std::vector<std::string>& { return c.trend_fields; });
        return t;
    }();
    return table;
}

} // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> out;
        for (const auto& [key, entry] : entries()) {
            out.push_back(key);
        }
        return out;
    }();
    return keys;
}

RunConfig parse_config(std::istream& in, const fs::path& base_dir) {
    RunConfig config;
    std::set<std::string> seen;
    std::string section;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = csv::trim(raw);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section header");
            }
            section = std::string(csv::trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        std::string key(csv::trim(line.substr(0, eq)));
        if (!section.empty()) {
            key = section + "." + key;
        }
        const auto value = csv::trim(line.substr(eq + 1));
        const auto it = entries().find(key);
        if (it == entries().end()) {
            throw ConfigError("unknown config key '" + key + "'");
        }
        if (!seen.insert(key).second) {
            throw ConfigError("config key '" + key + "' set twice");
        }
        it->second.set(config, key, value, base_dir);
    }
    return config;
}

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file '" + path.string() + "'");
    }
    RunConfig config = parse_config(in, path.parent_path());
    config.validate();
    if (!fs::exists(config.observations)) {
        throw ConfigError("paths.observations: file '" + config.observations.string() + "' does not exist");
    }
    if (!config.population.empty() && !fs::exists(config.population)) {
        throw ConfigError("paths.population: file '" + config.population.string() + "' does not exist");
    }
    if (!config.predict_input.empty() && !fs::exists(config.predict_input)) {
        throw ConfigError("paths.predict_input: file '" + config.predict_input.string() + "' does not exist");
    }
    return config;
}

void write_config(std::ostream& out, const RunConfig& config) {
    out << "# effective configuration\n";
    for (const auto& [key, entry] : entries()) {
        if (key == "paths.output") {
            continue;
        }
        out << key << " = " << entry.get(config) << '\n';
    }
}

} // namespace skyglow
