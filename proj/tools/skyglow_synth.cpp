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

// Writes the demonstration dataset: observations, census table, an
// unlabeled prediction file and a config that ties them together.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "skyglow/dataset.hpp"
#include "skyglow/synthetic.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
    CLI::App app{"Synthetic observation dataset generator"};
    std::string out_dir = "synthetic";
    skyglow::SyntheticConfig config;
    std::size_t predict_rows = 50;
    app.add_option("--out", out_dir, "Directory for the generated files");
    app.add_option("--rows", config.rows, "Observation rows")->check(CLI::PositiveNumber);
    app.add_option("--seed", config.seed, "Generator seed");
    app.add_option("--predict-rows", predict_rows, "Rows in the unlabeled prediction file");
    CLI11_PARSE(app, argc, argv);

    try {
        fs::create_directories(out_dir);
        const auto data = skyglow::generate_synthetic(config);
        {
            std::ofstream out(fs::path(out_dir) / "observations.csv", std::ios::binary);
            skyglow::write_observations(out, data.observations);
        }
        {
            std::ofstream out(fs::path(out_dir) / "population.csv", std::ios::binary);
            skyglow::write_population(out, data.population);
        }

        skyglow::SyntheticConfig unseen = config;
        unseen.rows = std::max<std::size_t>(predict_rows, 1);
        unseen.seed = config.seed + 1;
        auto fresh = skyglow::generate_synthetic(unseen).observations;
        for (auto& rec : fresh) {
            rec.id = "new-" + rec.id;
            rec.limiting_magnitude.reset();
        }
        // One row from a country absent from the census table.
        fresh.back().country = "Atlantis";
        {
            std::ofstream out(fs::path(out_dir) / "predict.csv", std::ios::binary);
            skyglow::write_observations(out, fresh);
        }

        std::ofstream conf(fs::path(out_dir) / "skyglow.conf", std::ios::binary);
        conf << "[paths]\n"
             << "observations = observations.csv\n"
             << "population = population.csv\n"
             << "predict_input = predict.csv\n"
             << "output = run\n";
    } catch (const std::exception& e) {
        std::cerr << "skyglow_synth: " << e.what() << '\n';
        return 1;
    }
    std::cout << "wrote " << config.rows << " observations to " << out_dir << '\n';
    return 0;
}
