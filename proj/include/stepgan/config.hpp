#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "stepgan/data.hpp"
#include "stepgan/gan_model.hpp"
#include "stepgan/trainer.hpp"

namespace stepgan {

using json = nlohmann::json;

struct DataConfig {
    std::string source = "synth";  // "synth" or "csv"
    // One file per subset; subsets are trained and evaluated independently.
    std::vector<std::string> csv_paths;
    std::string marker_map;  // empty: built-in table
    std::size_t feature_count = 128;
    double downsample = 1.0;
    std::size_t folds = 10;
};

struct SweepConfig {
    std::vector<std::size_t> generator_counts{1, 2, 3, 5, 10, 15, 20};
    std::vector<std::pair<double, double>> thresholds{{0.95, 0.95}, {0.9, 0.9}, {0.8, 0.8}, {0.7, 0.7}, {0.6, 0.6}};
    bool heatmap = true;
    std::size_t heatmap_generators = 10;
    std::vector<double> heatmap_values{0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0};
    std::vector<GeneratorLoss> loss_variants{GeneratorLoss::NonSaturating, GeneratorLoss::Literal};
};

struct ProjectConfig {
    std::size_t n_generated = 200;
    std::size_t grid_resolution = 20;
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::string output_dir = "runs/default";
    DataConfig data;
    SynthSpec synth;
    Architecture model;  // data_dim is derived from the data source
    TrainConfig train;
    DecisionRule rule;
    bool eval_every_epoch = false;
    SweepConfig sweep;
    ProjectConfig project;
};

json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const json& j);

// Fully resolved configuration as a document (every key present).
json to_json(const RunConfig& c);

// Validates `doc` against the known key set (unknown keys and wrong types are
// ConfigErrors naming the key path), fills defaults, checks ranges.
RunConfig parse_run_config(const json& doc);
RunConfig load_run_config(const std::string& path);

// Applies "a.b.c=value" to a document; value is parsed as JSON, falling back
// to a plain string.
void apply_override(json& doc, std::string_view assignment);

// Environment overrides: STEPGAN_OUTPUT_DIR, STEPGAN_SEED.
void apply_environment(json& doc);

// SHA-256 of the canonical resolved document, output_dir excluded.
std::string fingerprint(const RunConfig& c);

}  // namespace stepgan
