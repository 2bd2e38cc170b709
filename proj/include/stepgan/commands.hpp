#pragma once

// The five CLI commands as library calls. Each writes its artifacts under an
// output directory; the file layouts are described in docs/output_formats.md.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stepgan/config.hpp"
#include "stepgan/eval.hpp"

namespace stepgan {

inline constexpr int kOutputSchemaVersion = 1;

using ProgressSink = std::function<void(const std::string&)>;

struct FoldOutcome {
    std::optional<int> subset_id;
    MetricsReport report;
    std::size_t epochs = 0;
    bool stopped_early = false;
    std::size_t gen_steps = 0;
};

struct StatSummary {
    double mean = 0.0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

// Mean plus five-number summary (linear-interpolated quartiles).
StatSummary summarize(std::vector<double> values);

struct TrainOutcome {
    std::vector<FoldOutcome> folds;
    StatSummary accuracy;
    StatSummary f_measure;
    std::string fingerprint;
};

// Outputs refuse to land in a non-empty directory unless overwrite is set, in
// which case the directory is cleared first.
void prepare_output_dir(const std::filesystem::path& dir, bool overwrite);

// K-fold training and evaluation. With an output directory the config,
// per-fold checkpoints/epoch logs/test rows and metric files are written.
TrainOutcome run_folds(const RunConfig& config, const std::optional<std::filesystem::path>& output_dir,
                       const ProgressSink& progress = {});

TrainOutcome cmd_train(const RunConfig& config, bool overwrite, const ProgressSink& progress = {});

struct EvaluateRequest {
    std::filesystem::path checkpoint;
    std::filesystem::path data;
    std::string marker_map;  // empty: built-in table
    std::optional<DecisionRule> rule;  // default: the rule stored in the checkpoint
};

MetricsReport cmd_evaluate(const EvaluateRequest& request);

json to_json(const MetricsReport& m);

struct SweepCell {
    GeneratorLoss loss = GeneratorLoss::NonSaturating;
    std::size_t n_generators = 0;
    double alpha = 0.0;
    double beta = 0.0;
    bool heatmap = false;
    std::optional<double> accuracy;  // empty when the cell failed
    std::optional<double> f_measure;
    std::string error;
};

// Grid of (generator count x threshold pair) cells per loss variant, plus
// the alpha x beta heatmap at a fixed generator count. Failing cells are
// recorded and the sweep continues.
std::vector<SweepCell> cmd_sweep(const RunConfig& config, bool overwrite, const ProgressSink& progress = {});

// Writes the configured synthetic normals and anomalies as one CSV.
void cmd_synth(const RunConfig& config, const std::filesystem::path& csv_path);

struct ProjectRequest {
    std::filesystem::path checkpoint;
    std::filesystem::path data;
    std::string marker_map;
    std::size_t n_generated = 200;
    std::size_t grid_resolution = 20;
    std::filesystem::path output_dir;
    bool overwrite = false;
};

struct ProjectOutcome {
    Projection projection;
    CoverageReport coverage;
    std::size_t normal_rows = 0;
    std::size_t attack_rows = 0;
    std::size_t generated_rows = 0;
};

// Projects normal, attack and n_generated samples per generator to 2-D and
// writes projection.csv plus a coverage record computed on the projected points.
ProjectOutcome cmd_project(const ProjectRequest& request);

std::string format_double(double v);

}  // namespace stepgan
