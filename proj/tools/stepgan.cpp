// stepgan: train, evaluate, sweep, synth and project from the command line.
//
// Exit status: 0 success, 1 usage or configuration error, 2 data error,
// 3 numeric failure.

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stepgan/commands.hpp"
#include "stepgan/config.hpp"
#include "stepgan/error.hpp"

namespace {

using stepgan::json;

struct RunFlags {
    std::string config;
    std::vector<std::string> overrides;
    std::string output;
    std::optional<std::uint64_t> seed;
    bool overwrite = false;
    bool quiet = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("-c,--config", f.config, "Run configuration (JSON)");
    cmd->add_option("--set", f.overrides, "Override a config key, e.g. --set train.alpha=0.8")->take_all();
    cmd->add_option("-o,--output", f.output, "Output directory (overrides output_dir)");
    cmd->add_option("--seed", f.seed, "Run seed (overrides seed)");
    cmd->add_flag("--overwrite", f.overwrite, "Replace a non-empty output directory");
    cmd->add_flag("-q,--quiet", f.quiet, "No progress lines on stderr");
}

stepgan::RunConfig resolve(const RunFlags& f) {
    json doc = json::object();
    if (!f.config.empty()) {
        std::ifstream in(f.config);
        if (!in) throw stepgan::ConfigError("cannot open config file " + f.config);
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw stepgan::ConfigError(f.config + ": " + e.what());
        }
    }
    stepgan::apply_environment(doc);
    for (const auto& o : f.overrides) stepgan::apply_override(doc, o);
    if (!f.output.empty()) doc["output_dir"] = f.output;
    if (f.seed) doc["seed"] = *f.seed;
    return stepgan::parse_run_config(doc);
}

stepgan::ProgressSink progress_for(const RunFlags& f) {
    if (f.quiet) return {};
    return [](const std::string& line) { std::cerr << line << '\n'; };
}

std::optional<stepgan::DecisionRule> rule_from(const std::string& rule, double threshold) {
    if (rule.empty()) return std::nullopt;
    if (rule == "argmax") return stepgan::DecisionRule::argmax();
    if (rule == "threshold") return stepgan::DecisionRule::at_threshold(threshold);
    throw stepgan::ConfigError("--rule must be 'argmax' or 'threshold'");
}

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-generator gated GAN anomaly detector"};
    app.require_subcommand(1);

    RunFlags train_flags, sweep_flags, synth_flags;
    auto* train = app.add_subcommand("train", "K-fold training and evaluation");
    add_run_flags(train, train_flags);
    auto* sweep = app.add_subcommand("sweep", "Generator-count x threshold grid and heatmap");
    add_run_flags(sweep, sweep_flags);
    auto* synth = app.add_subcommand("synth", "Export the configured synthetic dataset as CSV");
    add_run_flags(synth, synth_flags);
    std::string synth_csv;
    synth->add_option("--csv", synth_csv, "CSV file to write")->required();

    stepgan::EvaluateRequest eval_req;
    std::string eval_ckpt, eval_data, eval_rule, eval_out;
    double eval_threshold = 0.5;
    auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a labelled CSV");
    evaluate->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
    evaluate->add_option("--data", eval_data, "Labelled CSV")->required();
    evaluate->add_option("--marker-map", eval_req.marker_map, "Marker map JSON");
    evaluate->add_option("--rule", eval_rule, "argmax or threshold (default: the checkpoint's rule)");
    evaluate->add_option("--threshold", eval_threshold, "Threshold for --rule threshold");
    evaluate->add_option("-o,--output", eval_out, "Also write the report to this JSON file");

    stepgan::ProjectRequest proj_req;
    std::string proj_ckpt, proj_data, proj_out;
    auto* project = app.add_subcommand("project", "PCA projection of data and generated samples");
    project->add_option("--checkpoint", proj_ckpt, "Checkpoint file")->required();
    project->add_option("--data", proj_data, "Labelled CSV")->required();
    project->add_option("--marker-map", proj_req.marker_map, "Marker map JSON");
    project->add_option("--n-generated", proj_req.n_generated, "Samples per generator");
    project->add_option("--grid-resolution", proj_req.grid_resolution, "Coverage grid resolution");
    project->add_option("-o,--output", proj_out, "Output directory")->required();
    project->add_flag("--overwrite", proj_req.overwrite, "Replace a non-empty output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*train) {
            const auto config = resolve(train_flags);
            const auto out = stepgan::cmd_train(config, train_flags.overwrite, progress_for(train_flags));
            std::cout << "accuracy mean " << stepgan::format_double(out.accuracy.mean) << ", F mean "
                      << stepgan::format_double(out.f_measure.mean) << " over " << out.folds.size()
                      << " folds -> " << config.output_dir << '\n';
        } else if (*sweep) {
            const auto config = resolve(sweep_flags);
            const auto cells = stepgan::cmd_sweep(config, sweep_flags.overwrite, progress_for(sweep_flags));
            const auto failed = std::count_if(cells.begin(), cells.end(), [](const auto& c) { return !c.accuracy; });
            std::cout << cells.size() << " cells (" << failed << " failed) -> " << config.output_dir << '\n';
        } else if (*synth) {
            stepgan::cmd_synth(resolve(synth_flags), synth_csv);
            std::cout << "wrote " << synth_csv << '\n';
        } else if (*evaluate) {
            eval_req.checkpoint = eval_ckpt;
            eval_req.data = eval_data;
            eval_req.rule = rule_from(eval_rule, eval_threshold);
            const auto report = stepgan::cmd_evaluate(eval_req);
            const std::string text = stepgan::to_json(report).dump();
            if (!eval_out.empty()) {
                std::ofstream out(eval_out);
                if (!out) throw stepgan::DataError("cannot write " + eval_out);
                out << text << '\n';
            }
            std::cout << text << '\n';
        } else if (*project) {
            proj_req.checkpoint = proj_ckpt;
            proj_req.data = proj_data;
            proj_req.output_dir = proj_out;
            const auto out = stepgan::cmd_project(proj_req);
            std::cout << out.normal_rows + out.attack_rows + out.generated_rows << " projected rows -> " << proj_out
                      << '\n';
        }
    } catch (const stepgan::Error& e) {
        std::cerr << "stepgan: error: " << one_line(e.what()) << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "stepgan: error: " << one_line(e.what()) << '\n';
        return 1;
    }
    return 0;
}
