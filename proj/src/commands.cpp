#include "stepgan/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include "stepgan/checkpoint.hpp"
#include "stepgan/error.hpp"
#include "stepgan/hash.hpp"
#include "stepgan/rng.hpp"

namespace stepgan {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

StatSummary summarize(std::vector<double> values) {
    if (values.empty()) throw DataError("summarize: no values");
    std::sort(values.begin(), values.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(values.size() - 1, lo + 1);
        return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
    };
    StatSummary s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    s.min = values.front();
    s.q1 = quantile(0.25);
    s.median = quantile(0.5);
    s.q3 = quantile(0.75);
    s.max = values.back();
    return s;
}

namespace {

json summary_json(const StatSummary& s) {
    return {{"mean", s.mean}, {"min", s.min}, {"q1", s.q1}, {"median", s.median}, {"q3", s.q3}, {"max", s.max}};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("write failed: " + path.string());
}

struct Source {
    std::optional<int> subset_id;
    Dataset data;
};

CsvSchema schema_for(std::size_t feature_count, const std::string& marker_map) {
    CsvSchema schema;
    schema.feature_count = feature_count;
    if (!marker_map.empty()) schema.markers = MarkerMap::load(marker_map);
    return schema;
}

std::vector<Source> load_sources(const RunConfig& c) {
    std::vector<Source> out;
    if (c.data.source == "synth") {
        SynthData sd = synth_make(c.synth);
        out.push_back({std::nullopt, combine(sd.normal, sd.anomalies)});
    } else {
        const CsvSchema schema = schema_for(c.data.feature_count, c.data.marker_map);
        for (std::size_t i = 0; i < c.data.csv_paths.size(); ++i) {
            Dataset d = load_csv(c.data.csv_paths[i], schema);
            if (c.data.csv_paths.size() > 1) d.subset_id = static_cast<int>(i + 1);
            out.push_back({d.subset_id, downsample(d, c.data.downsample, c.seed)});
        }
    }
    return out;
}

std::string fold_dir_name(const std::optional<int>& subset, std::size_t fold) {
    char buf[32];
    if (subset) std::snprintf(buf, sizeof buf, "subset_%02d_fold_%02zu", *subset, fold);
    else std::snprintf(buf, sizeof buf, "fold_%02zu", fold);
    return buf;
}

json epoch_record(const EpochStats& s, const std::optional<int>& subset, std::size_t fold,
                  const std::string& fp) {
    return {{"schema_version", kOutputSchemaVersion},
            {"config_fingerprint", fp},
            {"subset", subset ? json(*subset) : json(nullptr)},
            {"fold", fold},
            {"epoch", s.epoch},
            {"disc_loss", s.disc_loss},
            {"generator_losses", s.generator_losses},
            {"se", s.se},
            {"sp", s.sp},
            {"disc_steps", s.disc_steps},
            {"gen_steps", s.gen_steps},
            {"wall_time_s", s.wall_time_s},
            {"accuracy", s.accuracy ? json(*s.accuracy) : json(nullptr)}};
}

json fold_json(const FoldOutcome& f) {
    json j = to_json(f.report);
    j["subset"] = f.subset_id ? json(*f.subset_id) : json(nullptr);
    j["epochs"] = f.epochs;
    j["stopped_early"] = f.stopped_early;
    j["gen_steps"] = f.gen_steps;
    return j;
}

std::string metrics_csv(const std::vector<FoldOutcome>& folds) {
    std::string out =
        "subset,fold,tp,tn,fp,fn,accuracy,f_measure,sensitivity,specificity,epochs,stopped_early,gen_steps,"
        "config_fingerprint\n";
    for (const auto& f : folds) {
        const auto& m = f.report;
        out += (f.subset_id ? std::to_string(*f.subset_id) : std::string()) + ',' +
               std::to_string(m.fold_index.value_or(0)) + ',' + std::to_string(m.cm.tp) + ',' +
               std::to_string(m.cm.tn) + ',' + std::to_string(m.cm.fp) + ',' + std::to_string(m.cm.fn) + ',' +
               format_double(m.accuracy) + ',' + format_double(m.f_measure) + ',' + format_double(m.sensitivity) +
               ',' + format_double(m.specificity) + ',' + std::to_string(f.epochs) + ',' +
               (f.stopped_early ? "true" : "false") + ',' + std::to_string(f.gen_steps) + ',' +
               m.config_fingerprint + '\n';
    }
    return out;
}

}  // namespace

json to_json(const MetricsReport& m) {
    return {{"schema_version", kOutputSchemaVersion},
            {"tp", m.cm.tp},
            {"tn", m.cm.tn},
            {"fp", m.cm.fp},
            {"fn", m.cm.fn},
            {"accuracy", m.accuracy},
            {"f_measure", m.f_measure},
            {"sensitivity", m.sensitivity},
            {"specificity", m.specificity},
            {"fold", m.fold_index ? json(*m.fold_index) : json(nullptr)},
            {"config_fingerprint", m.config_fingerprint}};
}

void prepare_output_dir(const fs::path& dir, bool overwrite) {
    std::error_code ec;
    if (fs::exists(dir, ec)) {
        if (!fs::is_directory(dir, ec)) throw ConfigError("output path " + dir.string() + " is not a directory");
        if (!fs::is_empty(dir, ec)) {
            if (!overwrite) {
                throw ConfigError("output directory " + dir.string() + " is not empty (pass --overwrite to replace it)");
            }
            fs::remove_all(dir, ec);
            if (ec) throw ConfigError("cannot clear " + dir.string() + ": " + ec.message());
        }
    }
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create " + dir.string() + ": " + ec.message());
}

TrainOutcome run_folds(const RunConfig& config, const std::optional<fs::path>& output_dir,
                       const ProgressSink& progress) {
    TrainOutcome outcome;
    outcome.fingerprint = fingerprint(config);
    const std::string& fp = outcome.fingerprint;

    if (output_dir) {
        json doc = to_json(config);
        doc["config_fingerprint"] = fp;
        doc["schema_version"] = kOutputSchemaVersion;
        write_text(*output_dir / "config.json", doc.dump(2) + "\n");
    }

    for (const auto& source : load_sources(config)) {
        const Dataset& data = source.data;
        const auto splits = kfold_split(data, config.data.folds, config.seed);
        for (const auto& split : splits) {
            const std::string name = fold_dir_name(source.subset_id, split.fold_index);
            const std::uint64_t fold_seed = substream_seed(config.seed, "fold." + name);
            const Dataset train_rows = data.select(split.train_rows);
            const Dataset test_rows = data.select(split.test_rows);

            std::optional<Scaler> scaler;
            if (config.data.source == "csv") scaler = Scaler::fit(train_rows.features);
            const Scaler* sp = scaler ? &*scaler : nullptr;
            const TrainView view(sp ? sp->transform(train_rows.features) : train_rows.features);

            TrainConfig tc = config.train;
            tc.seed = fold_seed;
            GanModel model(tc.n_generators, config.model, fold_seed);

            std::optional<fs::path> fold_dir;
            std::ofstream epoch_log;
            if (output_dir) {
                fold_dir = *output_dir / name;
                fs::create_directories(*fold_dir);
                write_csv(*fold_dir / "test.csv", test_rows);
                epoch_log.open(*fold_dir / "epochs.jsonl", std::ios::binary | std::ios::trunc);
                if (!epoch_log) throw DataError("cannot write " + (*fold_dir / "epochs.jsonl").string());
            }

            const EpochObserver observer = [&](const GanModel& m, const EpochStats& s) -> std::optional<double> {
                std::optional<double> acc;
                if (config.eval_every_epoch) {
                    acc = evaluate_rows(m, test_rows.features, test_rows.labels, sp, config.rule).accuracy;
                }
                if (epoch_log.is_open()) {
                    EpochStats copy = s;
                    copy.accuracy = acc;
                    epoch_log << epoch_record(copy, source.subset_id, split.fold_index, fp).dump() << '\n';
                    epoch_log.flush();
                }
                return acc;
            };

            TrainResult result;
            try {
                result = train(model, view, tc, observer);
            } catch (const NumericError& e) {
                if (fold_dir) save_checkpoint(*fold_dir / "diagnostic.stepgan", model, sp, tc, fp, config.rule);
                throw NumericError(name + ": " + e.what() +
                                   (fold_dir ? " (diagnostic checkpoint written to " +
                                                   (*fold_dir / "diagnostic.stepgan").string() + ")"
                                             : std::string()));
            }

            FoldOutcome fo;
            fo.subset_id = source.subset_id;
            fo.report = evaluate_rows(model, test_rows.features, test_rows.labels, sp, config.rule);
            fo.report.fold_index = split.fold_index;
            fo.report.config_fingerprint = fp;
            fo.epochs = result.history.size();
            fo.stopped_early = result.stopped_early;
            for (const auto& s : result.history) fo.gen_steps += s.gen_steps;

            if (fold_dir) {
                save_checkpoint(*fold_dir / "checkpoint.stepgan", model, sp, tc, fp, config.rule);
                write_text(*fold_dir / "metrics.json", fold_json(fo).dump(2) + "\n");
            }
            if (progress) {
                progress(name + ": accuracy " + format_double(fo.report.accuracy) + ", F " +
                         format_double(fo.report.f_measure) + ", epochs " + std::to_string(fo.epochs));
            }
            outcome.folds.push_back(std::move(fo));
        }
    }

    std::vector<double> acc, f;
    for (const auto& fo : outcome.folds) {
        acc.push_back(fo.report.accuracy);
        f.push_back(fo.report.f_measure);
    }
    outcome.accuracy = summarize(acc);
    outcome.f_measure = summarize(f);

    if (output_dir) {
        write_text(*output_dir / "metrics.csv", metrics_csv(outcome.folds));
        std::string lines;
        for (const auto& fo : outcome.folds) lines += fold_json(fo).dump() + "\n";
        write_text(*output_dir / "metrics.jsonl", lines);

        json per_subset = json::array();
        std::vector<std::optional<int>> subsets;
        for (const auto& fo : outcome.folds) {
            if (std::find(subsets.begin(), subsets.end(), fo.subset_id) == subsets.end()) subsets.push_back(fo.subset_id);
        }
        double se = 0.0, spec = 0.0;
        for (const auto& fo : outcome.folds) {
            se += fo.report.sensitivity;
            spec += fo.report.specificity;
        }
        for (const auto& sid : subsets) {
            std::vector<double> a, ff;
            for (const auto& fo : outcome.folds) {
                if (fo.subset_id != sid) continue;
                a.push_back(fo.report.accuracy);
                ff.push_back(fo.report.f_measure);
            }
            per_subset.push_back({{"subset", sid ? json(*sid) : json(nullptr)},
                                  {"folds", a.size()},
                                  {"accuracy", summary_json(summarize(a))},
                                  {"f_measure", summary_json(summarize(ff))}});
        }
        const double count = static_cast<double>(outcome.folds.size());
        const json summary = {{"schema_version", kOutputSchemaVersion},
                              {"config_fingerprint", fp},
                              {"folds", outcome.folds.size()},
                              {"downsample", config.data.downsample},
                              {"accuracy", summary_json(outcome.accuracy)},
                              {"f_measure", summary_json(outcome.f_measure)},
                              {"sensitivity_mean", se / count},
                              {"specificity_mean", spec / count},
                              {"per_subset", per_subset}};
        write_text(*output_dir / "summary.json", summary.dump(2) + "\n");
    }
    return outcome;
}

TrainOutcome cmd_train(const RunConfig& config, bool overwrite, const ProgressSink& progress) {
    // Load everything that can fail cheaply before touching the output directory.
    (void)load_sources(config);
    const fs::path dir = config.output_dir;
    prepare_output_dir(dir, overwrite);
    return run_folds(config, dir, progress);
}

MetricsReport cmd_evaluate(const EvaluateRequest& request) {
    Checkpoint cp = load_checkpoint(request.checkpoint);
    const Dataset data = load_csv(request.data, schema_for(0, request.marker_map));
    const std::size_t want = cp.model.architecture().data_dim;
    if (data.features.cols() != want) {
        throw ShapeError("dimension mismatch: checkpoint expects " + std::to_string(want) + " features, " +
                         request.data.string() + " has " + std::to_string(data.features.cols()));
    }
    MetricsReport m = evaluate_rows(cp.model, data.features, data.labels, cp.scaler ? &*cp.scaler : nullptr,
                                    request.rule.value_or(cp.rule));
    m.config_fingerprint = cp.config_fingerprint;
    return m;
}

std::vector<SweepCell> cmd_sweep(const RunConfig& config, bool overwrite, const ProgressSink& progress) {
    (void)load_sources(config);
    const fs::path dir = config.output_dir;
    prepare_output_dir(dir, overwrite);
    {
        json doc = to_json(config);
        doc["config_fingerprint"] = fingerprint(config);
        doc["schema_version"] = kOutputSchemaVersion;
        write_text(dir / "config.json", doc.dump(2) + "\n");
    }

    std::vector<SweepCell> cells;
    std::ofstream cell_log(dir / "cells.jsonl", std::ios::binary | std::ios::trunc);
    if (!cell_log) throw DataError("cannot write " + (dir / "cells.jsonl").string());

    auto run_cell = [&](GeneratorLoss loss, std::size_t n, double a, double b, bool heatmap) {
        SweepCell cell{loss, n, a, b, heatmap, std::nullopt, std::nullopt, {}};
        RunConfig c = config;
        c.train.n_generators = n;
        c.train.alpha = a;
        c.train.beta = b;
        c.train.generator_loss = loss;
        try {
            const auto out = run_folds(c, std::nullopt);
            cell.accuracy = out.accuracy.mean;
            cell.f_measure = out.f_measure.mean;
        } catch (const Error& e) {
            cell.error = e.what();
        }
        json rec = {{"schema_version", kOutputSchemaVersion},
                    {"config_fingerprint", fingerprint(c)},
                    {"generator_loss", std::string(to_string(loss))},
                    {"grid", heatmap ? "heatmap" : "table"},
                    {"n_generators", n},
                    {"alpha", a},
                    {"beta", b},
                    {"downsample", c.data.downsample},
                    {"accuracy", cell.accuracy ? json(*cell.accuracy) : json(nullptr)},
                    {"f_measure", cell.f_measure ? json(*cell.f_measure) : json(nullptr)},
                    {"status", cell.error.empty() ? "ok" : "failed"},
                    {"error", cell.error}};
        cell_log << rec.dump() << '\n';
        cell_log.flush();
        if (progress) {
            progress(std::string(to_string(loss)) + " n=" + std::to_string(n) + " alpha=" + format_double(a) +
                     " beta=" + format_double(b) + ": " +
                     (cell.accuracy ? "accuracy " + format_double(*cell.accuracy) : "failed: " + cell.error));
        }
        cells.push_back(cell);
        return cell;
    };
    auto value = [](const SweepCell& c) { return c.accuracy ? format_double(*c.accuracy) : std::string(); };

    for (GeneratorLoss loss : config.sweep.loss_variants) {
        const std::string variant(to_string(loss));
        std::string table = "n_generators";
        for (const auto& [a, b] : config.sweep.thresholds) table += ",a" + format_double(a) + "_b" + format_double(b);
        table += '\n';
        for (std::size_t n : config.sweep.generator_counts) {
            table += std::to_string(n);
            for (const auto& [a, b] : config.sweep.thresholds) table += ',' + value(run_cell(loss, n, a, b, false));
            table += '\n';
        }
        write_text(dir / ("table_" + variant + ".csv"), table);

        if (config.sweep.heatmap) {
            std::string heat = "alpha";
            for (double b : config.sweep.heatmap_values) heat += ",beta_" + format_double(b);
            heat += '\n';
            for (double a : config.sweep.heatmap_values) {
                heat += format_double(a);
                for (double b : config.sweep.heatmap_values) {
                    heat += ',' + value(run_cell(loss, config.sweep.heatmap_generators, a, b, true));
                }
                heat += '\n';
            }
            write_text(dir / ("heatmap_" + variant + ".csv"), heat);
        }
    }
    return cells;
}

void cmd_synth(const RunConfig& config, const fs::path& csv_path) {
    const SynthData sd = synth_make(config.synth);
    if (csv_path.has_parent_path()) fs::create_directories(csv_path.parent_path());
    write_csv(csv_path, combine(sd.normal, sd.anomalies));
}

ProjectOutcome cmd_project(const ProjectRequest& request) {
    Checkpoint cp = load_checkpoint(request.checkpoint);
    const Dataset data = load_csv(request.data, schema_for(0, request.marker_map));
    const auto& arch = cp.model.architecture();
    if (data.features.cols() != arch.data_dim) {
        throw ShapeError("dimension mismatch: checkpoint expects " + std::to_string(arch.data_dim) + " features, " +
                         request.data.string() + " has " + std::to_string(data.features.cols()));
    }
    prepare_output_dir(request.output_dir, request.overwrite);

    Dataset scaled = data;
    if (cp.scaler) scaled.features = cp.scaler->transform(data.features);

    ProjectOutcome out;
    Matrix2 stacked = scaled.rows_with(Label::Normal);
    out.normal_rows = stacked.rows();
    const Matrix2 attacks = scaled.rows_with(Label::Attack);
    out.attack_rows = attacks.rows();
    stacked.append_rows(attacks);
    NoisePrior prior(arch.noise_dim, substream_seed(cp.model.seed(), "project"));
    if (request.n_generated > 0) {
        for (std::size_t i = 0; i < cp.model.n_generators(); ++i) {
            stacked.append_rows(cp.model.generate(i, prior.sample(request.n_generated)));
        }
    }
    out.generated_rows = stacked.rows() - out.normal_rows - out.attack_rows;
    out.projection = pca_project(stacked);

    const auto& pts = out.projection.points;
    std::string csv = "component_1,component_2,source\n";
    for (std::size_t r = 0; r < pts.rows(); ++r) {
        const char* source = r < out.normal_rows                     ? "normal"
                             : r < out.normal_rows + out.attack_rows ? "attack"
                                                                     : "generated";
        csv += format_double(pts(r, 0)) + ',' + format_double(pts(r, 1)) + ',' + source + '\n';
    }
    write_text(request.output_dir / "projection.csv", csv);

    json meta = {{"schema_version", kOutputSchemaVersion},
                 {"config_fingerprint", cp.config_fingerprint},
                 {"normal_rows", out.normal_rows},
                 {"attack_rows", out.attack_rows},
                 {"generated_rows", out.generated_rows},
                 {"n_generated_per_generator", request.n_generated},
                 {"explained_variance", {out.projection.variance[0], out.projection.variance[1]}},
                 {"degenerate", out.projection.degenerate},
                 {"coverage", nullptr}};
    if (out.generated_rows > 0 && out.normal_rows > 0) {
        std::vector<std::size_t> normal_idx(out.normal_rows), gen_idx(out.generated_rows);
        std::iota(normal_idx.begin(), normal_idx.end(), std::size_t{0});
        std::iota(gen_idx.begin(), gen_idx.end(), out.normal_rows + out.attack_rows);
        const Matrix2 pn = pts.select_rows(normal_idx);
        const Matrix2 pg = pts.select_rows(gen_idx);
        const BoundingBox box = BoundingBox::enclosing(pn, pg);
        if (box.x_max > box.x_min && box.y_max > box.y_min) {
            out.coverage = mode_coverage(pg, pn, request.grid_resolution, box);
            meta["coverage"] = {{"grid_resolution", out.coverage.grid_resolution},
                                {"complementary_cells", out.coverage.complementary_cells},
                                {"covered_cells", out.coverage.covered_cells},
                                {"coverage_ratio", out.coverage.coverage_ratio},
                                {"bounding_box", {{"x_min", box.x_min}, {"x_max", box.x_max}, {"y_min", box.y_min}, {"y_max", box.y_max}}}};
        }
    }
    write_text(request.output_dir / "projection.json", meta.dump(2) + "\n");
    return out;
}

}  // namespace stepgan
