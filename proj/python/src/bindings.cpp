#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "stepgan/checkpoint.hpp"
#include "stepgan/commands.hpp"
#include "stepgan/config.hpp"
#include "stepgan/error.hpp"
#include "stepgan/eval.hpp"
#include "stepgan/trainer.hpp"

namespace py = pybind11;
using namespace stepgan;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix2 to_matrix(const Array& a) {
    if (a.ndim() != 2) throw ShapeError("expected a 2-D array, got " + std::to_string(a.ndim()) + " dimensions");
    const auto rows = static_cast<std::size_t>(a.shape(0));
    const auto cols = static_cast<std::size_t>(a.shape(1));
    return Matrix2(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

py::array_t<double> to_array(const Matrix2& m) {
    py::array_t<double> out({m.rows(), m.cols()});
    std::copy(m.values().begin(), m.values().end(), out.mutable_data());
    return out;
}

std::vector<Label> to_labels(const std::vector<int>& attack_flags) {
    std::vector<Label> out;
    out.reserve(attack_flags.size());
    for (int f : attack_flags) out.push_back(f ? Label::Attack : Label::Normal);
    return out;
}

std::vector<int> from_labels(std::span<const Label> labels) {
    std::vector<int> out;
    out.reserve(labels.size());
    for (Label l : labels) out.push_back(l == Label::Attack);
    return out;
}

DecisionRule rule_from(std::optional<double> threshold) {
    return threshold ? DecisionRule::at_threshold(*threshold) : DecisionRule::argmax();
}

py::dict metrics_dict(const MetricsReport& r) {
    py::dict d;
    d["tp"] = r.cm.tp;
    d["tn"] = r.cm.tn;
    d["fp"] = r.cm.fp;
    d["fn"] = r.cm.fn;
    d["accuracy"] = r.accuracy;
    d["f_measure"] = r.f_measure;
    d["sensitivity"] = r.sensitivity;
    d["specificity"] = r.specificity;
    return d;
}

py::dict epoch_dict(const EpochStats& e) {
    py::dict d;
    d["epoch"] = e.epoch;
    d["disc_loss"] = e.disc_loss;
    d["generator_losses"] = e.generator_losses;
    d["se"] = e.se;
    d["sp"] = e.sp;
    d["disc_steps"] = e.disc_steps;
    d["gen_steps"] = e.gen_steps;
    d["accuracy"] = e.accuracy;
    return d;
}

py::dict dataset_dict(const Dataset& d) {
    py::dict out;
    out["features"] = to_array(d.features);
    out["attack"] = from_labels(d.labels);
    return out;
}

RunConfig config_from(const py::object& cfg) {
    if (cfg.is_none()) return parse_run_config(json::object());
    const std::string text = py::module_::import("json").attr("dumps")(cfg).cast<std::string>();
    return parse_run_config(json::parse(text));
}

}  // namespace

PYBIND11_MODULE(_stepgan, m) {
    m.doc() = "Multi-generator GAN anomaly detector";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    auto data_error = py::register_exception<DataError>(m, "DataError", base.ptr());
    py::register_exception<ShapeError>(m, "ShapeError", data_error.ptr());
    py::register_exception<NumericError>(m, "NumericError", base.ptr());
    py::register_exception<StateError>(m, "StateError", base.ptr());

    py::class_<Architecture>(m, "Architecture")
        .def(py::init<>())
        .def(py::init([](std::size_t noise_dim, std::size_t data_dim, std::vector<std::size_t> gen,
                         std::vector<std::size_t> disc) {
                 return Architecture{noise_dim, data_dim, std::move(gen), std::move(disc)};
             }),
             py::arg("noise_dim"), py::arg("data_dim"), py::arg("generator_hidden"), py::arg("discriminator_hidden"))
        .def_readwrite("noise_dim", &Architecture::noise_dim)
        .def_readwrite("data_dim", &Architecture::data_dim)
        .def_readwrite("generator_hidden", &Architecture::generator_hidden)
        .def_readwrite("discriminator_hidden", &Architecture::discriminator_hidden)
        .def("__eq__", [](const Architecture& a, const Architecture& b) { return a == b; });

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("n_generators", &TrainConfig::n_generators)
        .def_readwrite("alpha", &TrainConfig::alpha)
        .def_readwrite("beta", &TrainConfig::beta)
        .def_readwrite("lr_discriminator", &TrainConfig::lr_discriminator)
        .def_readwrite("lr_generators", &TrainConfig::lr_generators)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("max_epochs", &TrainConfig::max_epochs)
        .def_readwrite("inner_disc_cap", &TrainConfig::inner_disc_cap)
        .def_readwrite("monitor_batch", &TrainConfig::monitor_batch)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("early_stop_patience", &TrainConfig::early_stop_patience)
        .def_readwrite("early_stop_tolerance", &TrainConfig::early_stop_tolerance)
        .def_property(
            "generator_loss", [](const TrainConfig& c) { return std::string(to_string(c.generator_loss)); },
            [](TrainConfig& c, const std::string& s) { c.generator_loss = generator_loss_from_string(s); })
        .def_property(
            "gate_semantics", [](const TrainConfig& c) { return std::string(to_string(c.gate_semantics)); },
            [](TrainConfig& c, const std::string& s) { c.gate_semantics = gate_semantics_from_string(s); });

    py::class_<GanModel>(m, "GanModel")
        .def(py::init<std::size_t, Architecture, std::uint64_t>(), py::arg("n_generators"),
             py::arg("architecture") = Architecture{}, py::arg("seed") = 0)
        .def_property_readonly("n_generators", &GanModel::n_generators)
        .def_property_readonly("real_class", &GanModel::real_class)
        .def_property_readonly("architecture", &GanModel::architecture)
        .def("sample_noise", [](GanModel& g, std::size_t batch) { return to_array(g.sample_noise(batch)); })
        .def("generate",
             [](const GanModel& g, std::size_t i, const Array& z) { return to_array(g.generate(i, to_matrix(z))); },
             py::arg("generator"), py::arg("noise"))
        .def("sample",
             [](GanModel& g, std::size_t i, std::size_t count) {
                 return to_array(g.generate(i, g.sample_noise(count)));
             },
             py::arg("generator"), py::arg("count"))
        .def("discriminate", [](const GanModel& g, const Array& x) { return to_array(g.discriminate(to_matrix(x))); })
        .def(
            "classify",
            [](const GanModel& g, const Array& x, std::optional<double> threshold) {
                const auto labels = classify_probabilities(g.discriminate(to_matrix(x)), rule_from(threshold));
                return from_labels(labels);
            },
            py::arg("features"), py::arg("threshold") = py::none(),
            "1 for attack, 0 for normal. Without a threshold the argmax rule is used.")
        .def(
            "save",
            [](const GanModel& g, const std::filesystem::path& path, const TrainConfig& tc) {
                save_checkpoint(path, g, nullptr, tc, "");
            },
            py::arg("path"), py::arg("train_config") = TrainConfig{});

    m.def(
        "load_model", [](const std::filesystem::path& path) { return load_checkpoint(path).model; }, py::arg("path"));

    m.def(
        "train",
        [](GanModel& model, const Array& normal_rows, const TrainConfig& config,
           const std::optional<std::function<void(py::dict)>>& on_epoch) {
            EpochObserver observer;
            if (on_epoch) {
                observer = [&](const GanModel&, const EpochStats& e) -> std::optional<double> {
                    (*on_epoch)(epoch_dict(e));
                    return std::nullopt;
                };
            }
            const TrainResult r = train(model, TrainView(to_matrix(normal_rows)), config, observer);
            py::list history;
            for (const auto& e : r.history) history.append(epoch_dict(e));
            py::dict out;
            out["history"] = history;
            out["stopped_early"] = r.stopped_early;
            return out;
        },
        py::arg("model"), py::arg("normal_rows"), py::arg("config"), py::arg("on_epoch") = py::none(),
        "Trains on normal rows only and returns the per-epoch history.");

    m.def(
        "evaluate",
        [](const GanModel& model, const Array& features, const std::vector<int>& attack,
           std::optional<double> threshold) {
            const auto labels = to_labels(attack);
            return metrics_dict(evaluate_rows(model, to_matrix(features), labels, nullptr, rule_from(threshold)));
        },
        py::arg("model"), py::arg("features"), py::arg("attack"), py::arg("threshold") = py::none());

    m.def(
        "metrics",
        [](std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn) {
            return metrics_dict(metrics(ConfusionMatrix{tp, tn, fp, fn}));
        },
        py::arg("tp"), py::arg("tn"), py::arg("fp"), py::arg("fn"));

    m.def(
        "synth",
        [](const std::string& kind, std::size_t n_normal, const std::string& anomaly_kind, std::size_t n_anomaly,
           std::uint64_t seed) {
            const SynthData s = synth_make(
                {synth_kind_from_string(kind), n_normal, anomaly_kind_from_string(anomaly_kind), n_anomaly, seed});
            py::dict out;
            out["normal"] = to_array(s.normal.features);
            out["anomalies"] = to_array(s.anomalies.features);
            out["mode_centers"] = s.mode_centers;
            out["sigma"] = s.sigma;
            return out;
        },
        py::arg("kind") = "gaussian_ring_8", py::arg("n_normal") = 2000, py::arg("anomaly_kind") = "uniform_box",
        py::arg("n_anomaly") = 2000, py::arg("seed") = 0);

    m.def(
        "mode_coverage",
        [](const Array& generated, const Array& normal, std::size_t resolution,
           const std::vector<Point2>& mode_centers) {
            const CoverageReport r =
                mode_coverage(to_matrix(generated), to_matrix(normal), resolution, BoundingBox::unit(), mode_centers);
            py::dict d;
            d["grid_resolution"] = r.grid_resolution;
            d["complementary_cells"] = r.complementary_cells;
            d["covered_cells"] = r.covered_cells;
            d["coverage_ratio"] = r.coverage_ratio;
            d["mode_nearest_distance"] = r.mode_nearest_distance;
            return d;
        },
        py::arg("generated"), py::arg("normal"), py::arg("grid_resolution") = 20,
        py::arg("mode_centers") = std::vector<Point2>{});

    m.def(
        "pca_project",
        [](const Array& data) {
            const Projection p = pca_project(to_matrix(data));
            py::dict d;
            d["points"] = to_array(p.points);
            d["mean"] = p.mean;
            d["components"] = to_array(Matrix2(2, p.mean.size(), p.components));
            d["variance"] = std::vector<double>{p.variance[0], p.variance[1]};
            d["degenerate"] = p.degenerate;
            return d;
        },
        py::arg("data"));

    m.def("convergence_epoch", [](const std::vector<double>& acc) { return convergence_report(acc); },
          py::arg("accuracy_per_epoch"));

    m.def(
        "load_csv",
        [](const std::filesystem::path& path) {
            py::dict out = dataset_dict(load_csv(path));
            return out;
        },
        py::arg("path"));

    m.def(
        "resolve_config",
        [](const py::object& cfg) {
            const std::string text = to_json(config_from(cfg)).dump();
            return py::module_::import("json").attr("loads")(text);
        },
        py::arg("config") = py::none(), "Validates a config mapping and fills in every default.");

    m.def(
        "run_training",
        [](const py::object& cfg, const std::filesystem::path& output_dir, bool overwrite) {
            RunConfig c = config_from(cfg);
            c.output_dir = output_dir.string();
            const TrainOutcome o = [&] {
                py::gil_scoped_release release;
                return cmd_train(c, overwrite);
            }();
            py::list folds;
            for (const auto& f : o.folds) {
                py::dict d = metrics_dict(f.report);
                d["epochs"] = f.epochs;
                d["stopped_early"] = f.stopped_early;
                d["gen_steps"] = f.gen_steps;
                folds.append(d);
            }
            py::dict out;
            out["folds"] = folds;
            out["accuracy_mean"] = o.accuracy.mean;
            out["f_measure_mean"] = o.f_measure.mean;
            out["fingerprint"] = o.fingerprint;
            return out;
        },
        py::arg("config"), py::arg("output_dir"), py::arg("overwrite") = false,
        "Full cross-validated training run writing the same artifacts as the command-line tool.");

    m.def(
        "evaluate_checkpoint",
        [](const std::filesystem::path& checkpoint, const std::filesystem::path& data, std::optional<double> threshold) {
            EvaluateRequest r;
            r.checkpoint = checkpoint;
            r.data = data;
            if (threshold) r.rule = DecisionRule::at_threshold(*threshold);
            return metrics_dict(cmd_evaluate(r));
        },
        py::arg("checkpoint"), py::arg("data"), py::arg("threshold") = py::none());
}
