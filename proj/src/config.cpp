#include "stepgan/config.hpp"

#include <cstdlib>
#include <fstream>

#include "stepgan/error.hpp"
#include "stepgan/hash.hpp"

namespace stepgan {

json to_json(const TrainConfig& c) {
    return {
        {"n_generators", c.n_generators},
        {"alpha", c.alpha},
        {"beta", c.beta},
        {"lr_discriminator", c.lr_discriminator},
        {"lr_generators", c.lr_generators},
        {"batch_size", c.batch_size},
        {"max_epochs", c.max_epochs},
        {"inner_disc_cap", c.inner_disc_cap},
        {"monitor_batch", c.monitor_batch},
        {"generator_loss", std::string(to_string(c.generator_loss))},
        {"gate_semantics", std::string(to_string(c.gate_semantics))},
        {"early_stop_patience", c.early_stop_patience},
        {"early_stop_tolerance", c.early_stop_tolerance},
    };
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    c.n_generators = j.at("n_generators").get<std::size_t>();
    c.alpha = j.at("alpha").get<double>();
    c.beta = j.at("beta").get<double>();
    c.lr_discriminator = j.at("lr_discriminator").get<double>();
    c.lr_generators = j.at("lr_generators").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.inner_disc_cap = j.at("inner_disc_cap").get<std::size_t>();
    c.monitor_batch = j.at("monitor_batch").get<std::size_t>();
    c.generator_loss = generator_loss_from_string(j.at("generator_loss").get<std::string>());
    c.gate_semantics = gate_semantics_from_string(j.at("gate_semantics").get<std::string>());
    c.early_stop_patience = j.at("early_stop_patience").get<std::size_t>();
    c.early_stop_tolerance = j.at("early_stop_tolerance").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

json to_json(const RunConfig& c) {
    json thresholds = json::array();
    for (const auto& [a, b] : c.sweep.thresholds) thresholds.push_back({a, b});
    json variants = json::array();
    for (auto v : c.sweep.loss_variants) variants.push_back(std::string(to_string(v)));
    return {
        {"seed", c.seed},
        {"output_dir", c.output_dir},
        {"data",
         {{"source", c.data.source},
          {"csv_paths", c.data.csv_paths},
          {"marker_map", c.data.marker_map},
          {"feature_count", c.data.feature_count},
          {"downsample", c.data.downsample},
          {"folds", c.data.folds}}},
        {"synth",
         {{"kind", std::string(to_string(c.synth.kind))},
          {"n_normal", c.synth.n_normal},
          {"anomaly_kind", std::string(to_string(c.synth.anomaly_kind))},
          {"n_anomaly", c.synth.n_anomaly}}},
        {"model",
         {{"noise_dim", c.model.noise_dim},
          {"generator_hidden", c.model.generator_hidden},
          {"discriminator_hidden", c.model.discriminator_hidden}}},
        {"train", to_json(c.train)},
        {"eval",
         {{"rule", c.rule.kind == DecisionRule::Kind::Argmax ? "argmax" : "threshold"},
          {"threshold", c.rule.threshold},
          {"every_epoch", c.eval_every_epoch}}},
        {"sweep",
         {{"generator_counts", c.sweep.generator_counts},
          {"thresholds", thresholds},
          {"heatmap", c.sweep.heatmap},
          {"heatmap_generators", c.sweep.heatmap_generators},
          {"heatmap_values", c.sweep.heatmap_values},
          {"loss_variants", variants}}},
        {"project", {{"n_generated", c.project.n_generated}, {"grid_resolution", c.project.grid_resolution}}},
    };
}

namespace {

bool same_kind(const json& reference, const json& value) {
    if (reference.is_number()) {
        if (reference.is_number_unsigned() || reference.is_number_integer()) {
            return value.is_number_unsigned() || (value.is_number_integer() && value.get<long long>() >= 0);
        }
        return value.is_number();
    }
    return reference.type() == value.type();
}

void check_keys(const json& reference, const json& doc, const std::string& path) {
    if (!doc.is_object()) throw ConfigError("config: '" + (path.empty() ? "<root>" : path) + "' must be an object");
    for (const auto& [key, value] : doc.items()) {
        const std::string full = path.empty() ? key : path + "." + key;
        if (!reference.contains(key)) throw ConfigError("config: unknown key '" + full + "'");
        const json& ref = reference.at(key);
        if (ref.is_object()) {
            check_keys(ref, value, full);
        } else if (!same_kind(ref, value)) {
            throw ConfigError("config: key '" + full + "' expects a " + std::string(ref.type_name()) +
                              (ref.is_number_unsigned() ? " (non-negative integer)" : "") + ", got " +
                              std::string(value.type_name()));
        }
    }
}

template <typename T>
T get(const json& j, const char* section, const char* key) {
    try {
        return j.at(section).at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config: bad value for '") + section + "." + key + "'");
    }
}

void check_threshold(double v, const std::string& what) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("config: " + what + " must lie in [0, 1]");
}

}  // namespace

RunConfig parse_run_config(const json& doc) {
    const json defaults = to_json(RunConfig{});
    check_keys(defaults, doc, "");
    json r = defaults;
    r.merge_patch(doc);

    RunConfig c;
    try {
        c.seed = r.at("seed").get<std::uint64_t>();
        c.output_dir = r.at("output_dir").get<std::string>();
        c.data.source = get<std::string>(r, "data", "source");
        c.data.csv_paths = get<std::vector<std::string>>(r, "data", "csv_paths");
        c.data.marker_map = get<std::string>(r, "data", "marker_map");
        c.data.feature_count = get<std::size_t>(r, "data", "feature_count");
        c.data.downsample = get<double>(r, "data", "downsample");
        c.data.folds = get<std::size_t>(r, "data", "folds");

        c.synth.kind = synth_kind_from_string(get<std::string>(r, "synth", "kind"));
        c.synth.n_normal = get<std::size_t>(r, "synth", "n_normal");
        c.synth.anomaly_kind = anomaly_kind_from_string(get<std::string>(r, "synth", "anomaly_kind"));
        c.synth.n_anomaly = get<std::size_t>(r, "synth", "n_anomaly");
        c.synth.seed = c.seed;

        c.model.noise_dim = get<std::size_t>(r, "model", "noise_dim");
        c.model.generator_hidden = get<std::vector<std::size_t>>(r, "model", "generator_hidden");
        c.model.discriminator_hidden = get<std::vector<std::size_t>>(r, "model", "discriminator_hidden");
        c.model.data_dim = c.data.source == "synth" ? 2 : c.data.feature_count;

        c.train = train_config_from_json(r.at("train"));
        c.train.seed = c.seed;

        const auto rule = get<std::string>(r, "eval", "rule");
        const auto tau = get<double>(r, "eval", "threshold");
        if (rule == "argmax") c.rule = DecisionRule::argmax();
        else if (rule == "threshold") c.rule = DecisionRule::at_threshold(tau);
        else throw ConfigError("config: eval.rule must be 'argmax' or 'threshold'");
        c.rule.threshold = tau;
        c.eval_every_epoch = get<bool>(r, "eval", "every_epoch");

        c.sweep.generator_counts = get<std::vector<std::size_t>>(r, "sweep", "generator_counts");
        c.sweep.thresholds.clear();
        for (const auto& pair : r.at("sweep").at("thresholds")) {
            if (!pair.is_array() || pair.size() != 2) throw ConfigError("config: sweep.thresholds entries are [alpha, beta]");
            c.sweep.thresholds.emplace_back(pair[0].get<double>(), pair[1].get<double>());
        }
        c.sweep.heatmap = get<bool>(r, "sweep", "heatmap");
        c.sweep.heatmap_generators = get<std::size_t>(r, "sweep", "heatmap_generators");
        c.sweep.heatmap_values = get<std::vector<double>>(r, "sweep", "heatmap_values");
        c.sweep.loss_variants.clear();
        for (const auto& v : r.at("sweep").at("loss_variants")) {
            c.sweep.loss_variants.push_back(generator_loss_from_string(v.get<std::string>()));
        }

        c.project.n_generated = get<std::size_t>(r, "project", "n_generated");
        c.project.grid_resolution = get<std::size_t>(r, "project", "grid_resolution");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    if (c.data.source != "synth" && c.data.source != "csv") throw ConfigError("config: data.source must be 'synth' or 'csv'");
    if (c.data.source == "csv" && c.data.csv_paths.empty()) throw ConfigError("config: data.csv_paths is empty");
    if (c.data.folds < 2) throw ConfigError("config: data.folds must be >= 2");
    if (!(c.data.downsample > 0.0 && c.data.downsample <= 1.0)) throw ConfigError("config: data.downsample must lie in (0, 1]");
    if (c.synth.n_normal == 0 || c.synth.n_anomaly == 0) throw ConfigError("config: synth sizes must be >= 1");
    validate(c.model);
    validate(c.train);
    for (auto n : c.sweep.generator_counts) {
        if (n == 0) throw ConfigError("config: sweep.generator_counts entries must be >= 1");
    }
    for (const auto& [a, b] : c.sweep.thresholds) {
        check_threshold(a, "sweep alpha");
        check_threshold(b, "sweep beta");
    }
    for (double v : c.sweep.heatmap_values) check_threshold(v, "sweep.heatmap_values entry");
    if (c.sweep.heatmap_generators == 0) throw ConfigError("config: sweep.heatmap_generators must be >= 1");
    if (c.project.grid_resolution == 0) throw ConfigError("config: project.grid_resolution must be >= 1");
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    try {
        return parse_run_config(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void apply_override(json& doc, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
    }
    const std::string key(assignment.substr(0, eq));
    const std::string raw(assignment.substr(eq + 1));
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;
    }
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
        if (!node->is_object()) *node = json::object();
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

void apply_environment(json& doc) {
    if (const char* out = std::getenv("STEPGAN_OUTPUT_DIR"); out != nullptr && *out != '\0') {
        doc["output_dir"] = out;
    }
    if (const char* seed = std::getenv("STEPGAN_SEED"); seed != nullptr && *seed != '\0') {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(seed, &end, 10);
        if (end == seed || *end != '\0') throw ConfigError("STEPGAN_SEED must be a non-negative integer");
        doc["seed"] = v;
    }
}

std::string fingerprint(const RunConfig& c) {
    // Where results go does not change what they are.
    json doc = to_json(c);
    doc.erase("output_dir");
    return sha256_hex(doc.dump());
}

}  // namespace stepgan
