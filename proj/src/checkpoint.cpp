#include "stepgan/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "stepgan/config.hpp"
#include "stepgan/error.hpp"
#include "stepgan/hash.hpp"

namespace stepgan {

namespace {

constexpr char kMagic[8] = {'S', 'T', 'E', 'P', 'G', 'A', 'N', 'C'};

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    std::vector<std::uint8_t>& buffer() noexcept { return out_; }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) throw DataError("checkpoint: truncated file");
    }
    std::span<const std::uint8_t> bytes(std::size_t n) {
        need(n);
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::uint32_t u32() {
        auto s = bytes(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(s[i]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        auto s = bytes(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(s[i]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::size_t position() const noexcept { return pos_; }

private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

json describe_net(DenseNet& net) {
    json layers = json::array();
    for (const auto& layer : net.layers()) {
        layers.push_back({{"in", layer.in_dim()},
                          {"out", layer.out_dim()},
                          {"activation", std::string(to_string(layer.activation()))}});
    }
    json tensors = json::array();
    for (const auto& p : net.parameters()) {
        tensors.push_back({{"name", p.name}, {"size", p.value.size()}, {"adam_steps", p.adam->step_count}});
    }
    return {{"input_dim", net.input_dim()}, {"layers", layers}, {"tensors", tensors}};
}

void write_net(Writer& w, DenseNet& net) {
    for (const auto& p : net.parameters()) {
        for (double v : p.value) w.f64(v);
        for (double v : p.adam->first_moment) w.f64(v);
        for (double v : p.adam->second_moment) w.f64(v);
    }
}

void read_net(Reader& r, DenseNet& net, const json& desc, const std::string& what) {
    const json& layers = desc.at("layers");
    if (layers.size() != net.layers().size()) throw DataError("checkpoint: " + what + " layer count mismatch");
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const auto& layer = net.layers()[k];
        if (layers[k].at("in").get<std::size_t>() != layer.in_dim() ||
            layers[k].at("out").get<std::size_t>() != layer.out_dim() ||
            activation_from_string(layers[k].at("activation").get<std::string>()) != layer.activation()) {
            throw DataError("checkpoint: " + what + " layer " + std::to_string(k) + " does not match its architecture");
        }
    }
    auto params = net.parameters();
    const json& tensors = desc.at("tensors");
    if (tensors.size() != params.size()) throw DataError("checkpoint: " + what + " tensor count mismatch");
    for (std::size_t t = 0; t < params.size(); ++t) {
        auto& p = params[t];
        if (tensors[t].at("name").get<std::string>() != p.name ||
            tensors[t].at("size").get<std::size_t>() != p.value.size()) {
            throw DataError("checkpoint: " + what + " tensor " + p.name + " has the wrong layout");
        }
        for (double& v : p.value) v = r.f64();
        for (double& v : p.adam->first_moment) v = r.f64();
        for (double& v : p.adam->second_moment) v = r.f64();
        p.adam->step_count = tensors[t].at("adam_steps").get<std::uint64_t>();
    }
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const GanModel& model, const Scaler* scaler,
                                               const TrainConfig& train_config,
                                               const std::string& config_fingerprint,
                                               const DecisionRule& rule) {
    GanModel copy = model;
    const auto& arch = copy.architecture();

    json header;
    header["n_generators"] = copy.n_generators();
    header["noise_dim"] = arch.noise_dim;
    header["data_dim"] = arch.data_dim;
    header["generator_hidden"] = arch.generator_hidden;
    header["discriminator_hidden"] = arch.discriminator_hidden;
    header["seed"] = copy.seed();
    header["train_config"] = to_json(train_config);
    header["train_config"]["seed"] = train_config.seed;
    header["config_fingerprint"] = config_fingerprint;
    header["rule"] = rule.kind == DecisionRule::Kind::Argmax ? "argmax" : "threshold";
    header["threshold"] = rule.threshold;
    json gens = json::array();
    for (std::size_t i = 0; i < copy.n_generators(); ++i) gens.push_back(describe_net(copy.generator(i)));
    header["generators"] = gens;
    header["discriminator"] = describe_net(copy.discriminator());
    header["scaler_features"] = scaler != nullptr ? json(scaler->features()) : json(nullptr);

    Writer payload;
    for (std::size_t i = 0; i < copy.n_generators(); ++i) write_net(payload, copy.generator(i));
    write_net(payload, copy.discriminator());
    if (scaler != nullptr) {
        for (const auto* v : {&scaler->min, &scaler->max, &scaler->median}) {
            for (double x : *v) payload.f64(x);
        }
    }

    const std::string head = header.dump();
    Writer w;
    w.bytes(kMagic, sizeof kMagic);
    w.u32(kCheckpointVersion);
    w.u64(head.size());
    w.bytes(head.data(), head.size());
    w.u64(payload.buffer().size() / 8);
    w.bytes(payload.buffer().data(), payload.buffer().size());
    const auto digest = sha256(w.buffer());
    w.bytes(digest.data(), digest.size());
    return std::move(w.buffer());
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < sizeof kMagic + 4 + 32 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
        throw DataError("checkpoint: not a checkpoint file (bad magic)");
    }
    const auto body = bytes.first(bytes.size() - 32);
    const auto stored = bytes.last(32);
    const auto digest = sha256(body);
    if (!std::equal(digest.begin(), digest.end(), stored.begin())) {
        throw DataError("checkpoint: integrity check failed (file is corrupt or was modified)");
    }

    Reader r(body);
    r.bytes(sizeof kMagic);
    const auto version = r.u32();
    if (version != kCheckpointVersion) {
        throw DataError("checkpoint: unsupported format version " + std::to_string(version));
    }
    const auto head_len = r.u64();
    const auto head = r.bytes(head_len);
    json header;
    try {
        header = json::parse(head.begin(), head.end());
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint: unreadable header: ") + e.what());
    }
    const auto payload_count = r.u64();
    if (payload_count > (body.size() - r.position()) / 8 || body.size() - r.position() != payload_count * 8) {
        throw DataError("checkpoint: payload length does not match the file size");
    }

    try {
        Architecture arch;
        arch.noise_dim = header.at("noise_dim").get<std::size_t>();
        arch.data_dim = header.at("data_dim").get<std::size_t>();
        arch.generator_hidden = header.at("generator_hidden").get<std::vector<std::size_t>>();
        arch.discriminator_hidden = header.at("discriminator_hidden").get<std::vector<std::size_t>>();
        const auto n = header.at("n_generators").get<std::size_t>();
        const auto seed = header.at("seed").get<std::uint64_t>();

        Checkpoint cp{GanModel(n, arch, seed), std::nullopt, train_config_from_json(header.at("train_config")),
                      header.at("config_fingerprint").get<std::string>(), DecisionRule{}};
        if (header.at("rule").get<std::string>() == "threshold") {
            cp.rule = DecisionRule::at_threshold(header.at("threshold").get<double>());
        }
        const json& gens = header.at("generators");
        if (gens.size() != n) throw DataError("checkpoint: generator count mismatch");
        for (std::size_t i = 0; i < n; ++i) {
            read_net(r, cp.model.generator(i), gens[i], "generator " + std::to_string(i));
        }
        read_net(r, cp.model.discriminator(), header.at("discriminator"), "discriminator");
        if (!header.at("scaler_features").is_null()) {
            const auto f = header.at("scaler_features").get<std::size_t>();
            Scaler s;
            for (auto* v : {&s.min, &s.max, &s.median}) {
                v->resize(f);
                for (double& x : *v) x = r.f64();
            }
            cp.scaler = std::move(s);
        }
        if (r.position() != body.size()) throw DataError("checkpoint: trailing payload values");
        return cp;
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint: malformed header: ") + e.what());
    } catch (const ConfigError& e) {
        throw DataError(std::string("checkpoint: invalid stored configuration: ") + e.what());
    }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed: " + path.string());
}

void save_checkpoint(const std::filesystem::path& path, const GanModel& model, const Scaler* scaler,
                     const TrainConfig& train_config, const std::string& config_fingerprint,
                     const DecisionRule& rule) {
    write_file(path, serialize_checkpoint(model, scaler, train_config, config_fingerprint, rule));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return deserialize_checkpoint(read_file(path));
}

}  // namespace stepgan
