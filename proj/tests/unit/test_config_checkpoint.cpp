#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "stepgan/checkpoint.hpp"
#include "stepgan/config.hpp"
#include "stepgan/error.hpp"

using namespace stepgan;
namespace fs = std::filesystem;

namespace {

std::string config_error(const json& doc) {
    try {
        parse_run_config(doc);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

Architecture small_arch() {
    Architecture a;
    a.noise_dim = 3;
    a.data_dim = 4;
    a.generator_hidden = {5};
    a.discriminator_hidden = {6, 6};
    return a;
}

// A model whose parameters and Adam moments are all non-trivial.
GanModel stepped_model() {
    GanModel m(2, small_arch(), 21);
    TrainConfig c;
    c.n_generators = 2;
    c.alpha = 0.0;
    c.beta = 0.0;
    c.batch_size = 4;
    c.monitor_batch = 8;
    Matrix2 real(6, 4);
    RandomStream rng(1, "test.ckpt");
    for (double& v : real.values()) v = rng.uniform(-1.0, 1.0);
    Trainer t(m, c);
    t.discriminator_step(real);
    t.refresh_gate(TrainView(real));
    t.generator_step(0);
    t.generator_step(1);
    t.discriminator_step(real);
    return m;
}

}  // namespace

TEST_CASE("config defaults, validation and key checks") {
    const RunConfig def = parse_run_config(json::object());
    CHECK(def.train.n_generators == 5);
    CHECK(def.train.alpha == 0.9);
    CHECK(def.model.generator_hidden == std::vector<std::size_t>{50, 300});

    CHECK(config_error({{"trian", json::object()}}).find("unknown key 'trian'") != std::string::npos);
    CHECK(config_error({{"train", {{"alhpa", 0.5}}}}).find("unknown key 'train.alhpa'") != std::string::npos);
    CHECK(config_error({{"train", {{"alpha", "high"}}}}).find("train.alpha") != std::string::npos);
    CHECK(config_error({{"train", {{"batch_size", -4}}}}).find("train.batch_size") != std::string::npos);
    CHECK_FALSE(config_error({{"train", {{"alpha", 1.5}}}}).empty());
    CHECK_FALSE(config_error({{"data", {{"source", "parquet"}}}}).empty());
    CHECK_FALSE(config_error({{"data", {{"source", "csv"}}}}).empty());
    CHECK_FALSE(config_error({{"train", {{"generator_loss", "hinge"}}}}).empty());
    CHECK_FALSE(config_error({{"eval", {{"rule", "threshold"}, {"threshold", 1.0}}}}).empty());
    CHECK(config_error({{"train", {{"alpha", 1}}}}).empty());  // integer where a real is expected
}

TEST_CASE("resolved config round-trips") {
    json doc = {{"seed", 7}, {"train", {{"n_generators", 3}, {"generator_loss", "literal"}}}};
    const RunConfig c = parse_run_config(doc);
    const RunConfig again = parse_run_config(to_json(c));
    CHECK(to_json(again) == to_json(c));
    CHECK(fingerprint(again) == fingerprint(c));
    CHECK(again.train.generator_loss == GeneratorLoss::Literal);
    CHECK(again.train.seed == 7);
}

TEST_CASE("overrides, environment and fingerprint") {
    json doc = json::object();
    apply_override(doc, "train.alpha=0.75");
    apply_override(doc, "data.source=synth");
    apply_override(doc, "model.generator_hidden=[4,4]");
    const RunConfig c = parse_run_config(doc);
    CHECK(c.train.alpha == 0.75);
    CHECK(c.model.generator_hidden == std::vector<std::size_t>{4, 4});
    CHECK_THROWS_AS(apply_override(doc, "no_equals_sign"), ConfigError);
    CHECK_THROWS_AS(apply_override(doc, "train..alpha=1"), ConfigError);

    ::setenv("STEPGAN_SEED", "99", 1);
    ::setenv("STEPGAN_OUTPUT_DIR", "/tmp/elsewhere", 1);
    json env_doc = json::object();
    apply_environment(env_doc);
    const RunConfig e = parse_run_config(env_doc);
    CHECK(e.seed == 99);
    CHECK(e.output_dir == "/tmp/elsewhere");
    ::setenv("STEPGAN_SEED", "abc", 1);
    CHECK_THROWS_AS(apply_environment(env_doc), ConfigError);
    ::unsetenv("STEPGAN_SEED");
    ::unsetenv("STEPGAN_OUTPUT_DIR");

    RunConfig base = parse_run_config(json::object());
    const std::string fp = fingerprint(base);
    CHECK(fp.size() == 64);
    RunConfig moved = base;
    moved.output_dir = "somewhere/else";
    CHECK(fingerprint(moved) == fp);
    RunConfig changed = base;
    changed.train.beta = 0.85;
    CHECK(fingerprint(changed) != fp);
    RunConfig reseeded = base;
    reseeded.seed = 1;
    CHECK(fingerprint(reseeded) != fp);
}

TEST_CASE("checkpoint round trip is bitwise") {
    GanModel m = stepped_model();
    Scaler scaler{{-1.0, 0.0, 2.0, 3.0}, {1.0, 4.0, 2.0, 9.0}, {0.0, 1.0, 2.0, 5.0}};
    TrainConfig tc;
    tc.n_generators = 2;
    tc.seed = 21;
    const DecisionRule rule = DecisionRule::at_threshold(0.3);
    const auto bytes = serialize_checkpoint(m, &scaler, tc, "abc123", rule);
    const Checkpoint back = deserialize_checkpoint(bytes);
    CHECK(serialize_checkpoint(back.model, back.scaler ? &*back.scaler : nullptr, back.train_config,
                               back.config_fingerprint, back.rule) == bytes);
    REQUIRE(back.scaler.has_value());
    CHECK(*back.scaler == scaler);
    CHECK(back.config_fingerprint == "abc123");
    CHECK(back.rule.kind == DecisionRule::Kind::Threshold);
    CHECK(back.rule.threshold == 0.3);
    CHECK(back.model.architecture() == m.architecture());

    // Identical inference, and identical continued training once both noise
    // streams restart from the same point (stream positions are not stored).
    const Matrix2 x = Matrix2::from_rows({{0.1, 0.2, -0.3, 0.9}, {-1.0, 0.0, 0.5, 0.5}});
    CHECK(back.model.discriminate(x) == m.discriminate(x));
    GanModel a = m, b = back.model;
    a.noise() = NoisePrior(3, 5);
    b.noise() = NoisePrior(3, 5);
    TrainConfig open = tc;
    open.alpha = open.beta = 0.0;
    Trainer ta(a, open), tb(b, open);
    CHECK(ta.discriminator_step(x) == tb.discriminator_step(x));
    CHECK(serialize_checkpoint(a, nullptr, tc, "") == serialize_checkpoint(b, nullptr, tc, ""));

    const Checkpoint no_scaler = deserialize_checkpoint(serialize_checkpoint(m, nullptr, tc, "x"));
    CHECK_FALSE(no_scaler.scaler.has_value());
}

TEST_CASE("corrupted checkpoints are rejected") {
    GanModel m = stepped_model();
    TrainConfig tc;
    tc.n_generators = 2;
    const auto bytes = serialize_checkpoint(m, nullptr, tc, "fp");

    auto rejects = [](std::vector<std::uint8_t> b) {
        CHECK_THROWS_AS(deserialize_checkpoint(b), DataError);
    };
    for (std::size_t pos : {std::size_t{0}, std::size_t{9}, bytes.size() / 2, bytes.size() - 40, bytes.size() - 1}) {
        auto flipped = bytes;
        flipped[pos] ^= 0x01;
        rejects(flipped);
    }
    rejects(std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 1));
    rejects({});

    const std::string err = [&] {
        auto b = bytes;
        b[bytes.size() / 2] ^= 0x10;
        try {
            deserialize_checkpoint(b);
        } catch (const DataError& e) {
            return std::string(e.what());
        }
        return std::string();
    }();
    CHECK(err.find("integrity") != std::string::npos);
}

TEST_CASE("checkpoint files") {
    const fs::path dir = fs::temp_directory_path() / ("stepgan_ckpt_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    GanModel m = stepped_model();
    TrainConfig tc;
    tc.n_generators = 2;
    save_checkpoint(dir / "m.stepgan", m, nullptr, tc, "fp");
    const Checkpoint back = load_checkpoint(dir / "m.stepgan");
    CHECK(read_file(dir / "m.stepgan") == serialize_checkpoint(back.model, nullptr, back.train_config, "fp"));
    CHECK_THROWS_AS(load_checkpoint(dir / "absent.stepgan"), DataError);
    fs::remove_all(dir);
}
