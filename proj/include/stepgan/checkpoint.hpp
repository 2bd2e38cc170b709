#pragma once

// Binary checkpoint container:
//
//   "STEPGANC"            8-byte magic
//   u32 format version    little-endian
//   u64 header length     followed by a UTF-8 JSON header describing the
//                         architecture, per-tensor layout, training config,
//                         seed, decision rule and config fingerprint
//   u64 payload length    followed by that many little-endian float64 values:
//                         per tensor value, Adam first moment, Adam second
//                         moment; then scaler min, max, median
//   32-byte SHA-256       of every preceding byte
//
// Save then load is bitwise lossless.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stepgan/data.hpp"
#include "stepgan/gan_model.hpp"
#include "stepgan/trainer.hpp"

namespace stepgan {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    GanModel model;
    std::optional<Scaler> scaler;
    TrainConfig train_config;
    std::string config_fingerprint;
    DecisionRule rule;
};

std::vector<std::uint8_t> serialize_checkpoint(const GanModel& model, const Scaler* scaler,
                                               const TrainConfig& train_config,
                                               const std::string& config_fingerprint,
                                               const DecisionRule& rule = {});
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const GanModel& model, const Scaler* scaler,
                     const TrainConfig& train_config, const std::string& config_fingerprint,
                     const DecisionRule& rule = {});
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace stepgan
