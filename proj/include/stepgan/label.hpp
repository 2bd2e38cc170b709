#pragma once

#include <cstdint>
#include <string_view>

namespace stepgan {

// Normal data (No Events, Natural Events) is the positive class.
enum class Label : std::uint8_t { Normal, Attack };

constexpr std::string_view to_string(Label l) { return l == Label::Normal ? "normal" : "attack"; }

}  // namespace stepgan
