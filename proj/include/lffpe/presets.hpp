#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lffpe/encoder_spec.hpp"

namespace lffpe {

/// A named encoder configuration and where its numbers come from.
struct Preset {
  std::string name;
  EncoderSpec spec;
  std::string provenance;
};

/// Every preset, in a fixed order; names are unique.
const std::vector<Preset> &all_presets();

/// Throws std::invalid_argument naming the available presets when absent.
const Preset &find_preset(std::string_view name);

} // namespace lffpe
