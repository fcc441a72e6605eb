#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "deepssm/model.hpp"

namespace deepssm {

struct Checkpoint {
  ModelParameters<double> params;
  ModelConfig config;
};

/// Serializes to a JSON document with keys `config`, `state_stack`,
/// `control_stack`, `obs_stack` and `noise`. Matrices are stored as
/// {"rows", "cols", "data"} with row-major data. Doubles round-trip exactly.
std::string checkpoint_to_string(const ModelParameters<double>& params, const ModelConfig& config);

/// Throws ParseError (with byte offset) on malformed text and ValidationError when
/// the content contradicts the model invariants.
Checkpoint checkpoint_from_string(std::string_view text);

void save_checkpoint(const ModelParameters<double>& params, const ModelConfig& config,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace deepssm
