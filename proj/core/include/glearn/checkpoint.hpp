#pragma once

#include <filesystem>
#include <string>

#include "glearn/nn.hpp"

namespace glearn::nn {

inline constexpr int kCheckpointFormatVersion = 1;

// JSON document {format_version, layer_dims, activation, weights, biases,
// rng_seed}; weights are row-major nested arrays [layer][out][in]. Doubles
// are written in shortest round-trip form, so save -> load -> save is
// byte-identical.
std::string checkpoint_to_string(const ModelParams& params);
ModelParams checkpoint_from_string(const std::string& text);

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

// Hash of the serialized checkpoint; identifies a frozen teacher.
std::string fingerprint(const ModelParams& params);

}  // namespace glearn::nn
