#pragma once

#include <filesystem>
#include <string>

#include "glearn/pipeline.hpp"

namespace glearn::pipeline {

// Flat JSON object whose keys mirror the TrainConfig and DataRecipe field
// names. Missing keys keep their defaults; unknown keys are rejected.
// Parse errors report line and column.
ExperimentConfig config_from_string(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_string(const ExperimentConfig& config);

// Serialized report. Wall-clock timings are omitted unless requested so that
// reruns with the same config produce byte-identical files.
std::string report_to_string(const RunReport& report, bool include_timing = false);
std::string timing_to_string(const RunReport& report);

}  // namespace glearn::pipeline
