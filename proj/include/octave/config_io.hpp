#pragma once

#include <filesystem>
#include <string>

#include "octave/datamodel.hpp"

namespace octave {

// TrainConfig <-> JSON. Parsing is strict: unknown keys are rejected so that
// config typos fail loudly. Both directions are deterministic (keys sorted).
std::string config_to_json(const TrainConfig& cfg, int indent = -1);
TrainConfig config_from_json(const std::string& text);

TrainConfig load_config_file(const std::filesystem::path& path);
void save_config_file(const std::filesystem::path& path, const TrainConfig& cfg);

}  // namespace octave
