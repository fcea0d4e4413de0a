#pragma once

#include <filesystem>

#include "otgdl/dictionary.hpp"
#include "otgdl/predictor.hpp"

namespace otgdl {

// Binary checkpoint container:
//   "OTGDLCKPT" | u32 version | kind string | config snapshot text |
//   named arrays (name, shape, row-major f64, little-endian).
// Round-trips are bit-exact. Rejects unknown versions (VersionMismatch) and
// truncated or inconsistent files (CorruptCheckpoint).
struct Checkpoint {
    std::string kind;
    std::string config_text; // flat `key value` lines, includes model.* fields
    std::vector<std::pair<std::string, Tensor>> arrays;
};

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

void save_predictor(const PredictorParams& params, const std::string& run_config_text,
                    const std::filesystem::path& path);
PredictorParams load_predictor(const std::filesystem::path& path);

void save_dictionary(const DictionaryModel& model, const std::string& run_config_text,
                     const std::filesystem::path& path);
DictionaryModel load_dictionary(const std::filesystem::path& path);

} // namespace otgdl
