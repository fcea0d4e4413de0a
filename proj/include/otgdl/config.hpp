#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "otgdl/agdl.hpp"
#include "otgdl/eval.hpp"
#include "otgdl/predictor.hpp"
#include "otgdl/synth.hpp"

namespace otgdl {

// Flat key-path configuration (`section.key value`, one per line, `#`
// comments). Unknown keys are errors; unspecified keys keep their defaults.
struct RunConfig {
    std::uint64_t seed = 1;
    int threads = 0;
    SynthConfig synth;
    PredictorConfig predictor;
    PretrainSampler sampler;
    PretrainConfig pretrain;
    TrainConfig agdl;
    int dict_K = 6;
    DictVariant variant = DictVariant::SoftbinMLP;
    ProbeConfig probe;
    std::vector<double> alpha_grid = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};

    // keeps the per-section seeds/threads coherent after overrides
    void finalize();
};

RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

// full key set in a fixed order, suitable for re-parsing and provenance
std::string config_to_text(const RunConfig& cfg);

} // namespace otgdl
