#pragma once

#include <filesystem>

#include "otgdl/graph_io.hpp"
#include "otgdl/rng.hpp"

namespace otgdl {

// Synthetic subjects-by-contrasts corpus: a template geometry on a curved 2-D
// patch, per-contrast Gaussian activation patterns, and per-subject geometric
// perturbations yielding native-geometry graphs plus their common-geometry
// projections.
struct SynthConfig {
    int n_template = 100;
    int n_contrasts = 3;
    int n_subjects = 20;
    double jitter_sigma = 0.03;       // fraction of template diameter
    double resample_frac = 0.10;      // nodes dropped and re-duplicated
    double feature_noise_sigma = 0.05;
    int knn_k = 6;
    double train_frac = 0.70;
    double val_frac = 0.15;
    double test_frac = 0.15;
    std::uint64_t seed = 1;

    void check() const {
        require(n_template >= 4, "OutOfRange", "n_template must be >= 4");
        require(n_contrasts >= 1 && n_subjects >= 1, "OutOfRange", "need contrasts and subjects");
        require(std::abs(train_frac + val_frac + test_frac - 1.0) <= 1e-9, "OutOfRange",
                "split fractions must sum to 1");
        require(resample_frac >= 0.0 && resample_frac < 0.5, "OutOfRange",
                "resample_frac must lie in [0, 0.5)");
        require(jitter_sigma >= 0.0 && feature_noise_sigma >= 0.0, "OutOfRange",
                "noise scales must be >= 0");
        require(knn_k >= 1, "OutOfRange", "knn_k must be >= 1");
    }
};

// Feature layout of every synthetic graph: column 0 is the contrast channel,
// columns 1..2 are the (u, v) surface coordinates.
inline constexpr int kContrastChannel = 0;
inline constexpr int kPosU = 1;
inline constexpr int kPosV = 2;

// Nodes stratified over the unit patch, kNN adjacency on the curved
// embedding, C = max-normalized shortest-path distances, contrast channel 0.
Graph make_template(int n, std::uint64_t seed, int knn_k = 6);

// Sets the contrast channel to a sum of 1..3 Gaussian bumps whose layout is
// a deterministic function of (contrast_id, seed).
Graph plant_contrast(const Graph& tmpl, const std::string& contrast_id, std::uint64_t seed);

// Jitters node positions, drops/duplicates resample_frac of the nodes, and
// rebuilds adjacency and C. Geometry depends on subject_seed only, so the
// same subject keeps identical structure across contrasts.
Graph perturb_subject(const Graph& g, std::uint64_t subject_seed, const SynthConfig& cfg);

struct GeneratedDataset {
    DatasetManifest native;
    DatasetManifest common;
};

// Writes template + native + common-geometry graphs and the two manifests
// (manifest.txt for native entries, manifest_common.txt for common ones)
// into out_dir. Splits partition subjects 70/15/15.
GeneratedDataset gen_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir);

} // namespace otgdl
