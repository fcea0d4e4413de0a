#pragma once

#include <filesystem>

#include "otgdl/agdl.hpp"

namespace otgdl {

struct EmbeddingRow {
    std::string subject_id;
    std::string contrast_id;
    Split split;
    double alpha;
    Vec omega;
};

struct EmbeddingTable {
    int K = 0;
    std::vector<EmbeddingRow> rows;
    std::vector<std::string> failures; // per-row unmix errors, recorded not fatal

    // header: subject,contrast,split,alpha,w1..wK
    void write_csv(const std::filesystem::path& path) const;
    static EmbeddingTable read_csv(const std::filesystem::path& path);
};

// Unmixes every manifest entry at the given alpha (singleton batches, rows
// computed in parallel). Plans come from the predictor at cfg.rho_inference.
EmbeddingTable embed_dataset(const DatasetManifest& manifest, const DictionaryModel& model,
                             const PredictorParams& predictor, double alpha, const TrainConfig& cfg);

// Same, using identity plans (baseline dictionaries on the common geometry).
EmbeddingTable embed_dataset_identity(const DatasetManifest& manifest, const DictionaryModel& model,
                                      const TrainConfig& cfg);

struct ProbeConfig {
    int knn_k = 5; // cosine k-NN
    int n_probe_subjects = 10;
    int n_probe_seeds = 5;
    std::uint64_t seed = 1;

    void check() const {
        require(knn_k >= 1, "OutOfRange", "knn_k must be >= 1");
        require(n_probe_subjects >= 2, "OutOfRange", "need at least 2 probe subjects");
        require(n_probe_seeds >= 1, "OutOfRange", "need at least 1 probe seed");
    }
};

struct ProbeReport {
    double alpha;
    double accuracy_mean;
    double accuracy_sd; // 0 for the single-run contrast probe
    int n_eval;
};

// Contrast probe: fit on train rows, evaluate on test rows (one report per
// alpha present in the table).
std::vector<ProbeReport> contrast_probe(const EmbeddingTable& table, const ProbeConfig& cfg);

// Subject probe: per seed, sample subjects, fit on their rows under a random
// half of the contrasts, evaluate on the held-out contrasts; mean +- sd.
std::vector<ProbeReport> subject_probe(const EmbeddingTable& table, const ProbeConfig& cfg);

// k-NN with shuffled labels, for the chance-level null check.
std::vector<ProbeReport> contrast_probe_shuffled(const EmbeddingTable& table, const ProbeConfig& cfg,
                                                 std::uint64_t shuffle_seed);

void write_probe_csv(const std::vector<ProbeReport>& reports, const std::string& probe_name,
                     const std::filesystem::path& path);

struct PcaTraverseResult {
    Vec mean;
    Mat components;  // K x n_components, orthonormal columns
    Vec variances;   // non-increasing
    int n_components = 0;
    std::vector<std::vector<Graph>> grid; // [component][grid point]
    std::vector<double> ts;               // symmetric grid in sd units
};

// PCA over the embeddings of one contrast; reconstructions along each
// principal component at mean + t * sd * pc, clamped back to the simplex.
// Reports fewer components when the covariance rank is deficient.
PcaTraverseResult pca_traverse(const EmbeddingTable& table, const std::string& contrast_id,
                               const DictionaryModel& model, double alpha, int n_components = 2,
                               int steps = 5);

struct AtomStatsReport {
    Mat correlations;   // K x n_contrasts, Pearson of activation vs contrast indicator
    Mat cosine_dist;    // K x K over activation profiles
    Vec active_fraction; // per atom, fraction of rows with omega_k > 1/(2K)
    Mat histograms;     // K x n_bins activation histograms on [0,1]
    std::vector<std::string> contrast_ids;
    int n_bins = 20;
};

AtomStatsReport atom_stats(const EmbeddingTable& table, double alpha);

void write_atom_stats_csv(const AtomStatsReport& stats, const std::filesystem::path& dir);

} // namespace otgdl
