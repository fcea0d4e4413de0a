#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "otgdl/graph_io.hpp"
#include "otgdl/ot.hpp"
#include "otgdl/rng.hpp"
#include "otgdl/tape.hpp"

namespace otgdl {

// Amortized plan predictor: per-node message-passing encoders conditioned on
// (alpha, rho), a cross-graph score head, and log-domain alternating scaling
// toward the uniform marginals. One forward pass costs O(n1 n2).
struct PredictorConfig {
    int n_embed_layers = 3;
    int gcn_hidden = 128;
    int node_out_dim = 64;
    int alpha_embed_dim = 16;
    int mlp_hidden = 1024;
    double temperature = 10.0;
    int head_balancing_steps = 5;
    double affinity_bandwidth = 0.2; // on max-normalized C

    void check() const {
        require(n_embed_layers >= 1 && gcn_hidden >= 1 && node_out_dim >= 1 && alpha_embed_dim >= 1 &&
                    mlp_hidden >= 1,
                "OutOfRange", "predictor dimensions must be >= 1");
        require(temperature > 0.0, "OutOfRange", "temperature must be > 0");
        require(head_balancing_steps >= 0, "OutOfRange", "balancing steps must be >= 0");
        require(affinity_bandwidth > 0.0, "OutOfRange", "affinity bandwidth must be > 0");
    }
};

struct PredictorParams {
    PredictorConfig config;
    int feature_dim = 3; // node feature dimension the encoder was built for
    int version = 1;
    std::vector<std::pair<std::string, Tensor>> weights;

    static PredictorParams init(const PredictorConfig& cfg, int feature_dim, std::uint64_t seed);

    const Tensor& find(const std::string& name) const;
    bool all_finite() const;
};

// row-normalized exp(-C / bandwidth) with masked diagonal
Mat affinity_matrix(const Mat& C, double bandwidth);

// Binds predictor weights onto a tape. trainable=true registers them as
// differentiable leaves (their ids are exposed for the optimizer); otherwise
// they are constants and gradients flow only through the feature inputs.
class PredictorNet {
public:
    PredictorNet(Tape& tape, const PredictorParams& params, bool trainable);

    Tape::Id encode(Tape::Id features, const Mat& affinity, double alpha, double rho);
    Tape::Id plan_from_encodings(Tape::Id enc1, Tape::Id enc2, int balancing_steps);
    Tape::Id plan(Tape::Id f1, const Mat& A1, Tape::Id f2, const Mat& A2, double alpha, double rho);

    const std::vector<Tape::Id>& weight_ids() const { return weight_ids_; }

private:
    Tape& tape_;
    const PredictorParams& params_;
    std::vector<Tape::Id> weight_ids_;
    Tape::Id weight(std::size_t idx) const { return weight_ids_[idx]; }
};

// n x node_out_dim encoding of a validated, max-normalized graph.
Mat encode_nodes(const Graph& g, double alpha, double rho, const PredictorParams& params);

// Near-feasible strictly positive plan with total mass 1.
TransportPlan predict_plan(const Graph& g1, const Graph& g2, double alpha, double rho,
                           const PredictorParams& params, int balancing_steps_override = -1);

// Rounding to the polytope: row/column scale-downs plus a rank-1 residual
// correction. Output exactly feasible; ||out - in||_1 <= 2 * initial
// marginal violation.
TransportPlan project_to_polytope(const Mat& P, const Vec& a, const Vec& b);

struct PretrainSampler {
    double rho_lo = 1e-7, rho_hi = 1.0; // log-uniform range; alpha ~ Beta(0.5, 0.5)
};

struct PretrainConfig {
    int epochs = 40;
    int pairs_per_epoch = 512;
    int batch_size = 64;
    double lr = 0.002;
    double weight_decay = 0.0;
    int n_val_pairs = 64;
    int n_threads = 0; // 0 = hardware concurrency
    std::uint64_t seed = 1;
};

struct PretrainTraceRow {
    int epoch;
    double train_fugw;
    double val_fugw;
};

struct PretrainResult {
    PredictorParams params; // parameters at best validation loss
    std::vector<PretrainTraceRow> trace;
    double best_val = 0.0;

    void write_trace_csv(const std::filesystem::path& path) const;
};

// Stochastic FUGW minimization over native-native and native-common train
// pairs with alpha ~ Beta(0.5,0.5) and rho log-uniform. Deterministic given
// the seed (fixed-order gradient reduction across worker threads).
PretrainResult pretrain_predictor(const DatasetManifest& native, const DatasetManifest& common,
                                  const PredictorConfig& cfg, const PretrainSampler& sampler,
                                  const PretrainConfig& train);

} // namespace otgdl
