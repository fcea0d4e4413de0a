#pragma once

#include <filesystem>
#include <memory>

#include "otgdl/dictionary.hpp"
#include "otgdl/fgw.hpp"
#include "otgdl/predictor.hpp"

namespace otgdl {

struct TrainConfig {
    double outer_lr = 0.001;
    double inner_lr = 0.09;
    int batch_size = 32;
    double outer_weight_decay = 1e-4;
    double inner_weight_decay = 1e-7;
    int epochs = 200;          // desk-scale default; paper-scale is 1000
    int graphs_per_epoch = 100;
    double inner_tol = 1e-6;   // on the batch logit-change norm
    int inner_max_iters = 200;
    double rho_inference = 0.9;
    bool stop_gradient = false; // ablation: plans treated as constants
    int n_threads = 0;
    std::uint64_t seed = 1;

    void check() const {
        require(outer_lr > 0.0 && inner_lr > 0.0, "OutOfRange", "learning rates must be > 0");
        require(batch_size >= 1, "OutOfRange", "batch_size must be >= 1");
        require(inner_tol > 0.0, "OutOfRange", "inner_tol must be > 0");
        require(inner_max_iters >= 1 && epochs >= 0 && graphs_per_epoch >= 1, "OutOfRange",
                "iteration budgets must be positive");
    }
};

// A graph prepared for training: standardized features, max-normalized C,
// plus its predictor affinity.
struct PreparedGraph {
    Graph g;
    Mat affinity;
    std::string subject_id;
    std::string contrast_id;
    Split split = Split::Train;
};

std::vector<PreparedGraph> prepare_graphs(const DatasetManifest& m, double affinity_bandwidth);

// Supplies the transport-plan node between graph i and its current
// reconstruction while unmixing / updating the dictionary.
class PlanSource {
public:
    virtual ~PlanSource() = default;
    // frec: n x d reconstruction-feature node on `tape`
    virtual Tape::Id plan_node(Tape& tape, int i, Tape::Id frec, double alpha) = 0;
};

// Plans predicted by the amortized model at rho_inference; gradients flow
// through the predictor unless stop_gradient is set.
class AmortizedPlanSource : public PlanSource {
public:
    AmortizedPlanSource(const std::vector<const PreparedGraph*>& batch, const Mat& common_C,
                        const PredictorParams& params, double alpha, double rho, bool stop_gradient);
    Tape::Id plan_node(Tape& tape, int i, Tape::Id frec, double alpha) override;

private:
    std::vector<Mat> encodings_; // cached left-side encodings, fixed per call
    Mat common_affinity_;
    const PredictorParams& params_;
    double rho_;
    bool stop_gradient_;
};

// Identity correspondence (common-geometry baseline); requires node counts
// to match the dictionary's.
class IdentityPlanSource : public PlanSource {
public:
    explicit IdentityPlanSource(const std::vector<const PreparedGraph*>& batch, int dict_n);
    Tape::Id plan_node(Tape& tape, int i, Tape::Id frec, double alpha) override;

private:
    std::vector<const PreparedGraph*> batch_;
    int dict_n_;
};

// Exact conditional-gradient plans (reference GDL); size-guarded.
class ExactPlanSource : public PlanSource {
public:
    ExactPlanSource(const std::vector<const PreparedGraph*>& batch, const Mat& common_C,
                    CgOptions opts = {});
    Tape::Id plan_node(Tape& tape, int i, Tape::Id frec, double alpha) override;

private:
    std::vector<const PreparedGraph*> batch_;
    const Mat& common_C_;
    CgOptions opts_;
};

struct UnmixResult {
    std::vector<Embedding> embeddings;
    std::vector<double> losses; // per-graph loss at the returned omega
    int iterations = 0;
    bool converged = false;
};

// Simplex unmixing by gradient descent on softmax logits (batch-level
// stopping on the logit-change norm). The dictionary is frozen.
UnmixResult unmix(const std::vector<const PreparedGraph*>& batch, const DictionaryModel& model,
                  double alpha, PlanSource& plans, const TrainConfig& cfg);

struct AgdlTraceRow {
    int step;
    int epoch;
    double alpha;
    double loss;
};

struct TrainResult {
    DictionaryModel model;
    std::vector<AgdlTraceRow> trace;

    void write_trace_csv(const std::filesystem::path& path) const;
};

// Stochastic dictionary learning: per outer step, sample a minibatch and an
// alpha, unmix with the frozen dictionary, recompute plans at the returned
// omegas, and take one AdamW step on the batch loss.
TrainResult train_agdl(const DatasetManifest& native, const PredictorParams& predictor,
                       DictionaryModel model, const TrainConfig& cfg);

// Common-geometry least-squares baseline: identity alignment, no predictor.
TrainResult train_baseline_common(const DatasetManifest& common, int K, const TrainConfig& cfg);

// Reference GDL with exact FGW plans; all graphs must have n <= 40. The
// dictionary is initialized from the common-geometry manifest.
TrainResult train_gdl_exact(const DatasetManifest& native_small, const DatasetManifest& common_small,
                            double alpha, int K, const TrainConfig& cfg,
                            DictVariant variant = DictVariant::Fixed);

} // namespace otgdl
