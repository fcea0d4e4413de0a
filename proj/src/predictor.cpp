#include "otgdl/predictor.hpp"

#include <cstdio>
#include <fstream>

#include "otgdl/parallel.hpp"
#include "otgdl/adamw.hpp"
#include "otgdl/softbin.hpp"
#include "otgdl/tape_losses.hpp"

namespace otgdl {

namespace {

Tensor glorot(int rows, int cols, Rng& rng) {
    Tensor t(rows, cols);
    const double s = std::sqrt(6.0 / (rows + cols));
    for (auto& v : t.data) v = rng.uniform(-s, s);
    return t;
}

} // namespace

PredictorParams PredictorParams::init(const PredictorConfig& cfg, int feature_dim, std::uint64_t seed) {
    cfg.check();
    require(feature_dim >= 1, "OutOfRange", "feature dimension must be >= 1");
    Rng rng(seed ^ 0xabcd1234u);
    PredictorParams p;
    p.config = cfg;
    p.feature_dim = feature_dim;
    const int in_dim = feature_dim + cfg.alpha_embed_dim + 1;
    int prev = in_dim;
    for (int l = 0; l < cfg.n_embed_layers; ++l) {
        char name[32];
        std::snprintf(name, sizeof(name), "gcn%d", l);
        p.weights.push_back({std::string(name) + ".w", glorot(prev, cfg.gcn_hidden, rng)});
        p.weights.push_back({std::string(name) + ".b", Tensor::zeros(1, cfg.gcn_hidden)});
        prev = cfg.gcn_hidden;
    }
    // the projection sees [H | X]; the input skip keeps node identity sharp
    // after the smoothing message-passing rounds
    prev += in_dim;
    p.weights.push_back({"proj1.w", glorot(prev, cfg.mlp_hidden, rng)});
    p.weights.push_back({"proj1.b", Tensor::zeros(1, cfg.mlp_hidden)});
    p.weights.push_back({"proj2.w", glorot(cfg.mlp_hidden, cfg.node_out_dim, rng)});
    p.weights.push_back({"proj2.b", Tensor::zeros(1, cfg.node_out_dim)});
    return p;
}

const Tensor& PredictorParams::find(const std::string& name) const {
    for (const auto& [n, t] : weights)
        if (n == name) return t;
    fail("MissingWeight", "predictor has no weight named " + name);
}

bool PredictorParams::all_finite() const {
    for (const auto& [n, t] : weights)
        if (!t.all_finite()) return false;
    return true;
}

Mat affinity_matrix(const Mat& C, double bandwidth) {
    require(bandwidth > 0.0, "OutOfRange", "bandwidth must be > 0");
    Mat A = (-C / bandwidth).array().exp();
    A.diagonal().setZero();
    for (int i = 0; i < A.rows(); ++i) {
        const double s = A.row(i).sum();
        if (s > 0.0) A.row(i) /= s;
    }
    return A;
}

PredictorNet::PredictorNet(Tape& tape, const PredictorParams& params, bool trainable)
    : tape_(tape), params_(params) {
    params.config.check();
    weight_ids_.reserve(params.weights.size());
    for (const auto& [name, t] : params.weights)
        weight_ids_.push_back(trainable ? tape_.input(t) : tape_.constant(t));
}

Tape::Id PredictorNet::encode(Tape::Id features, const Mat& affinity, double alpha, double rho) {
    const auto& cfg = params_.config;
    require(rho > 0.0, "OutOfRange", "rho must be > 0 (log-rho conditioning)");
    const int n = tape_.val(features).rows();
    require(tape_.val(features).cols() == params_.feature_dim, "ShapeMismatch",
            "feature dimension differs from the encoder's");
    require(affinity.rows() == n && affinity.cols() == n, "ShapeMismatch",
            "affinity must be n x n");

    // conditioning row: [softbin(alpha) | log rho], broadcast to every node
    const Vec bins = softbin(alpha, cfg.alpha_embed_dim);
    Tensor cond(1, cfg.alpha_embed_dim + 1);
    for (int k = 0; k < cfg.alpha_embed_dim; ++k) cond.data[k] = bins(k);
    cond.data[cfg.alpha_embed_dim] = std::log(rho);
    auto X = tape_.concat_cols(features, tape_.broadcast_row(tape_.constant(std::move(cond)), n));

    auto A = tape_.constant(affinity);
    auto H = X;
    for (int l = 0; l < cfg.n_embed_layers; ++l) {
        auto lin = tape_.matmul(tape_.matmul(A, H), weight(2 * l));
        H = tape_.relu(tape_.add(lin, tape_.broadcast_row(weight(2 * l + 1), n)));
    }
    H = tape_.concat_cols(H, X);
    const std::size_t base = 2 * static_cast<std::size_t>(cfg.n_embed_layers);
    auto M = tape_.relu(tape_.add(tape_.matmul(H, weight(base)), tape_.broadcast_row(weight(base + 1), n)));
    return tape_.add(tape_.matmul(M, weight(base + 2)), tape_.broadcast_row(weight(base + 3), n));
}

Tape::Id PredictorNet::plan_from_encodings(Tape::Id enc1, Tape::Id enc2, int balancing_steps) {
    const int n1 = tape_.val(enc1).rows();
    const int n2 = tape_.val(enc2).rows();
    auto L = tape_.scale(tape_.matmul(enc1, tape_.transpose(enc2)), params_.config.temperature);

    const Tensor log_n1 = Tensor::from_mat(Mat::Constant(n1, 1, std::log(static_cast<double>(n1))));
    const Tensor log_n2 = Tensor::from_mat(Mat::Constant(n2, 1, std::log(static_cast<double>(n2))));
    for (int s = 0; s < balancing_steps; ++s) {
        // rows toward 1/n1, then columns toward 1/n2, in the log domain
        auto rl = tape_.add(tape_.row_logsumexp(L), tape_.constant(log_n1));
        L = tape_.sub(L, tape_.broadcast_col(rl, n2));
        auto cl = tape_.add(tape_.row_logsumexp(tape_.transpose(L)), tape_.constant(log_n2));
        L = tape_.sub(L, tape_.broadcast_row(tape_.transpose(cl), n1));
    }
    // exact total-mass-1 rescale
    auto total = tape_.row_logsumexp(tape_.transpose(tape_.row_logsumexp(L)));
    L = tape_.sub(L, tape_.broadcast_col(tape_.broadcast_row(total, n1), n2));
    return tape_.exp(L);
}

Tape::Id PredictorNet::plan(Tape::Id f1, const Mat& A1, Tape::Id f2, const Mat& A2, double alpha,
                            double rho) {
    auto e1 = encode(f1, A1, alpha, rho);
    auto e2 = encode(f2, A2, alpha, rho);
    return plan_from_encodings(e1, e2, params_.config.head_balancing_steps);
}

Mat encode_nodes(const Graph& g, double alpha, double rho, const PredictorParams& params) {
    validate_graph(g);
    Tape tape;
    PredictorNet net(tape, params, false);
    const Mat A = affinity_matrix(g.C, params.config.affinity_bandwidth);
    return tape.val(net.encode(tape.constant(g.F), A, alpha, rho)).to_mat();
}

TransportPlan predict_plan(const Graph& g1, const Graph& g2, double alpha, double rho,
                           const PredictorParams& params, int balancing_steps_override) {
    validate_graph(g1);
    validate_graph(g2);
    require(alpha >= 0.0 && alpha <= 1.0, "OutOfRange", "alpha must lie in [0,1]");
    Tape tape;
    PredictorNet net(tape, params, false);
    const Mat A1 = affinity_matrix(g1.C, params.config.affinity_bandwidth);
    const Mat A2 = affinity_matrix(g2.C, params.config.affinity_bandwidth);
    auto e1 = net.encode(tape.constant(g1.F), A1, alpha, rho);
    auto e2 = net.encode(tape.constant(g2.F), A2, alpha, rho);
    const int steps =
        balancing_steps_override >= 0 ? balancing_steps_override : params.config.head_balancing_steps;
    TransportPlan plan;
    plan.P = tape.val(net.plan_from_encodings(e1, e2, steps)).to_mat();
    return plan;
}

TransportPlan project_to_polytope(const Mat& P, const Vec& a, const Vec& b) {
    require(P.rows() == a.size() && P.cols() == b.size(), "ShapeMismatch", "plan/marginal shapes");
    require((P.array() >= 0.0).all(), "OutOfRange", "plan entries must be >= 0");
    const double mass = P.sum();
    require(mass > 0.0, "DegenerateInput", "cannot project the zero plan");
    require(std::abs(mass - a.sum()) <= 0.1 * a.sum(), "OutOfRange",
            "plan mass deviates from target by more than 10%");

    Mat Q = P;
    for (int i = 0; i < Q.rows(); ++i) {
        const double rs = Q.row(i).sum();
        if (rs > a(i)) Q.row(i) *= a(i) / rs;
    }
    for (int j = 0; j < Q.cols(); ++j) {
        const double cs = Q.col(j).sum();
        if (cs > b(j)) Q.col(j) *= b(j) / cs;
    }
    const Vec err_a = a - Q.rowwise().sum();
    const Vec err_b = b - Q.colwise().sum().transpose();
    const double s = err_b.sum();
    if (s > 0.0) Q.noalias() += err_a * (err_b.transpose() / s);
    TransportPlan out;
    out.P = std::move(Q);
    return out;
}

void PretrainResult::write_trace_csv(const std::filesystem::path& path) const {
    std::ofstream f(path);
    require(f.good(), "IoError", "cannot open " + path.string());
    f << "epoch,train_fugw,val_fugw\n";
    char buf[96];
    for (const auto& r : trace) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", r.epoch, r.train_fugw, r.val_fugw);
        f << buf;
    }
}

namespace {

struct LoadedGraph {
    Graph g;
    Mat affinity;
    std::string label;
};

std::vector<LoadedGraph> load_split(const DatasetManifest& m, Split split, double bandwidth) {
    std::vector<LoadedGraph> out;
    for (const auto& e : m.entries) {
        if (e.split != split) continue;
        Graph g = load_graph(m, e);
        g = normalize_structure(g);
        Mat A = affinity_matrix(g.C, bandwidth);
        out.push_back({std::move(g), std::move(A), e.path});
    }
    return out;
}

struct PairSample {
    const LoadedGraph* g1;
    const LoadedGraph* g2;
    double alpha;
    double rho;
};

std::vector<PairSample> sample_pairs(const std::vector<LoadedGraph>& native,
                                     const std::vector<LoadedGraph>& common, int count,
                                     const PretrainSampler& sampler, Rng& rng) {
    require(!native.empty(), "InsufficientData", "no native train graphs");
    std::vector<PairSample> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        PairSample s;
        s.g1 = &native[rng.below(native.size())];
        const bool cross = !common.empty() && rng.uniform() < 0.5;
        s.g2 = cross ? &common[rng.below(common.size())] : &native[rng.below(native.size())];
        s.alpha = rng.beta_half_half();
        s.rho = rng.log_uniform(sampler.rho_lo, sampler.rho_hi);
        out.push_back(s);
    }
    return out;
}

double pair_fugw(const PairSample& s, const PredictorParams& params) {
    Tape tape;
    PredictorNet net(tape, params, false);
    auto P = net.plan(tape.constant(s.g1->g.F), s.g1->affinity, tape.constant(s.g2->g.F),
                      s.g2->affinity, s.alpha, s.rho);
    auto loss = tape_fugw_loss(tape, tape.constant(s.g1->g.F), tape.constant(s.g2->g.F), s.g1->g.C,
                               s.g2->g.C, P, s.alpha, s.rho);
    return tape.val(loss).value();
}

} // namespace

PretrainResult pretrain_predictor(const DatasetManifest& native, const DatasetManifest& common,
                                  const PredictorConfig& cfg, const PretrainSampler& sampler,
                                  const PretrainConfig& train) {
    cfg.check();
    require(train.epochs >= 1 && train.batch_size >= 1 && train.pairs_per_epoch >= 1, "OutOfRange",
            "pretrain budget must be positive");

    auto train_native = load_split(native, Split::Train, cfg.affinity_bandwidth);
    auto train_common = load_split(common, Split::Train, cfg.affinity_bandwidth);
    auto val_native = load_split(native, Split::Val, cfg.affinity_bandwidth);
    auto val_common = load_split(common, Split::Val, cfg.affinity_bandwidth);
    require(!train_native.empty(), "InsufficientData", "train split is empty");

    const int d = train_native.front().g.d();
    PredictorParams params = PredictorParams::init(cfg, d, train.seed);

    Rng val_rng(mix_seed(train.seed, 0x7a11da7eull));
    auto val_pairs = sample_pairs(val_native.empty() ? train_native : val_native,
                                  val_common.empty() ? train_common : val_common, train.n_val_pairs,
                                  sampler, val_rng);

    const int n_weights = static_cast<int>(params.weights.size());
    AdamW opt(train.lr, train.weight_decay);

    PretrainResult result;
    result.params = params;
    double best_val = std::numeric_limits<double>::infinity();

    for (int epoch = 0; epoch < train.epochs; ++epoch) {
        Rng epoch_rng(mix_seed(train.seed, 1000 + static_cast<std::uint64_t>(epoch)));
        auto pairs = sample_pairs(train_native, train_common, train.pairs_per_epoch, sampler, epoch_rng);

        double epoch_loss = 0.0;
        long n_done = 0;
        for (std::size_t start = 0; start < pairs.size(); start += train.batch_size) {
            const int bs = static_cast<int>(std::min<std::size_t>(train.batch_size, pairs.size() - start));
            std::vector<double> losses(bs);
            std::vector<std::vector<Tensor>> grads(bs);
            parallel_for(bs, train.n_threads, [&](int k) {
                const PairSample& s = pairs[start + k];
                Tape tape;
                PredictorNet net(tape, params, true);
                auto P = net.plan(tape.constant(s.g1->g.F), s.g1->affinity, tape.constant(s.g2->g.F),
                                  s.g2->affinity, s.alpha, s.rho);
                auto loss = tape_fugw_loss(tape, tape.constant(s.g1->g.F), tape.constant(s.g2->g.F),
                                           s.g1->g.C, s.g2->g.C, P, s.alpha, s.rho);
                losses[k] = tape.val(loss).value();
                if (!std::isfinite(losses[k]))
                    fail("NaNLoss", "non-finite loss on pair (" + s.g1->label + ", " + s.g2->label +
                                        ") alpha=" + std::to_string(s.alpha) +
                                        " rho=" + std::to_string(s.rho));
                tape.backward(loss);
                auto& gs = grads[k];
                gs.reserve(n_weights);
                for (auto id : net.weight_ids()) gs.push_back(tape.grad(id));
            });

            // deterministic reduction in batch-index order
            std::vector<Tensor> batch_grad = std::move(grads[0]);
            for (int k = 1; k < bs; ++k)
                for (int w = 0; w < n_weights; ++w) batch_grad[w].map() += grads[k][w].map();
            for (int w = 0; w < n_weights; ++w) batch_grad[w].map() /= static_cast<double>(bs);

            std::vector<Tensor*> ptrs;
            ptrs.reserve(n_weights);
            for (auto& [name, t] : params.weights) ptrs.push_back(&t);
            opt.step(ptrs, batch_grad);

            for (int k = 0; k < bs; ++k) epoch_loss += losses[k];
            n_done += bs;
        }
        epoch_loss /= static_cast<double>(n_done);

        std::vector<double> val_losses(val_pairs.size());
        parallel_for(static_cast<int>(val_pairs.size()), train.n_threads,
                     [&](int k) { val_losses[k] = pair_fugw(val_pairs[k], params); });
        double val_loss = 0.0;
        for (double v : val_losses) val_loss += v;
        val_loss /= static_cast<double>(val_losses.size());

        result.trace.push_back({epoch, epoch_loss, val_loss});
        if (val_loss < best_val) {
            best_val = val_loss;
            result.params = params;
        }
    }
    result.best_val = best_val;
    return result;
}

} // namespace otgdl
