#include "otgdl/agdl.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>

#include "otgdl/adamw.hpp"
#include "otgdl/parallel.hpp"
#include "otgdl/tape_losses.hpp"

namespace otgdl {

std::vector<PreparedGraph> prepare_graphs(const DatasetManifest& m, double affinity_bandwidth) {
    std::vector<PreparedGraph> out;
    out.reserve(m.entries.size());
    for (const auto& e : m.entries) {
        PreparedGraph p;
        p.g = normalize_structure(load_graph(m, e));
        p.affinity = affinity_matrix(p.g.C, affinity_bandwidth);
        p.subject_id = e.subject_id;
        p.contrast_id = e.contrast_id;
        p.split = e.split;
        out.push_back(std::move(p));
    }
    return out;
}

AmortizedPlanSource::AmortizedPlanSource(const std::vector<const PreparedGraph*>& batch,
                                         const Mat& common_C, const PredictorParams& params,
                                         double alpha, double rho, bool stop_gradient)
    : params_(params), rho_(rho), stop_gradient_(stop_gradient) {
    common_affinity_ = affinity_matrix(common_C, params.config.affinity_bandwidth);
    encodings_.reserve(batch.size());
    for (const auto* p : batch)
        encodings_.push_back(encode_nodes(p->g, alpha, rho, params));
}

Tape::Id AmortizedPlanSource::plan_node(Tape& tape, int i, Tape::Id frec, double alpha) {
    if (stop_gradient_) {
        Tape inf;
        PredictorNet net(inf, params_, false);
        auto v = net.encode(inf.constant(tape.val(frec)), common_affinity_, alpha, rho_);
        auto plan = net.plan_from_encodings(inf.constant(Tensor::from_mat(encodings_[i])), v,
                                            params_.config.head_balancing_steps);
        return tape.constant(inf.val(plan));
    }
    PredictorNet net(tape, params_, false);
    auto v = net.encode(frec, common_affinity_, alpha, rho_);
    return net.plan_from_encodings(tape.constant(Tensor::from_mat(encodings_[i])), v,
                                   params_.config.head_balancing_steps);
}

IdentityPlanSource::IdentityPlanSource(const std::vector<const PreparedGraph*>& batch, int dict_n)
    : batch_(batch), dict_n_(dict_n) {
    for (const auto* p : batch_)
        require(p->g.n() == dict_n_, "DimensionMismatch",
                "identity alignment needs graphs on the dictionary geometry");
}

Tape::Id IdentityPlanSource::plan_node(Tape& tape, int, Tape::Id, double) {
    return tape.constant(Mat(Mat::Identity(dict_n_, dict_n_) / dict_n_));
}

ExactPlanSource::ExactPlanSource(const std::vector<const PreparedGraph*>& batch, const Mat& common_C,
                                 CgOptions opts)
    : batch_(batch), common_C_(common_C), opts_(opts) {
    for (const auto* p : batch_)
        require(p->g.n() <= 40, "SizeGuardExceeded", "exact GDL is limited to graphs with n <= 40");
    require(common_C_.rows() <= 40, "SizeGuardExceeded", "exact GDL dictionary must have n <= 40");
}

Tape::Id ExactPlanSource::plan_node(Tape& tape, int i, Tape::Id frec, double alpha) {
    Graph rec;
    rec.F = tape.val(frec).to_mat();
    rec.C = common_C_;
    return tape.constant(solve_fgw(batch_[i]->g, rec, alpha, opts_).plan.P);
}

namespace {

// builds the per-graph unmixing loss L^alpha(G_i, (F(omega), C), P) on the
// tape; omega enters via logits z (1 x K)
struct GraphLoss {
    Tape tape;
    Tape::Id z = -1;
    Tape::Id loss = -1;
    double value = 0.0;
};

void build_unmix_loss(GraphLoss& gl, const PreparedGraph& g, const DictionaryModel& model,
                      const Tensor& z_value, double alpha, PlanSource& plans, int i) {
    auto& t = gl.tape;
    gl.z = t.input(z_value);
    auto omega = t.row_softmax(gl.z);
    DictionaryNet dict(t, model, false);
    auto frec = dict.reconstruct_features(omega, alpha);
    auto plan = plans.plan_node(t, i, frec, alpha);
    gl.loss = tape_fgw_loss(t, t.constant(g.g.F), frec, g.g.C, model.C, plan, alpha);
    gl.value = t.val(gl.loss).value();
}

} // namespace

UnmixResult unmix(const std::vector<const PreparedGraph*>& batch, const DictionaryModel& model,
                  double alpha, PlanSource& plans, const TrainConfig& cfg) {
    cfg.check();
    require(!batch.empty(), "InsufficientData", "unmix needs a non-empty batch");
    const int B = static_cast<int>(batch.size());
    const int K = model.K;

    std::vector<Tensor> logits(B, Tensor::zeros(1, K)); // softmax(0) = uniform
    std::vector<Tensor> grads(B);
    std::vector<double> losses(B, 0.0);

    UnmixResult res;
    const double decay = 1.0 - cfg.inner_lr * cfg.inner_weight_decay;
    for (int t = 0; t < cfg.inner_max_iters; ++t) {
        parallel_for(B, cfg.n_threads, [&](int i) {
            GraphLoss gl;
            build_unmix_loss(gl, *batch[i], model, logits[i], alpha, plans, i);
            if (!std::isfinite(gl.value))
                fail("NaNLoss", "non-finite unmixing loss on graph " + std::to_string(i));
            gl.tape.backward(gl.loss);
            grads[i] = gl.tape.grad(gl.z);
            losses[i] = gl.value;
        });
        double delta_sq = 0.0;
        for (int i = 0; i < B; ++i) {
            for (int k = 0; k < K; ++k) {
                const double before = logits[i].data[k];
                const double after = decay * before - cfg.inner_lr * grads[i].data[k];
                logits[i].data[k] = after;
                delta_sq += (after - before) * (after - before);
            }
        }
        res.iterations = t + 1;
        if (std::sqrt(delta_sq) <= cfg.inner_tol) {
            res.converged = true;
            break;
        }
    }

    // evaluate the loss at the returned omegas
    res.losses.assign(B, 0.0);
    res.embeddings.resize(B);
    parallel_for(B, cfg.n_threads, [&](int i) {
        GraphLoss gl;
        build_unmix_loss(gl, *batch[i], model, logits[i], alpha, plans, i);
        res.losses[i] = gl.value;
    });
    for (int i = 0; i < B; ++i) {
        Tape t;
        const auto sm = t.row_softmax(t.constant(logits[i]));
        res.embeddings[i].omega = t.val(sm).to_mat().transpose();
        res.embeddings[i].check();
    }
    return res;
}

void TrainResult::write_trace_csv(const std::filesystem::path& path) const {
    std::ofstream f(path);
    require(f.good(), "IoError", "cannot open " + path.string());
    f << "step,epoch,alpha,loss\n";
    char buf[128];
    for (const auto& r : trace) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g\n", r.step, r.epoch, r.alpha, r.loss);
        f << buf;
    }
}

namespace {

using PlanFactory =
    std::function<std::unique_ptr<PlanSource>(const std::vector<const PreparedGraph*>&, double)>;
using AlphaSampler = std::function<double(Rng&)>;

TrainResult run_training(const std::vector<PreparedGraph>& graphs, DictionaryModel model,
                         const TrainConfig& cfg, const PlanFactory& make_plans,
                         const AlphaSampler& sample_alpha) {
    cfg.check();
    std::vector<const PreparedGraph*> train;
    for (const auto& g : graphs)
        if (g.split == Split::Train) train.push_back(&g);
    require(!train.empty(), "InsufficientData", "no train-split graphs");

    const int n_weights = static_cast<int>(model.weights.size());
    AdamW opt(cfg.outer_lr, cfg.outer_weight_decay);
    TrainResult res;
    int step = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng rng(mix_seed(cfg.seed, 3000 + static_cast<std::uint64_t>(epoch)));
        std::vector<int> order;
        if (cfg.graphs_per_epoch <= static_cast<int>(train.size())) {
            order.resize(train.size());
            std::iota(order.begin(), order.end(), 0);
            rng.shuffle(order);
            order.resize(cfg.graphs_per_epoch);
        } else {
            order.resize(cfg.graphs_per_epoch);
            for (auto& i : order) i = static_cast<int>(rng.below(train.size()));
        }

        // full batches only; the remainder is dropped
        for (int start = 0; start + cfg.batch_size <= static_cast<int>(order.size());
             start += cfg.batch_size) {
            const double alpha = sample_alpha(rng);
            std::vector<const PreparedGraph*> batch;
            batch.reserve(cfg.batch_size);
            for (int k = 0; k < cfg.batch_size; ++k) batch.push_back(train[order[start + k]]);

            auto plans = make_plans(batch, alpha);
            auto un = unmix(batch, model, alpha, *plans, cfg);

            // dictionary step: plans recomputed at the returned omegas
            const int B = static_cast<int>(batch.size());
            std::vector<std::vector<Tensor>> grads(B);
            std::vector<double> losses(B);
            parallel_for(B, cfg.n_threads, [&](int i) {
                Tape tape;
                DictionaryNet dict(tape, model, true);
                auto omega = tape.constant(Tensor::from_mat(un.embeddings[i].omega.transpose()));
                auto frec = dict.reconstruct_features(omega, alpha);
                auto plan = plans->plan_node(tape, i, frec, alpha);
                auto loss = tape_fgw_loss(tape, tape.constant(batch[i]->g.F), frec, batch[i]->g.C,
                                          model.C, plan, alpha);
                losses[i] = tape.val(loss).value();
                if (!std::isfinite(losses[i]))
                    fail("NaNLoss", "non-finite dictionary loss at step " + std::to_string(step) +
                                        " alpha=" + std::to_string(alpha));
                tape.backward(loss);
                auto& gs = grads[i];
                gs.reserve(n_weights);
                for (auto id : dict.weight_ids()) gs.push_back(tape.grad(id));
            });

            std::vector<Tensor> batch_grad = std::move(grads[0]);
            for (int i = 1; i < B; ++i)
                for (int w = 0; w < n_weights; ++w) batch_grad[w].map() += grads[i][w].map();
            for (int w = 0; w < n_weights; ++w) batch_grad[w].map() /= static_cast<double>(B);

            std::vector<Tensor*> ptrs;
            ptrs.reserve(n_weights);
            for (auto& [name, t] : model.weights) ptrs.push_back(&t);
            opt.step(ptrs, batch_grad);

            double mean_loss = 0.0;
            for (double v : losses) mean_loss += v;
            mean_loss /= B;
            res.trace.push_back({step, epoch, alpha, mean_loss});
            ++step;
        }
    }
    res.model = std::move(model);
    return res;
}

} // namespace

TrainResult train_agdl(const DatasetManifest& native, const PredictorParams& predictor,
                       DictionaryModel model, const TrainConfig& cfg) {
    auto graphs = prepare_graphs(native, predictor.config.affinity_bandwidth);
    const Mat common_C = model.C;
    PlanFactory factory = [&](const std::vector<const PreparedGraph*>& batch, double alpha) {
        return std::make_unique<AmortizedPlanSource>(batch, common_C, predictor, alpha,
                                                     cfg.rho_inference, cfg.stop_gradient);
    };
    return run_training(graphs, std::move(model), cfg, factory,
                        [](Rng& rng) { return rng.uniform(); });
}

TrainResult train_baseline_common(const DatasetManifest& common, int K, const TrainConfig& cfg) {
    DictionaryModel model = init_dictionary(common, K, DictVariant::Fixed, cfg.seed);
    const int dict_n = model.n;
    auto graphs = prepare_graphs(common, 0.2); // affinity unused by identity plans
    PlanFactory factory = [dict_n](const std::vector<const PreparedGraph*>& batch, double) {
        return std::make_unique<IdentityPlanSource>(batch, dict_n);
    };
    // identity alignment at alpha = 0: the loss is exactly the per-node
    // least-squares objective
    return run_training(graphs, std::move(model), cfg, factory, [](Rng&) { return 0.0; });
}

TrainResult train_gdl_exact(const DatasetManifest& native_small, const DatasetManifest& common_small,
                            double alpha, int K, const TrainConfig& cfg, DictVariant variant) {
    require(alpha >= 0.0 && alpha <= 1.0, "OutOfRange", "alpha must lie in [0,1]");
    DictionaryModel model = init_dictionary(common_small, K, variant, cfg.seed);
    auto graphs = prepare_graphs(native_small, 0.2);
    const Mat common_C = model.C;
    PlanFactory factory = [&common_C](const std::vector<const PreparedGraph*>& batch, double) {
        return std::make_unique<ExactPlanSource>(batch, common_C);
    };
    return run_training(graphs, std::move(model), cfg, factory, [alpha](Rng&) { return alpha; });
}

} // namespace otgdl
