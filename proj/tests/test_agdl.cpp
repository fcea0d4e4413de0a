#include <doctest.h>

#include <fstream>

#include "otgdl/adamw.hpp"
#include "otgdl/agdl.hpp"
#include "otgdl/losses.hpp"
#include "otgdl/synth.hpp"
#include "otgdl/tape_losses.hpp"

using namespace otgdl;
namespace fs = std::filesystem;

namespace {

struct Corpus {
    GeneratedDataset ds;
    fs::path dir;
};

Corpus small_corpus(const std::string& name, int n_template = 24, int n_contrasts = 2,
                    int n_subjects = 6, std::uint64_t seed = 21) {
    SynthConfig cfg;
    cfg.n_template = n_template;
    cfg.n_contrasts = n_contrasts;
    cfg.n_subjects = n_subjects;
    cfg.seed = seed;
    Corpus c;
    c.dir = fs::temp_directory_path() / name;
    fs::remove_all(c.dir);
    c.ds = gen_dataset(cfg, c.dir);
    return c;
}

PredictorParams tiny_predictor(int d = 3, std::uint64_t seed = 3) {
    PredictorConfig cfg;
    cfg.n_embed_layers = 2;
    cfg.gcn_hidden = 8;
    cfg.node_out_dim = 6;
    cfg.mlp_hidden = 12;
    return PredictorParams::init(cfg, d, seed);
}

TrainConfig fast_train(int epochs = 2) {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = 4;
    cfg.graphs_per_epoch = 8;
    cfg.inner_max_iters = 15;
    cfg.inner_tol = 1e-5;
    cfg.n_threads = 2;
    return cfg;
}

} // namespace

TEST_CASE("AdamW decoupled weight decay: one-step hand computation") {
    // single parameter p = 1, gradient g = 0.5, lr = 0.1, wd = 0.01
    Tensor p = Tensor::scalar(1.0);
    Tensor g = Tensor::scalar(0.5);
    AdamW opt(0.1, 0.01);
    opt.step({&p}, {g});
    // t=1: m = 0.1*0.5 / (1-0.9) = 0.5; v = 0.001*0.25 / (1-0.999) = 0.25
    // update = lr * 0.5 / (sqrt(0.25) + 1e-8) + lr * wd * 1
    const double expected = 1.0 - 0.1 * (0.5 / (std::sqrt(0.25) + 1e-8)) - 0.1 * 0.01 * 1.0;
    CHECK(p.data[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("unmix: K = 1 returns the one-point simplex immediately") {
    auto c = small_corpus("otgdl_agdl_k1");
    auto model = init_dictionary(c.ds.common, 1, DictVariant::Fixed, 3);
    auto graphs = prepare_graphs(c.ds.native, 0.2);
    std::vector<const PreparedGraph*> batch = {&graphs[0]};
    auto params = tiny_predictor();
    AmortizedPlanSource plans(batch, model.C, params, 0.5, 0.9, false);
    auto cfg = fast_train();
    auto res = unmix(batch, model, 0.5, plans, cfg);
    CHECK(res.embeddings[0].omega(0) == doctest::Approx(1.0));
}

TEST_CASE("unmix: planted graph recovers its atom, descent vs uniform") {
    auto c = small_corpus("otgdl_agdl_plant");
    auto model = init_dictionary(c.ds.common, 2, DictVariant::Fixed, 7);

    // plant: a graph equal to atom 1's reconstruction on the common geometry;
    // exact plans isolate the unmixing mechanics from predictor quality
    PreparedGraph planted;
    Embedding e;
    e.omega = Vec::Zero(2);
    e.omega(1) = 1.0;
    planted.g = reconstruct(model, e, 0.2);
    planted.affinity = affinity_matrix(planted.g.C, 0.2);
    planted.split = Split::Train;

    std::vector<const PreparedGraph*> batch = {&planted};
    ExactPlanSource plans(batch, model.C);
    TrainConfig cfg = fast_train();
    cfg.inner_lr = 0.5; // softmax saturation is slow at the default rate
    cfg.inner_max_iters = 3000;
    cfg.inner_tol = 1e-12;
    auto res = unmix(batch, model, 0.2, plans, cfg);
    CHECK(res.embeddings[0].omega(1) >= 0.99);

    // descent: loss at returned omega <= loss at uniform omega
    auto uniform_loss = [&] {
        Tape t;
        DictionaryNet dict(t, model, false);
        auto omega = t.constant(Tensor::from_mat(Mat::Constant(1, 2, 0.5)));
        auto frec = dict.reconstruct_features(omega, 0.2);
        ExactPlanSource p2(batch, model.C);
        auto plan = p2.plan_node(t, 0, frec, 0.2);
        return t.val(tape_fgw_loss(t, t.constant(planted.g.F), frec, planted.g.C, model.C, plan, 0.2))
            .value();
    }();
    CHECK(res.losses[0] <= uniform_loss + 1e-12);
}

TEST_CASE("stop_gradient dictionary step equals grad_features contracted with omega") {
    auto c = small_corpus("otgdl_agdl_sg");
    auto model = init_dictionary(c.ds.common, 3, DictVariant::Fixed, 5);
    auto graphs = prepare_graphs(c.ds.native, 0.2);
    const PreparedGraph& g = graphs[1];
    auto params = tiny_predictor();

    Embedding om;
    om.omega = Vec(3);
    om.omega << 0.5, 0.3, 0.2;
    const double alpha = 0.4;

    std::vector<const PreparedGraph*> batch = {&g};
    AmortizedPlanSource plans(batch, model.C, params, alpha, 0.9, true);

    Tape tape;
    DictionaryNet dict(tape, model, true);
    auto omega = tape.constant(Tensor::from_mat(om.omega.transpose()));
    auto frec = dict.reconstruct_features(omega, alpha);
    auto plan = plans.plan_node(tape, 0, frec, alpha);
    auto loss = tape_fgw_loss(tape, tape.constant(g.g.F), frec, g.g.C, model.C, plan, alpha);
    tape.backward(loss);
    const Tensor autodiff = tape.grad(dict.weight_ids()[0]); // K x (n*d)

    // analytic: dL/datom_k = omega_k * grad_features(G, F(omega), P, alpha)
    const Mat P = tape.val(plan).to_mat();
    const Mat Frec = tape.val(frec).to_mat();
    const Mat GF = grad_features(g.g, Frec, P, alpha);
    for (int k = 0; k < 3; ++k) {
        const Mat atom_grad = Tensor::CMapT(autodiff.data.data() + k * model.n * model.d, model.n, model.d);
        CHECK((atom_grad - om.omega(k) * GF).cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("train_agdl: zero epochs keeps the model, seeds reproduce traces") {
    auto c = small_corpus("otgdl_agdl_train");
    auto params = tiny_predictor();
    auto model = init_dictionary(c.ds.common, 2, DictVariant::LinearAlpha, 9);

    TrainConfig cfg0 = fast_train(0);
    auto r0 = train_agdl(c.ds.native, params, model, cfg0);
    for (std::size_t w = 0; w < model.weights.size(); ++w)
        CHECK(r0.model.weights[w].second.data == model.weights[w].second.data);
    CHECK(r0.trace.empty());

    TrainConfig cfg = fast_train(2);
    auto ra = train_agdl(c.ds.native, params, model, cfg);
    auto rb = train_agdl(c.ds.native, params, model, cfg);
    REQUIRE(ra.trace.size() == rb.trace.size());
    for (std::size_t i = 0; i < ra.trace.size(); ++i) {
        CHECK(ra.trace[i].alpha == rb.trace[i].alpha);
        CHECK(ra.trace[i].loss == rb.trace[i].loss);
    }
    CHECK(ra.model.all_finite());

    const auto csv = c.dir / "agdl_trace.csv";
    ra.write_trace_csv(csv);
    std::ifstream f(csv);
    std::string header;
    std::getline(f, header);
    CHECK(header == "step,epoch,alpha,loss");
}

TEST_CASE("baseline: planted single-atom dataset has zero loss at step 0 and recovers the atom") {
    // dataset of identical common-geometry graphs; K = 1 atom inits to one of
    // them, so the initial loss is 0 and training stays there
    auto c = small_corpus("otgdl_agdl_base", 20, 1, 4, 31);
    SynthConfig cfg0;

    // make every graph equal to the first one to plant an exact atom
    auto m = read_manifest(c.dir / "manifest_common.txt");
    Graph first = read_graph(c.dir / m.entries[0].path);
    for (const auto& e : m.entries) {
        Graph g = first;
        g.subject_id = e.subject_id;
        g.contrast_id = e.contrast_id;
        write_graph(g, c.dir / e.path);
    }

    TrainConfig cfg = fast_train(3);
    cfg.batch_size = 2;
    cfg.graphs_per_epoch = 4;
    auto res = train_baseline_common(m, 1, cfg);
    CHECK(res.trace.front().loss <= 1e-12);

    // recovery: atom equals the planted (standardized) features
    DatasetManifest reread = read_manifest(c.dir / "manifest_common.txt");
    Graph target = load_graph(reread, reread.entries[0]);
    const Mat atom = Tensor::CMapT(res.model.find("atoms").data.data(), res.model.n, res.model.d);
    const double rel = (atom - target.F).norm() / target.F.norm();
    CHECK(rel <= 1e-2);
}

TEST_CASE("baseline: full-batch loss is non-increasing with a small lr") {
    auto c = small_corpus("otgdl_agdl_mono", 16, 2, 4, 17);
    auto m = read_manifest(c.dir / "manifest_common.txt");
    const int n_train = static_cast<int>(m.split_entries(Split::Train).size());
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.batch_size = n_train; // every train graph in every step
    cfg.graphs_per_epoch = n_train;
    cfg.outer_lr = 1e-4;
    cfg.inner_max_iters = 40;
    cfg.n_threads = 2;
    cfg.seed = 5;
    auto res = train_baseline_common(m, 2, cfg);
    REQUIRE(res.trace.size() == 30);
    for (std::size_t i = 1; i < res.trace.size(); ++i)
        CHECK(res.trace[i].loss <= res.trace[i - 1].loss + 1e-9);
}

TEST_CASE("exact GDL on a small corpus: finite, decreasing, size guard") {
    auto c = small_corpus("otgdl_agdl_exact", 16, 2, 4, 13);
    TrainConfig cfg = fast_train(3);
    cfg.batch_size = 2;
    cfg.graphs_per_epoch = 4;
    cfg.inner_max_iters = 10;
    auto res = train_gdl_exact(c.ds.native, c.ds.common, 0.5, 2, cfg);
    CHECK(std::isfinite(res.trace.back().loss));
    CHECK(res.trace.back().loss <= res.trace.front().loss);

    auto big = small_corpus("otgdl_agdl_exact_big", 44, 1, 3, 13);
    CHECK_THROWS_WITH_AS(train_gdl_exact(big.ds.native, big.ds.common, 0.5, 2, cfg),
                         doctest::Contains("SizeGuardExceeded"), Error);
}

TEST_CASE("exact GDL at alpha=0 uses pure feature OT plans") {
    auto c = small_corpus("otgdl_agdl_a0", 14, 1, 3, 7);
    auto graphs = prepare_graphs(c.ds.native, 0.2);
    auto model = init_dictionary(c.ds.common, 1, DictVariant::Fixed, 3);
    std::vector<const PreparedGraph*> batch = {&graphs[0]};
    ExactPlanSource plans(batch, model.C);

    Tape tape;
    DictionaryNet dict(tape, model, false);
    auto omega = tape.constant(Tensor::from_mat(Mat::Ones(1, 1)));
    auto frec = dict.reconstruct_features(omega, 0.0);
    auto plan = plans.plan_node(tape, 0, frec, 0.0);

    Graph rec;
    rec.F = tape.val(frec).to_mat();
    rec.C = model.C;
    auto lp = solve_linear_ot_uniform(feature_cost(graphs[0].g.F, rec.F));
    const double via_plan = feature_cost(graphs[0].g.F, rec.F).cwiseProduct(tape.val(plan).to_mat()).sum();
    CHECK(via_plan == doctest::Approx(lp.cost).epsilon(1e-9));
}
