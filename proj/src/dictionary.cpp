#include "otgdl/dictionary.hpp"

#include "otgdl/rng.hpp"

namespace otgdl {

const char* variant_name(DictVariant v) {
    switch (v) {
    case DictVariant::Fixed: return "fixed";
    case DictVariant::LinearAlpha: return "linear_alpha";
    case DictVariant::SoftbinMLP: return "softbin_mlp";
    }
    return "?";
}

DictVariant parse_variant(const std::string& s) {
    if (s == "fixed") return DictVariant::Fixed;
    if (s == "linear_alpha") return DictVariant::LinearAlpha;
    if (s == "softbin_mlp") return DictVariant::SoftbinMLP;
    fail("ParseError", "unknown dictionary variant `" + s + "`");
}

const Tensor& DictionaryModel::find(const std::string& name) const {
    for (const auto& [n_, t] : weights)
        if (n_ == name) return t;
    fail("MissingWeight", "dictionary has no weight named " + name);
}

bool DictionaryModel::all_finite() const {
    for (const auto& [n_, t] : weights)
        if (!t.all_finite()) return false;
    return true;
}

DictionaryNet::DictionaryNet(Tape& tape, const DictionaryModel& model, bool trainable)
    : tape_(tape), model_(model) {
    require(model.K >= 1, "OutOfRange", "dictionary needs K >= 1");
    weight_ids_.reserve(model.weights.size());
    for (const auto& [name, t] : model.weights)
        weight_ids_.push_back(trainable ? tape_.input(t) : tape_.constant(t));
}

Tape::Id DictionaryNet::atoms_at(double alpha) {
    require(alpha >= 0.0 && alpha <= 1.0, "OutOfRange", "alpha must lie in [0,1]");
    switch (model_.variant) {
    case DictVariant::Fixed:
        return weight_ids_[0];
    case DictVariant::LinearAlpha:
        // endpoint0 active at alpha = 1, endpoint1 at alpha = 0
        return tape_.add(tape_.scale(weight_ids_[0], alpha), tape_.scale(weight_ids_[1], 1.0 - alpha));
    case DictVariant::SoftbinMLP: {
        auto sb = tape_.constant(Tensor::from_mat(softbin(alpha, model_.softbin_bins).transpose()));
        auto h = tape_.relu(tape_.add(tape_.matmul(sb, weight_ids_[0]), weight_ids_[1]));
        auto out = tape_.add(tape_.matmul(h, weight_ids_[2]), weight_ids_[3]);
        return tape_.reshape(out, model_.K, model_.n * model_.d);
    }
    }
    fail("OutOfRange", "bad variant");
}

Tape::Id DictionaryNet::reconstruct_features(Tape::Id omega_row, double alpha) {
    require(tape_.val(omega_row).rows() == 1 && tape_.val(omega_row).cols() == model_.K,
            "ShapeMismatch", "omega must be 1 x K");
    auto flat = tape_.matmul(omega_row, atoms_at(alpha)); // 1 x (n*d)
    return tape_.reshape(flat, model_.n, model_.d);
}

Mat atoms_at(const DictionaryModel& model, double alpha) {
    Tape tape;
    DictionaryNet net(tape, model, false);
    return tape.val(net.atoms_at(alpha)).to_mat();
}

Graph reconstruct(const DictionaryModel& model, const Embedding& omega, double alpha) {
    omega.check();
    require(omega.omega.size() == model.K, "ShapeMismatch", "omega length != K");
    Tape tape;
    DictionaryNet net(tape, model, false);
    auto f = net.reconstruct_features(tape.constant(Tensor::from_mat(omega.omega.transpose())), alpha);
    Graph g;
    g.F = tape.val(f).to_mat();
    g.C = model.C;
    validate_graph(g);
    return g;
}

DictionaryModel init_dictionary(const DatasetManifest& common, int K, DictVariant variant,
                                std::uint64_t seed) {
    require(K >= 1, "OutOfRange", "K must be >= 1");
    auto train = common.split_entries(Split::Train);
    require(static_cast<int>(train.size()) >= K, "InsufficientData",
            "need at least K common-geometry train graphs");

    Rng rng(seed ^ 0xd1c7u);
    std::vector<int> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    Graph tmpl = load_template(common);
    tmpl = normalize_structure(tmpl);

    DictionaryModel model;
    model.variant = variant;
    model.K = K;
    model.n = tmpl.n();
    model.d = tmpl.d();
    model.C = tmpl.C;

    Tensor atoms(K, model.n * model.d);
    for (int k = 0; k < K; ++k) {
        Graph g = load_graph(common, *train[order[k]]);
        require(g.n() == model.n && g.d() == model.d, "DimensionMismatch",
                "common-geometry graph size differs from template");
        Tensor::MapT(atoms.data.data() + static_cast<std::size_t>(k) * model.n * model.d, model.n,
                     model.d) = g.F;
    }

    switch (variant) {
    case DictVariant::Fixed:
        model.weights.push_back({"atoms", std::move(atoms)});
        break;
    case DictVariant::LinearAlpha:
        model.weights.push_back({"atoms0", atoms});
        model.weights.push_back({"atoms1", std::move(atoms)});
        break;
    case DictVariant::SoftbinMLP: {
        const int B = model.softbin_bins, H = model.mlp_hidden;
        const int out_dim = K * model.n * model.d;
        Tensor w1(B, H), w2(H, out_dim);
        for (auto& v : w1.data) v = 1e-2 * rng.normal();
        for (auto& v : w2.data) v = 1e-3 * rng.normal();
        Tensor b2(1, out_dim);
        b2.data = atoms.data; // bias carries the sampled atoms
        model.weights.push_back({"mlp1.w", std::move(w1)});
        model.weights.push_back({"mlp1.b", Tensor::zeros(1, H)});
        model.weights.push_back({"mlp2.w", std::move(w2)});
        model.weights.push_back({"mlp2.b", std::move(b2)});
        break;
    }
    }
    return model;
}

} // namespace otgdl
