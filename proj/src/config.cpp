#include "otgdl/config.hpp"

#include <cstdio>
#include <map>
#include <sstream>

#include "otgdl/io_util.hpp"

namespace otgdl {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        require(pos == v.size(), "ParseError", "bad number for key " + key);
        return d;
    } catch (const std::exception&) {
        fail("ParseError", "bad number `" + v + "` for key " + key);
    }
}

int to_int(const std::string& key, const std::string& v) {
    const double d = to_double(key, v);
    const int i = static_cast<int>(d);
    require(static_cast<double>(i) == d, "ParseError", "key " + key + " wants an integer");
    return i;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const std::uint64_t u = std::stoull(v, &pos);
        require(pos == v.size(), "ParseError", "bad integer for key " + key);
        return u;
    } catch (const std::exception&) {
        fail("ParseError", "bad integer `" + v + "` for key " + key);
    }
}

bool to_bool_mode(const std::string& key, const std::string& v) {
    if (v == "through_predictor") return false;
    if (v == "stop_gradient") return true;
    fail("ParseError", "key " + key + " wants through_predictor or stop_gradient");
}

std::vector<double> to_grid(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::istringstream is(v);
    std::string item;
    while (std::getline(is, item, ','))
        if (!item.empty()) out.push_back(to_double(key, item));
    require(!out.empty(), "ParseError", "key " + key + " wants a comma-separated list");
    return out;
}

} // namespace

void RunConfig::finalize() {
    pretrain.seed = seed;
    agdl.seed = seed;
    probe.seed = seed;
    synth.seed = seed;
    pretrain.n_threads = threads;
    agdl.n_threads = threads;
    synth.check();
    predictor.check();
    agdl.check();
    probe.check();
    for (double a : alpha_grid)
        require(a >= 0.0 && a <= 1.0, "OutOfRange", "alpha grid values must lie in [0,1]");
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key, value;
        if (!(ls >> key)) continue;
        std::getline(ls, value);
        const auto first = value.find_first_not_of(" \t");
        value = first == std::string::npos ? "" : value.substr(first);
        const auto last = value.find_last_not_of(" \t\r");
        if (last != std::string::npos) value = value.substr(0, last + 1);
        require(!value.empty(), "ParseError",
                origin + ":" + std::to_string(lineno) + ": key " + key + " has no value");

        if (key == "seed") cfg.seed = to_u64(key, value);
        else if (key == "threads") cfg.threads = to_int(key, value);
        else if (key == "synth.n_template") cfg.synth.n_template = to_int(key, value);
        else if (key == "synth.n_contrasts") cfg.synth.n_contrasts = to_int(key, value);
        else if (key == "synth.n_subjects") cfg.synth.n_subjects = to_int(key, value);
        else if (key == "synth.jitter_sigma") cfg.synth.jitter_sigma = to_double(key, value);
        else if (key == "synth.resample_frac") cfg.synth.resample_frac = to_double(key, value);
        else if (key == "synth.feature_noise_sigma") cfg.synth.feature_noise_sigma = to_double(key, value);
        else if (key == "synth.knn_k") cfg.synth.knn_k = to_int(key, value);
        else if (key == "synth.train_frac") cfg.synth.train_frac = to_double(key, value);
        else if (key == "synth.val_frac") cfg.synth.val_frac = to_double(key, value);
        else if (key == "synth.test_frac") cfg.synth.test_frac = to_double(key, value);
        else if (key == "predictor.n_embed_layers") cfg.predictor.n_embed_layers = to_int(key, value);
        else if (key == "predictor.gcn_hidden") cfg.predictor.gcn_hidden = to_int(key, value);
        else if (key == "predictor.node_out_dim") cfg.predictor.node_out_dim = to_int(key, value);
        else if (key == "predictor.alpha_embed_dim") cfg.predictor.alpha_embed_dim = to_int(key, value);
        else if (key == "predictor.mlp_hidden") cfg.predictor.mlp_hidden = to_int(key, value);
        else if (key == "predictor.temperature") cfg.predictor.temperature = to_double(key, value);
        else if (key == "predictor.head_balancing_steps")
            cfg.predictor.head_balancing_steps = to_int(key, value);
        else if (key == "predictor.affinity_bandwidth")
            cfg.predictor.affinity_bandwidth = to_double(key, value);
        else if (key == "pretrain.epochs") cfg.pretrain.epochs = to_int(key, value);
        else if (key == "pretrain.pairs_per_epoch") cfg.pretrain.pairs_per_epoch = to_int(key, value);
        else if (key == "pretrain.batch_size") cfg.pretrain.batch_size = to_int(key, value);
        else if (key == "pretrain.lr") cfg.pretrain.lr = to_double(key, value);
        else if (key == "pretrain.weight_decay") cfg.pretrain.weight_decay = to_double(key, value);
        else if (key == "pretrain.n_val_pairs") cfg.pretrain.n_val_pairs = to_int(key, value);
        else if (key == "pretrain.rho_lo") cfg.sampler.rho_lo = to_double(key, value);
        else if (key == "pretrain.rho_hi") cfg.sampler.rho_hi = to_double(key, value);
        else if (key == "agdl.outer_lr") cfg.agdl.outer_lr = to_double(key, value);
        else if (key == "agdl.inner_lr") cfg.agdl.inner_lr = to_double(key, value);
        else if (key == "agdl.batch_size") cfg.agdl.batch_size = to_int(key, value);
        else if (key == "agdl.outer_weight_decay") cfg.agdl.outer_weight_decay = to_double(key, value);
        else if (key == "agdl.inner_weight_decay") cfg.agdl.inner_weight_decay = to_double(key, value);
        else if (key == "agdl.epochs") cfg.agdl.epochs = to_int(key, value);
        else if (key == "agdl.graphs_per_epoch") cfg.agdl.graphs_per_epoch = to_int(key, value);
        else if (key == "agdl.inner_tol") cfg.agdl.inner_tol = to_double(key, value);
        else if (key == "agdl.inner_max_iters") cfg.agdl.inner_max_iters = to_int(key, value);
        else if (key == "agdl.rho_inference") cfg.agdl.rho_inference = to_double(key, value);
        else if (key == "agdl.K") cfg.dict_K = to_int(key, value);
        else if (key == "agdl.variant") cfg.variant = parse_variant(value);
        else if (key == "agdl.plan_gradient") cfg.agdl.stop_gradient = to_bool_mode(key, value);
        else if (key == "eval.knn_k") cfg.probe.knn_k = to_int(key, value);
        else if (key == "eval.n_probe_subjects") cfg.probe.n_probe_subjects = to_int(key, value);
        else if (key == "eval.n_probe_seeds") cfg.probe.n_probe_seeds = to_int(key, value);
        else if (key == "eval.alpha_grid") cfg.alpha_grid = to_grid(key, value);
        else fail("ParseError", origin + ":" + std::to_string(lineno) + ": unknown key `" + key + "`");
    }
    cfg.finalize();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_text(path), path.string());
}

std::string config_to_text(const RunConfig& cfg) {
    std::ostringstream os;
    os << "seed " << cfg.seed << "\n";
    os << "threads " << cfg.threads << "\n";
    os << "synth.n_template " << cfg.synth.n_template << "\n";
    os << "synth.n_contrasts " << cfg.synth.n_contrasts << "\n";
    os << "synth.n_subjects " << cfg.synth.n_subjects << "\n";
    os << "synth.jitter_sigma " << fmt17(cfg.synth.jitter_sigma) << "\n";
    os << "synth.resample_frac " << fmt17(cfg.synth.resample_frac) << "\n";
    os << "synth.feature_noise_sigma " << fmt17(cfg.synth.feature_noise_sigma) << "\n";
    os << "synth.knn_k " << cfg.synth.knn_k << "\n";
    os << "synth.train_frac " << fmt17(cfg.synth.train_frac) << "\n";
    os << "synth.val_frac " << fmt17(cfg.synth.val_frac) << "\n";
    os << "synth.test_frac " << fmt17(cfg.synth.test_frac) << "\n";
    os << "predictor.n_embed_layers " << cfg.predictor.n_embed_layers << "\n";
    os << "predictor.gcn_hidden " << cfg.predictor.gcn_hidden << "\n";
    os << "predictor.node_out_dim " << cfg.predictor.node_out_dim << "\n";
    os << "predictor.alpha_embed_dim " << cfg.predictor.alpha_embed_dim << "\n";
    os << "predictor.mlp_hidden " << cfg.predictor.mlp_hidden << "\n";
    os << "predictor.temperature " << fmt17(cfg.predictor.temperature) << "\n";
    os << "predictor.head_balancing_steps " << cfg.predictor.head_balancing_steps << "\n";
    os << "predictor.affinity_bandwidth " << fmt17(cfg.predictor.affinity_bandwidth) << "\n";
    os << "pretrain.epochs " << cfg.pretrain.epochs << "\n";
    os << "pretrain.pairs_per_epoch " << cfg.pretrain.pairs_per_epoch << "\n";
    os << "pretrain.batch_size " << cfg.pretrain.batch_size << "\n";
    os << "pretrain.lr " << fmt17(cfg.pretrain.lr) << "\n";
    os << "pretrain.weight_decay " << fmt17(cfg.pretrain.weight_decay) << "\n";
    os << "pretrain.n_val_pairs " << cfg.pretrain.n_val_pairs << "\n";
    os << "pretrain.rho_lo " << fmt17(cfg.sampler.rho_lo) << "\n";
    os << "pretrain.rho_hi " << fmt17(cfg.sampler.rho_hi) << "\n";
    os << "agdl.outer_lr " << fmt17(cfg.agdl.outer_lr) << "\n";
    os << "agdl.inner_lr " << fmt17(cfg.agdl.inner_lr) << "\n";
    os << "agdl.batch_size " << cfg.agdl.batch_size << "\n";
    os << "agdl.outer_weight_decay " << fmt17(cfg.agdl.outer_weight_decay) << "\n";
    os << "agdl.inner_weight_decay " << fmt17(cfg.agdl.inner_weight_decay) << "\n";
    os << "agdl.epochs " << cfg.agdl.epochs << "\n";
    os << "agdl.graphs_per_epoch " << cfg.agdl.graphs_per_epoch << "\n";
    os << "agdl.inner_tol " << fmt17(cfg.agdl.inner_tol) << "\n";
    os << "agdl.inner_max_iters " << cfg.agdl.inner_max_iters << "\n";
    os << "agdl.rho_inference " << fmt17(cfg.agdl.rho_inference) << "\n";
    os << "agdl.K " << cfg.dict_K << "\n";
    os << "agdl.variant " << variant_name(cfg.variant) << "\n";
    os << "agdl.plan_gradient " << (cfg.agdl.stop_gradient ? "stop_gradient" : "through_predictor") << "\n";
    os << "eval.knn_k " << cfg.probe.knn_k << "\n";
    os << "eval.n_probe_subjects " << cfg.probe.n_probe_subjects << "\n";
    os << "eval.n_probe_seeds " << cfg.probe.n_probe_seeds << "\n";
    os << "eval.alpha_grid ";
    for (std::size_t i = 0; i < cfg.alpha_grid.size(); ++i)
        os << (i ? "," : "") << fmt17(cfg.alpha_grid[i]);
    os << "\n";
    return os.str();
}

} // namespace otgdl
