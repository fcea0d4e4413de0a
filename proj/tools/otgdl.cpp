// Command-line front end: gen | pretrain | train | embed | eval | atoms | report.
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>

#include "otgdl/checkpoint.hpp"
#include "otgdl/config.hpp"
#include "otgdl/eval.hpp"
#include "otgdl/io_util.hpp"
#include "otgdl/report.hpp"

using namespace otgdl;
namespace fs = std::filesystem;

namespace {

RunConfig load_cfg(const std::string& config_path) {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (const char* env = std::getenv("OTGDL_SEED")) {
        cfg.seed = std::stoull(env);
    }
    cfg.finalize();
    return cfg;
}

// provenance record: config snapshot + seed + artifact hashes
struct RunRecord {
    std::string command;
    RunConfig cfg;
    std::vector<fs::path> inputs;
    std::vector<fs::path> outputs;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    void write(const fs::path& dir) const {
        nlohmann::json j;
        j["command"] = command;
        j["seed"] = cfg.seed;
        j["config"] = config_to_text(cfg);
        char hex[32];
        for (const auto& p : inputs) {
            std::snprintf(hex, sizeof(hex), "fnv1a:%016llx",
                          static_cast<unsigned long long>(hash_file(p)));
            j["inputs"][p.filename().string()] = hex;
        }
        for (const auto& p : outputs) {
            if (!fs::exists(p)) continue;
            std::snprintf(hex, sizeof(hex), "fnv1a:%016llx",
                          static_cast<unsigned long long>(hash_file(p)));
            j["outputs"][p.filename().string()] = hex;
        }
        j["elapsed_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_text_atomic(dir / "run.json", j.dump(2) + "\n");
    }
};

std::string alpha_tag(double alpha) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", alpha);
    return buf;
}

int cmd_gen(const std::string& config_path, const std::string& out_dir) {
    RunRecord rec{"gen", load_cfg(config_path)};
    auto ds = gen_dataset(rec.cfg.synth, out_dir);
    rec.outputs = {fs::path(out_dir) / "manifest.txt", fs::path(out_dir) / "manifest_common.txt",
                   fs::path(out_dir) / "template.graph"};
    rec.write(out_dir);
    std::cout << "gen: " << ds.native.entries.size() << " native + " << ds.common.entries.size()
              << " common graphs in " << out_dir << "\n";
    return 0;
}

int cmd_pretrain(const std::string& config_path, const std::string& data_dir,
                 const std::string& out_dir) {
    RunRecord rec{"pretrain", load_cfg(config_path)};
    auto native = read_manifest(fs::path(data_dir) / "manifest.txt");
    auto common = read_manifest(fs::path(data_dir) / "manifest_common.txt");
    auto res = pretrain_predictor(native, common, rec.cfg.predictor, rec.cfg.sampler, rec.cfg.pretrain);
    fs::create_directories(out_dir);
    save_predictor(res.params, config_to_text(rec.cfg), fs::path(out_dir) / "predictor.ckpt");
    res.write_trace_csv(fs::path(out_dir) / "pretrain_trace.csv");
    rec.inputs = {fs::path(data_dir) / "manifest.txt"};
    rec.outputs = {fs::path(out_dir) / "predictor.ckpt", fs::path(out_dir) / "pretrain_trace.csv"};
    rec.write(out_dir);
    std::cout << "pretrain: best val FUGW " << res.best_val << " after " << res.trace.size()
              << " epochs\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& predictor_path, const std::string& mode, double exact_alpha,
              const std::string& out_dir) {
    RunRecord rec{"train", load_cfg(config_path)};
    auto common = read_manifest(fs::path(data_dir) / "manifest_common.txt");

    TrainResult res;
    if (mode == "agdl") {
        require(!predictor_path.empty(), "UsageError", "agdl mode needs --predictor");
        auto native = read_manifest(fs::path(data_dir) / "manifest.txt");
        auto predictor = load_predictor(predictor_path);
        auto model = init_dictionary(common, rec.cfg.dict_K, rec.cfg.variant, rec.cfg.seed);
        res = train_agdl(native, predictor, std::move(model), rec.cfg.agdl);
        rec.inputs = {fs::path(predictor_path)};
    } else if (mode == "baseline") {
        res = train_baseline_common(common, rec.cfg.dict_K, rec.cfg.agdl);
    } else if (mode == "gdl-exact") {
        auto native = read_manifest(fs::path(data_dir) / "manifest.txt");
        res = train_gdl_exact(native, common, exact_alpha, rec.cfg.dict_K, rec.cfg.agdl,
                              rec.cfg.variant);
    } else {
        fail("UsageError", "unknown train mode " + mode);
    }

    fs::create_directories(out_dir);
    save_dictionary(res.model, config_to_text(rec.cfg), fs::path(out_dir) / "dictionary.ckpt");
    res.write_trace_csv(fs::path(out_dir) / "train_trace.csv");
    rec.outputs = {fs::path(out_dir) / "dictionary.ckpt", fs::path(out_dir) / "train_trace.csv"};
    rec.write(out_dir);
    const double first = res.trace.empty() ? 0.0 : res.trace.front().loss;
    const double last = res.trace.empty() ? 0.0 : res.trace.back().loss;
    std::cout << "train(" << mode << "): " << res.trace.size() << " steps, loss " << first << " -> "
              << last << "\n";
    return 0;
}

int cmd_embed(const std::string& config_path, const std::string& data_dir,
              const std::string& dict_path, const std::string& predictor_path, double alpha,
              bool use_grid, const std::string& plans, const std::string& out_csv) {
    RunRecord rec{"embed", load_cfg(config_path)};
    auto model = load_dictionary(dict_path);
    std::vector<double> alphas = use_grid ? rec.cfg.alpha_grid : std::vector<double>{alpha};

    EmbeddingTable table;
    table.K = model.K;
    if (plans == "identity") {
        auto common = read_manifest(fs::path(data_dir) / "manifest_common.txt");
        for (double a : alphas) {
            auto t = embed_dataset_identity(common, model, rec.cfg.agdl);
            for (auto& r : t.rows) {
                r.alpha = a; // identity embeddings do not depend on alpha
                table.rows.push_back(std::move(r));
            }
            for (auto& f : t.failures) table.failures.push_back(std::move(f));
        }
    } else {
        require(!predictor_path.empty(), "UsageError", "amortized embedding needs --predictor");
        auto native = read_manifest(fs::path(data_dir) / "manifest.txt");
        auto predictor = load_predictor(predictor_path);
        for (double a : alphas) {
            auto t = embed_dataset(native, model, predictor, a, rec.cfg.agdl);
            for (auto& r : t.rows) table.rows.push_back(std::move(r));
            for (auto& f : t.failures) table.failures.push_back(std::move(f));
        }
        rec.inputs = {fs::path(predictor_path)};
    }
    table.write_csv(out_csv);
    for (const auto& f : table.failures) std::cerr << "embed: row failed: " << f << "\n";
    rec.outputs = {fs::path(out_csv)};
    if (fs::path(out_csv).has_parent_path()) rec.write(fs::path(out_csv).parent_path());
    std::cout << "embed: " << table.rows.size() << " rows (" << table.failures.size()
              << " failures) -> " << out_csv << "\n";
    return 0;
}

int cmd_eval(const std::string& config_path, const std::string& embeddings_csv,
             const std::string& out_dir) {
    RunRecord rec{"eval", load_cfg(config_path)};
    auto table = EmbeddingTable::read_csv(embeddings_csv);
    fs::create_directories(out_dir);
    auto crep = contrast_probe(table, rec.cfg.probe);
    write_probe_csv(crep, "contrast", fs::path(out_dir) / "probe_contrast.csv");
    auto srep = subject_probe(table, rec.cfg.probe);
    write_probe_csv(srep, "subject", fs::path(out_dir) / "probe_subject.csv");

    std::set<double> alphas;
    for (const auto& r : table.rows) alphas.insert(r.alpha);
    int ai = 0;
    for (double a : alphas) {
        write_atom_stats_csv(atom_stats(table, a), fs::path(out_dir) / ("atoms_alpha_" + alpha_tag(a)));
        ++ai;
    }
    rec.inputs = {fs::path(embeddings_csv)};
    rec.outputs = {fs::path(out_dir) / "probe_contrast.csv", fs::path(out_dir) / "probe_subject.csv"};
    rec.write(out_dir);
    std::cout << "eval: " << crep.size() << " contrast and " << srep.size()
              << " subject probe rows, atom stats at " << ai << " alphas -> " << out_dir << "\n";
    return 0;
}

int cmd_atoms(const std::string& config_path, const std::string& dict_path, double alpha,
              bool use_grid, const std::string& out_dir) {
    RunRecord rec{"atoms", load_cfg(config_path)};
    auto model = load_dictionary(dict_path);
    fs::create_directories(out_dir);
    std::vector<double> alphas = use_grid ? rec.cfg.alpha_grid : std::vector<double>{alpha};
    for (double a : alphas) {
        const Mat atoms = atoms_at(model, a);
        std::ostringstream csv;
        csv << "atom";
        for (int j = 0; j < model.n * model.d; ++j) csv << ",f" << j;
        csv << "\n";
        for (int k = 0; k < model.K; ++k) {
            Graph g;
            g.F = Tensor::CMapT(atoms.row(k).eval().data(), model.n, model.d);
            g.C = model.C;
            char name[64];
            std::snprintf(name, sizeof(name), "atom_%02d_alpha_%s.graph", k, alpha_tag(a).c_str());
            write_graph(g, fs::path(out_dir) / name);
            csv << k;
            for (int j = 0; j < model.n * model.d; ++j) {
                char buf[40];
                std::snprintf(buf, sizeof(buf), ",%.17g", atoms(k, j));
                csv << buf;
            }
            csv << "\n";
        }
        write_text_atomic(fs::path(out_dir) / ("atoms_alpha_" + alpha_tag(a) + ".csv"), csv.str());
    }
    rec.inputs = {fs::path(dict_path)};
    rec.write(out_dir);
    std::cout << "atoms: " << model.K << " atoms at " << alphas.size() << " alphas -> " << out_dir
              << "\n";
    return 0;
}

int cmd_report(const std::string& run_dir, const std::string& out_dir) {
    emit_report(run_dir, out_dir);
    std::cout << "report: charts and report.csv -> " << out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"optimal-transport graph dictionary learning toolkit"};
    app.require_subcommand(1);

    std::string config_path, data_dir, out_path, predictor_path, dict_path, embeddings_csv, run_dir;
    std::string mode = "agdl", plans = "amortized";
    double alpha = 0.5, exact_alpha = 0.5;
    bool use_grid = false;

    auto* gen = app.add_subcommand("gen", "generate a synthetic corpus");
    gen->add_option("--config", config_path)->check(CLI::ExistingFile);
    gen->add_option("--out", out_path)->required();

    auto* pre = app.add_subcommand("pretrain", "pretrain the plan predictor");
    pre->add_option("--config", config_path)->check(CLI::ExistingFile);
    pre->add_option("--data", data_dir)->required();
    pre->add_option("--out", out_path)->required();

    auto* tr = app.add_subcommand("train", "train a dictionary");
    tr->add_option("--config", config_path)->check(CLI::ExistingFile);
    tr->add_option("--data", data_dir)->required();
    tr->add_option("--predictor", predictor_path);
    tr->add_option("--mode", mode)->check(CLI::IsMember({"agdl", "baseline", "gdl-exact"}));
    tr->add_option("--alpha", exact_alpha)->check(CLI::Range(0.0, 1.0));
    tr->add_option("--out", out_path)->required();

    auto* em = app.add_subcommand("embed", "unmix a dataset into embeddings");
    em->add_option("--config", config_path)->check(CLI::ExistingFile);
    em->add_option("--data", data_dir)->required();
    em->add_option("--dict", dict_path)->required();
    em->add_option("--predictor", predictor_path);
    em->add_option("--alpha", alpha)->check(CLI::Range(0.0, 1.0));
    em->add_flag("--grid", use_grid, "embed at every alpha of eval.alpha_grid");
    em->add_option("--plans", plans)->check(CLI::IsMember({"amortized", "identity"}));
    em->add_option("--out", out_path)->required();

    auto* ev = app.add_subcommand("eval", "run classification probes on embeddings");
    ev->add_option("--config", config_path)->check(CLI::ExistingFile);
    ev->add_option("--embeddings", embeddings_csv)->required()->check(CLI::ExistingFile);
    ev->add_option("--out", out_path)->required();

    auto* at = app.add_subcommand("atoms", "export dictionary atoms per alpha");
    at->add_option("--config", config_path)->check(CLI::ExistingFile);
    at->add_option("--dict", dict_path)->required();
    at->add_option("--alpha", alpha)->check(CLI::Range(0.0, 1.0));
    at->add_flag("--grid", use_grid);
    at->add_option("--out", out_path)->required();

    auto* rp = app.add_subcommand("report", "aggregate CSV/SVG report for a run directory");
    rp->add_option("--run", run_dir)->required();
    rp->add_option("--out", out_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << "\n";
        return 1;
    }

    try {
        if (gen->parsed()) return cmd_gen(config_path, out_path);
        if (pre->parsed()) return cmd_pretrain(config_path, data_dir, out_path);
        if (tr->parsed())
            return cmd_train(config_path, data_dir, predictor_path, mode, exact_alpha, out_path);
        if (em->parsed())
            return cmd_embed(config_path, data_dir, dict_path, predictor_path, alpha, use_grid, plans,
                             out_path);
        if (ev->parsed()) return cmd_eval(config_path, embeddings_csv, out_path);
        if (at->parsed()) return cmd_atoms(config_path, dict_path, alpha, use_grid, out_path);
        if (rp->parsed()) return cmd_report(run_dir, out_path);
    } catch (const Error& e) {
        if (e.code() == "UsageError") {
            std::cerr << "usage error: " << e.what() << "\n";
            return 1;
        }
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
