#include "otgdl/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "otgdl/parallel.hpp"

namespace otgdl {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void EmbeddingTable::write_csv(const std::filesystem::path& path) const {
    std::ofstream f(path);
    require(f.good(), "IoError", "cannot open " + path.string());
    f << "subject,contrast,split,alpha";
    for (int k = 1; k <= K; ++k) f << ",w" << k;
    f << "\n";
    for (const auto& r : rows) {
        f << r.subject_id << "," << r.contrast_id << "," << split_name(r.split) << "," << fmt17(r.alpha);
        for (int k = 0; k < K; ++k) f << "," << fmt17(r.omega(k));
        f << "\n";
    }
}

EmbeddingTable EmbeddingTable::read_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    require(f.good(), "IoError", "cannot open " + path.string());
    EmbeddingTable t;
    std::string line;
    require(static_cast<bool>(std::getline(f, line)), "ParseError", "empty embedding table");
    t.K = static_cast<int>(std::count(line.begin(), line.end(), ',')) - 3;
    require(t.K >= 1, "ParseError", "embedding table header has no weight columns");
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream is(line);
        EmbeddingRow r;
        std::string field;
        std::getline(is, r.subject_id, ',');
        std::getline(is, r.contrast_id, ',');
        std::getline(is, field, ',');
        r.split = parse_split(field);
        std::getline(is, field, ',');
        r.alpha = std::stod(field);
        r.omega = Vec(t.K);
        for (int k = 0; k < t.K; ++k) {
            require(static_cast<bool>(std::getline(is, field, ',')), "ParseError",
                    "embedding row has too few weights");
            r.omega(k) = std::stod(field);
        }
        t.rows.push_back(std::move(r));
    }
    return t;
}

namespace {

EmbeddingTable embed_with(const DatasetManifest& manifest, const DictionaryModel& model,
                          const TrainConfig& cfg, double alpha,
                          const std::function<std::unique_ptr<PlanSource>(
                              const std::vector<const PreparedGraph*>&)>& make_plans,
                          double affinity_bandwidth) {
    require(alpha >= 0.0 && alpha <= 1.0, "OutOfRange", "alpha must lie in [0,1]");
    auto graphs = prepare_graphs(manifest, affinity_bandwidth);
    EmbeddingTable table;
    table.K = model.K;
    table.rows.resize(graphs.size());
    std::vector<std::string> errors(graphs.size());

    TrainConfig row_cfg = cfg;
    row_cfg.n_threads = 1; // parallelism is across rows
    parallel_for(static_cast<int>(graphs.size()), cfg.n_threads, [&](int i) {
        EmbeddingRow& r = table.rows[i];
        r.subject_id = graphs[i].subject_id;
        r.contrast_id = graphs[i].contrast_id;
        r.split = graphs[i].split;
        r.alpha = alpha;
        try {
            std::vector<const PreparedGraph*> batch = {&graphs[i]};
            auto plans = make_plans(batch);
            auto res = unmix(batch, model, alpha, *plans, row_cfg);
            r.omega = res.embeddings[0].omega;
        } catch (const Error& e) {
            errors[i] = graphs[i].subject_id + "/" + graphs[i].contrast_id + ": " + e.what();
            r.omega = Vec::Constant(model.K, 1.0 / model.K); // placeholder row
        }
    });
    // drop failed rows, keep the record
    EmbeddingTable out;
    out.K = table.K;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        if (errors[i].empty()) out.rows.push_back(std::move(table.rows[i]));
        else out.failures.push_back(errors[i]);
    }
    return out;
}

} // namespace

EmbeddingTable embed_dataset(const DatasetManifest& manifest, const DictionaryModel& model,
                             const PredictorParams& predictor, double alpha, const TrainConfig& cfg) {
    const Mat common_C = model.C;
    return embed_with(
        manifest, model, cfg, alpha,
        [&](const std::vector<const PreparedGraph*>& batch) -> std::unique_ptr<PlanSource> {
            return std::make_unique<AmortizedPlanSource>(batch, common_C, predictor, alpha,
                                                         cfg.rho_inference, cfg.stop_gradient);
        },
        predictor.config.affinity_bandwidth);
}

EmbeddingTable embed_dataset_identity(const DatasetManifest& manifest, const DictionaryModel& model,
                                      const TrainConfig& cfg) {
    const int dict_n = model.n;
    return embed_with(
        manifest, model, cfg, 0.0,
        [dict_n](const std::vector<const PreparedGraph*>& batch) -> std::unique_ptr<PlanSource> {
            return std::make_unique<IdentityPlanSource>(batch, dict_n);
        },
        0.2);
}

namespace {

double cosine_distance(const Vec& u, const Vec& v) {
    const double nu = u.norm(), nv = v.norm();
    if (nu == 0.0 || nv == 0.0) return 1.0;
    return 1.0 - u.dot(v) / (nu * nv);
}

std::string knn_predict(const std::vector<const EmbeddingRow*>& train, const Vec& q, int k,
                        const std::function<const std::string&(const EmbeddingRow&)>& label) {
    std::vector<std::pair<double, int>> d(train.size());
    for (std::size_t i = 0; i < train.size(); ++i)
        d[i] = {cosine_distance(train[i]->omega, q), static_cast<int>(i)};
    std::stable_sort(d.begin(), d.end());
    const int kk = std::min<int>(k, static_cast<int>(d.size()));
    // plurality vote; ties resolved by smaller summed distance, then label
    std::map<std::string, std::pair<int, double>> votes;
    for (int i = 0; i < kk; ++i) {
        auto& v = votes[label(*train[d[i].second])];
        v.first += 1;
        v.second += d[i].first;
    }
    std::string best;
    int best_count = -1;
    double best_dist = 0;
    for (const auto& [lab, v] : votes) {
        if (v.first > best_count || (v.first == best_count && v.second < best_dist)) {
            best = lab;
            best_count = v.first;
            best_dist = v.second;
        }
    }
    return best;
}

std::vector<double> alphas_in(const EmbeddingTable& table) {
    std::vector<double> as;
    for (const auto& r : table.rows)
        if (std::find(as.begin(), as.end(), r.alpha) == as.end()) as.push_back(r.alpha);
    std::sort(as.begin(), as.end());
    return as;
}

ProbeReport run_contrast_probe(const EmbeddingTable& table, double alpha, const ProbeConfig& cfg,
                               const std::vector<std::string>* shuffled_labels) {
    std::vector<const EmbeddingRow*> train, test;
    std::vector<std::string> train_labels;
    for (const auto& r : table.rows) {
        if (r.alpha != alpha) continue;
        if (r.split == Split::Train) train.push_back(&r);
        else if (r.split == Split::Test) test.push_back(&r);
    }
    require(!train.empty() && !test.empty(), "InsufficientRows", "probe needs train and test rows");

    std::map<const EmbeddingRow*, std::string> labels;
    if (shuffled_labels) {
        require(shuffled_labels->size() == train.size(), "ShapeMismatch", "label count");
        for (std::size_t i = 0; i < train.size(); ++i) labels[train[i]] = (*shuffled_labels)[i];
    }
    auto label_of = [&](const EmbeddingRow& r) -> const std::string& {
        if (shuffled_labels) return labels[&r];
        return r.contrast_id;
    };

    int correct = 0;
    for (const auto* t : test)
        if (knn_predict(train, t->omega, cfg.knn_k, label_of) == t->contrast_id) ++correct;
    return {alpha, static_cast<double>(correct) / test.size(), 0.0, static_cast<int>(test.size())};
}

} // namespace

std::vector<ProbeReport> contrast_probe(const EmbeddingTable& table, const ProbeConfig& cfg) {
    cfg.check();
    std::vector<ProbeReport> out;
    for (double a : alphas_in(table)) out.push_back(run_contrast_probe(table, a, cfg, nullptr));
    return out;
}

std::vector<ProbeReport> contrast_probe_shuffled(const EmbeddingTable& table, const ProbeConfig& cfg,
                                                 std::uint64_t shuffle_seed) {
    cfg.check();
    std::vector<ProbeReport> out;
    for (double a : alphas_in(table)) {
        std::vector<std::string> labels;
        for (const auto& r : table.rows)
            if (r.alpha == a && r.split == Split::Train) labels.push_back(r.contrast_id);
        Rng rng(mix_seed(shuffle_seed, static_cast<std::uint64_t>(a * 1e6)));
        rng.shuffle(labels);
        out.push_back(run_contrast_probe(table, a, cfg, &labels));
    }
    return out;
}

std::vector<ProbeReport> subject_probe(const EmbeddingTable& table, const ProbeConfig& cfg) {
    cfg.check();
    std::vector<ProbeReport> out;
    for (double a : alphas_in(table)) {
        std::set<std::string> subject_set, contrast_set;
        for (const auto& r : table.rows)
            if (r.alpha == a) {
                subject_set.insert(r.subject_id);
                contrast_set.insert(r.contrast_id);
            }
        std::vector<std::string> subjects(subject_set.begin(), subject_set.end());
        std::vector<std::string> contrasts(contrast_set.begin(), contrast_set.end());
        require(static_cast<int>(subjects.size()) >= 2 && contrasts.size() >= 2, "InsufficientRows",
                "subject probe needs >= 2 subjects and >= 2 contrasts");

        std::vector<double> accs;
        for (int s = 0; s < cfg.n_probe_seeds; ++s) {
            Rng rng(mix_seed(cfg.seed, 500 + static_cast<std::uint64_t>(s)));
            auto subj = subjects;
            rng.shuffle(subj);
            subj.resize(std::min<std::size_t>(subj.size(), cfg.n_probe_subjects));
            std::set<std::string> chosen(subj.begin(), subj.end());

            auto contr = contrasts;
            rng.shuffle(contr);
            const std::size_t n_fit = (contr.size() + 1) / 2; // fit on half, evaluate on the rest
            std::set<std::string> fit_contrasts(contr.begin(), contr.begin() + n_fit);

            std::vector<const EmbeddingRow*> train, test;
            for (const auto& r : table.rows) {
                if (r.alpha != a || !chosen.count(r.subject_id)) continue;
                if (fit_contrasts.count(r.contrast_id)) train.push_back(&r);
                else test.push_back(&r);
            }
            require(!train.empty() && !test.empty(), "InsufficientRows",
                    "subject probe split produced an empty side");
            int correct = 0;
            auto label_of = [](const EmbeddingRow& r) -> const std::string& { return r.subject_id; };
            for (const auto* t : test)
                if (knn_predict(train, t->omega, cfg.knn_k, label_of) == t->subject_id) ++correct;
            accs.push_back(static_cast<double>(correct) / test.size());
        }
        double mean = 0;
        for (double v : accs) mean += v;
        mean /= accs.size();
        double var = 0;
        for (double v : accs) var += (v - mean) * (v - mean);
        const double sd = accs.size() > 1 ? std::sqrt(var / (accs.size() - 1)) : 0.0;
        out.push_back({a, mean, sd, static_cast<int>(accs.size())});
    }
    return out;
}

void write_probe_csv(const std::vector<ProbeReport>& reports, const std::string& probe_name,
                     const std::filesystem::path& path) {
    std::ofstream f(path);
    require(f.good(), "IoError", "cannot open " + path.string());
    f << "probe,alpha,accuracy_mean,accuracy_sd,n_eval\n";
    for (const auto& r : reports)
        f << probe_name << "," << fmt17(r.alpha) << "," << fmt17(r.accuracy_mean) << ","
          << fmt17(r.accuracy_sd) << "," << r.n_eval << "\n";
}

namespace {

Vec clamp_to_simplex(const Vec& w) {
    Vec v = w.cwiseMax(0.0);
    const double s = v.sum();
    if (s <= 0.0) return Vec::Constant(w.size(), 1.0 / w.size());
    return v / s;
}

} // namespace

PcaTraverseResult pca_traverse(const EmbeddingTable& table, const std::string& contrast_id,
                               const DictionaryModel& model, double alpha, int n_components,
                               int steps) {
    require(n_components >= 1 && steps >= 1, "OutOfRange", "components and steps must be >= 1");
    std::vector<const EmbeddingRow*> rows;
    for (const auto& r : table.rows)
        if (r.alpha == alpha && r.contrast_id == contrast_id) rows.push_back(&r);
    require(static_cast<int>(rows.size()) >= n_components + 1, "InsufficientRows",
            "pca needs at least n_components + 1 rows");

    const int K = model.K;
    Vec mean = Vec::Zero(K);
    for (const auto* r : rows) mean += r->omega;
    mean /= static_cast<double>(rows.size());
    Mat cov = Mat::Zero(K, K);
    for (const auto* r : rows) {
        const Vec d = r->omega - mean;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(rows.size());

    Eigen::SelfAdjointEigenSolver<Mat> eig(cov);
    require(eig.info() == Eigen::Success, "DegenerateCovariance", "eigendecomposition failed");

    PcaTraverseResult res;
    res.mean = mean;
    std::vector<int> order; // descending eigenvalue, positive only
    for (int i = K - 1; i >= 0; --i)
        if (eig.eigenvalues()(i) > 1e-12) order.push_back(i);
    res.n_components = std::min<int>(n_components, static_cast<int>(order.size()));
    res.components = Mat(K, res.n_components);
    res.variances = Vec(res.n_components);
    for (int c = 0; c < res.n_components; ++c) {
        res.components.col(c) = eig.eigenvectors().col(order[c]);
        res.variances(c) = eig.eigenvalues()(order[c]);
    }

    for (int i = 0; i < steps; ++i)
        res.ts.push_back(steps == 1 ? 0.0 : -2.0 + 4.0 * i / (steps - 1));
    res.grid.resize(res.n_components);
    for (int c = 0; c < res.n_components; ++c) {
        const double sd = std::sqrt(res.variances(c));
        for (double t : res.ts) {
            Embedding e;
            e.omega = clamp_to_simplex(mean + t * sd * res.components.col(c));
            res.grid[c].push_back(reconstruct(model, e, alpha));
        }
    }
    return res;
}

AtomStatsReport atom_stats(const EmbeddingTable& table, double alpha) {
    std::vector<const EmbeddingRow*> rows;
    std::set<std::string> contrast_set;
    for (const auto& r : table.rows)
        if (r.alpha == alpha) {
            rows.push_back(&r);
            contrast_set.insert(r.contrast_id);
        }
    require(!rows.empty(), "InsufficientRows", "no rows at this alpha");
    const int K = static_cast<int>(rows.front()->omega.size());
    const int N = static_cast<int>(rows.size());

    AtomStatsReport rep;
    rep.contrast_ids.assign(contrast_set.begin(), contrast_set.end());
    const int C = static_cast<int>(rep.contrast_ids.size());

    Mat act(N, K);
    for (int i = 0; i < N; ++i) act.row(i) = rows[i]->omega.transpose();

    // Pearson correlation with contrast indicators; degenerate variance -> 0
    rep.correlations = Mat::Zero(K, C);
    for (int c = 0; c < C; ++c) {
        Vec y(N);
        for (int i = 0; i < N; ++i) y(i) = rows[i]->contrast_id == rep.contrast_ids[c] ? 1.0 : 0.0;
        const Vec yc = y.array() - y.mean();
        const double ny = yc.norm();
        for (int k = 0; k < K; ++k) {
            const Vec a = act.col(k).array() - act.col(k).mean();
            const double na = a.norm();
            rep.correlations(k, c) = (na > 0 && ny > 0) ? a.dot(yc) / (na * ny) : 0.0;
        }
    }

    rep.cosine_dist = Mat::Zero(K, K);
    for (int k = 0; k < K; ++k)
        for (int l = k + 1; l < K; ++l) {
            const double d = cosine_distance(act.col(k), act.col(l));
            rep.cosine_dist(k, l) = rep.cosine_dist(l, k) = d;
        }

    rep.active_fraction = Vec::Zero(K);
    const double thresh = 1.0 / (2.0 * K);
    for (int k = 0; k < K; ++k)
        rep.active_fraction(k) = (act.col(k).array() > thresh).cast<double>().sum() / N;

    rep.histograms = Mat::Zero(K, rep.n_bins);
    for (int k = 0; k < K; ++k)
        for (int i = 0; i < N; ++i) {
            int b = static_cast<int>(act(i, k) * rep.n_bins);
            b = std::clamp(b, 0, rep.n_bins - 1);
            rep.histograms(k, b) += 1.0;
        }
    return rep;
}

void write_atom_stats_csv(const AtomStatsReport& stats, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / "atom_correlations.csv");
        f << "atom";
        for (const auto& c : stats.contrast_ids) f << "," << c;
        f << "\n";
        for (int k = 0; k < stats.correlations.rows(); ++k) {
            f << k;
            for (int c = 0; c < stats.correlations.cols(); ++c) f << "," << fmt17(stats.correlations(k, c));
            f << "\n";
        }
    }
    {
        std::ofstream f(dir / "atom_cosine_dist.csv");
        f << "atom";
        for (int k = 0; k < stats.cosine_dist.cols(); ++k) f << ",a" << k;
        f << "\n";
        for (int k = 0; k < stats.cosine_dist.rows(); ++k) {
            f << k;
            for (int l = 0; l < stats.cosine_dist.cols(); ++l) f << "," << fmt17(stats.cosine_dist(k, l));
            f << "\n";
        }
    }
    {
        std::ofstream f(dir / "atom_activity.csv");
        f << "atom,active_fraction";
        for (int b = 0; b < stats.n_bins; ++b) f << ",bin" << b;
        f << "\n";
        for (int k = 0; k < stats.histograms.rows(); ++k) {
            f << k << "," << fmt17(stats.active_fraction(k));
            for (int b = 0; b < stats.n_bins; ++b) f << "," << fmt17(stats.histograms(k, b));
            f << "\n";
        }
    }
}

} // namespace otgdl
