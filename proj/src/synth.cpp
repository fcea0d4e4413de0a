#include "otgdl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace otgdl {

namespace {

// curved embedding of the unit patch; gentle dome keeps geodesics distinct
// from straight-line distances
Eigen::Vector3d embed_point(double u, double v) {
    return {u, v, 0.35 * std::sin(M_PI * u) * std::sin(M_PI * v)};
}

Mat embed_positions(const Mat& F) {
    Mat P3(F.rows(), 3);
    for (int i = 0; i < F.rows(); ++i) {
        P3.row(i) = embed_point(F(i, kPosU), F(i, kPosV)).transpose();
    }
    return P3;
}

double embedded_diameter(const Mat& P3) {
    double d = 0.0;
    for (int i = 0; i < P3.rows(); ++i)
        for (int j = i + 1; j < P3.rows(); ++j)
            d = std::max(d, (P3.row(i) - P3.row(j)).norm());
    return d;
}

Mat knn_adjacency(const Mat& P3, int k) {
    const int n = static_cast<int>(P3.rows());
    Mat A = Mat::Zero(n, n);
    std::vector<std::pair<double, int>> nb(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) nb[j] = {(P3.row(i) - P3.row(j)).norm(), j};
        nb[i].first = std::numeric_limits<double>::infinity();
        std::partial_sort(nb.begin(), nb.begin() + std::min(k, n - 1), nb.end());
        for (int t = 0; t < std::min(k, n - 1); ++t) {
            const auto [dist, j] = nb[t];
            A(i, j) = A(j, i) = dist; // symmetric union of neighborhoods
        }
    }
    return A;
}

// kNN adjacency with connectivity retries: grow k until shortest_paths
// succeeds or k reaches n.
Mat connected_structure(const Mat& P3, int k0) {
    const int n = static_cast<int>(P3.rows());
    int k = std::min(k0, n - 1);
    while (true) {
        try {
            return shortest_paths(knn_adjacency(P3, k));
        } catch (const Error& e) {
            if (e.code() != std::string("DisconnectedGraph") || k >= n - 1)
                throw;
            k = std::min(k + 2, n - 1);
        }
    }
}

} // namespace

Graph make_template(int n, std::uint64_t seed, int knn_k) {
    require(n >= 4, "OutOfRange", "template needs n >= 4");
    Rng rng(seed ^ 0x7e3a9d11u);
    Graph g;
    g.F = Mat::Zero(n, 3);

    // stratified sampling: jittered grid cells cover the patch evenly
    const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    std::vector<int> cells(side * side);
    std::iota(cells.begin(), cells.end(), 0);
    rng.shuffle(cells);
    for (int i = 0; i < n; ++i) {
        const int cu = cells[i] % side, cv = cells[i] / side;
        g.F(i, kPosU) = (cu + rng.uniform()) / side;
        g.F(i, kPosV) = (cv + rng.uniform()) / side;
    }

    g.C = connected_structure(embed_positions(g.F), knn_k);
    g = normalize_structure(g);
    validate_graph(g);
    return g;
}

Graph plant_contrast(const Graph& tmpl, const std::string& contrast_id, std::uint64_t seed) {
    validate_graph(tmpl);
    Rng rng(fnv1a(contrast_id) ^ (seed * 0x9e3779b97f4a7c15ull));
    const int n_bumps = 1 + static_cast<int>(rng.below(3));
    Graph g = tmpl;
    g.F.col(kContrastChannel).setZero();
    for (int b = 0; b < n_bumps; ++b) {
        const double cu = rng.uniform(0.15, 0.85);
        const double cv = rng.uniform(0.15, 0.85);
        const double width = rng.uniform(0.10, 0.20);
        const double amp = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.8, 1.2);
        for (int i = 0; i < g.n(); ++i) {
            const double du = g.F(i, kPosU) - cu;
            const double dv = g.F(i, kPosV) - cv;
            g.F(i, kContrastChannel) += amp * std::exp(-(du * du + dv * dv) / (2.0 * width * width));
        }
    }
    g.contrast_id = contrast_id;
    return g;
}

Graph perturb_subject(const Graph& g, std::uint64_t subject_seed, const SynthConfig& cfg) {
    validate_graph(g);
    cfg.check();
    const int n = g.n();
    const double diam = embedded_diameter(embed_positions(g.F));
    const double sig = cfg.jitter_sigma * diam;

    // geometry stream: depends on subject_seed only, never on features, so a
    // subject's structure is identical across contrasts
    Rng geo(subject_seed ^ 0x5bd1e995u);
    Graph out = g;
    if (sig > 0.0) {
        for (int i = 0; i < n; ++i) {
            out.F(i, kPosU) += sig * geo.normal();
            out.F(i, kPosV) += sig * geo.normal();
        }
    }

    const int n_resample = static_cast<int>(std::floor(cfg.resample_frac * n));
    if (n_resample > 0) {
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        geo.shuffle(idx);
        std::vector<char> dropped(n, 0);
        for (int t = 0; t < n_resample; ++t) dropped[idx[t]] = 1;
        std::vector<int> survivors;
        for (int i = 0; i < n; ++i)
            if (!dropped[i]) survivors.push_back(i);
        for (int t = 0; t < n_resample; ++t) {
            const int slot = idx[t];
            const int src = survivors[geo.below(survivors.size())];
            out.F.row(slot) = out.F.row(src);
            out.F(slot, kPosU) += sig * geo.normal();
            out.F(slot, kPosV) += sig * geo.normal();
        }
    }

    const bool geometry_changed = sig > 0.0 || n_resample > 0;
    if (geometry_changed) {
        out.C = connected_structure(embed_positions(out.F), cfg.knn_k);
        Graph tmp = normalize_structure(out);
        out.C = tmp.C;
    }

    if (cfg.feature_noise_sigma > 0.0) {
        // separate stream keyed by contrast so geometry draws stay aligned
        Rng noise(mix_seed(subject_seed, fnv1a(g.contrast_id)));
        for (int i = 0; i < n; ++i)
            out.F(i, kContrastChannel) += cfg.feature_noise_sigma * noise.normal();
    }

    out.subject_id.clear(); // set by the caller (gen_dataset) with the id
    validate_graph(out);
    return out;
}

GeneratedDataset gen_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
    cfg.check();
    std::filesystem::create_directories(out_dir);
    Rng rng(cfg.seed);

    const Graph tmpl = make_template(cfg.n_template, cfg.seed, cfg.knn_k);
    write_graph(tmpl, out_dir / "template.graph");

    std::vector<Graph> planted;
    std::vector<std::string> contrast_ids;
    for (int c = 0; c < cfg.n_contrasts; ++c) {
        char id[16];
        std::snprintf(id, sizeof(id), "c%02d", c);
        contrast_ids.emplace_back(id);
        planted.push_back(plant_contrast(tmpl, id, cfg.seed));
    }

    // split subjects 70/15/15; all graphs of a subject share the split
    std::vector<int> order(cfg.n_subjects);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    const int n_train = static_cast<int>(std::round(cfg.train_frac * cfg.n_subjects));
    const int n_val = static_cast<int>(std::round(cfg.val_frac * cfg.n_subjects));
    std::vector<Split> subject_split(cfg.n_subjects);
    for (int r = 0; r < cfg.n_subjects; ++r)
        subject_split[order[r]] = r < n_train ? Split::Train : (r < n_train + n_val ? Split::Val : Split::Test);

    GeneratedDataset ds;
    ds.native.base_dir = out_dir;
    ds.common.base_dir = out_dir;
    ds.native.template_path = "template.graph";
    ds.common.template_path = "template.graph";

    const Mat tmpl_pos = tmpl.F.rightCols(2);
    std::vector<Mat> native_train_features;

    for (int s = 0; s < cfg.n_subjects; ++s) {
        char sid[16];
        std::snprintf(sid, sizeof(sid), "s%02d", s);
        const std::uint64_t subject_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(s) + 1000);
        for (int c = 0; c < cfg.n_contrasts; ++c) {
            Graph native = perturb_subject(planted[c], subject_seed, cfg);
            native.subject_id = sid;

            // common-geometry projection: template nodes take the contrast
            // value of their nearest native node in position space
            Graph common = tmpl;
            common.subject_id = sid;
            common.contrast_id = native.contrast_id;
            for (int i = 0; i < tmpl.n(); ++i) {
                int best = 0;
                double best_d = std::numeric_limits<double>::infinity();
                for (int j = 0; j < native.n(); ++j) {
                    const double du = tmpl_pos(i, 0) - native.F(j, kPosU);
                    const double dv = tmpl_pos(i, 1) - native.F(j, kPosV);
                    const double d2 = du * du + dv * dv;
                    if (d2 < best_d) {
                        best_d = d2;
                        best = j;
                    }
                }
                common.F(i, kContrastChannel) = native.F(best, kContrastChannel);
            }

            char nat_name[64], com_name[64];
            std::snprintf(nat_name, sizeof(nat_name), "native_%s_%s.graph", sid, contrast_ids[c].c_str());
            std::snprintf(com_name, sizeof(com_name), "common_%s_%s.graph", sid, contrast_ids[c].c_str());
            write_graph(native, out_dir / nat_name);
            write_graph(common, out_dir / com_name);
            ds.native.entries.push_back({nat_name, sid, contrast_ids[c], subject_split[s]});
            ds.common.entries.push_back({com_name, sid, contrast_ids[c], subject_split[s]});
            if (subject_split[s] == Split::Train) native_train_features.push_back(native.F);
        }
    }

    // train-split feature statistics, recorded in both manifests
    long total_rows = 0;
    for (const auto& F : native_train_features) total_rows += F.rows();
    Vec mean = Vec::Zero(3), sd = Vec::Zero(3);
    for (const auto& F : native_train_features) mean += F.colwise().sum().transpose();
    mean /= static_cast<double>(total_rows);
    for (const auto& F : native_train_features)
        sd += (F.rowwise() - mean.transpose()).array().square().colwise().sum().matrix().transpose();
    sd = (sd / static_cast<double>(total_rows)).array().sqrt();
    ds.native.feat_mean = mean;
    ds.native.feat_sd = sd;
    ds.common.feat_mean = mean;
    ds.common.feat_sd = sd;

    write_manifest(ds.native, out_dir / "manifest.txt");
    write_manifest(ds.common, out_dir / "manifest_common.txt");
    return ds;
}

} // namespace otgdl
