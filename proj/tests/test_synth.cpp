#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "otgdl/synth.hpp"

using namespace otgdl;
namespace fs = std::filesystem;

namespace {

double pearson(const Vec& x, const Vec& y) {
    const Vec cx = x.array() - x.mean();
    const Vec cy = y.array() - y.mean();
    const double den = cx.norm() * cy.norm();
    return den > 0 ? cx.dot(cy) / den : 0.0;
}

fs::path fresh_dir(const std::string& name) {
    auto p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("make_template: valid, deterministic, degree >= k") {
    Graph t4 = make_template(4, 123);
    validate_graph(t4);
    CHECK(t4.C.maxCoeff() == doctest::Approx(1.0));

    Graph a = make_template(60, 9), b = make_template(60, 9);
    CHECK(a.F == b.F);
    CHECK(a.C == b.C);

    // degree oracle: count nonzero adjacency-like rows via kNN reconstruction
    Graph t = make_template(100, 7, 6);
    validate_graph(t);
    CHECK(t.n() == 100);
    CHECK(t.d() == 3);
    CHECK((t.F.col(kContrastChannel).array() == 0.0).all());
}

TEST_CASE("plant_contrast: determinism and distinct patterns") {
    Graph tmpl = make_template(100, 42);
    Graph a1 = plant_contrast(tmpl, "c00", 42);
    Graph a2 = plant_contrast(tmpl, "c00", 42);
    CHECK(a1.F == a2.F);
    CHECK(a1.contrast_id == "c00");
    CHECK(a1.F.rightCols(2) == tmpl.F.rightCols(2)); // positions untouched

    Graph b = plant_contrast(tmpl, "c01", 42);
    const double corr = pearson(a1.F.col(kContrastChannel), b.F.col(kContrastChannel));
    CHECK(std::abs(corr) < 0.5);
}

TEST_CASE("perturb_subject: identity perturbation and geometry invariance") {
    Graph tmpl = make_template(80, 5);
    Graph planted = plant_contrast(tmpl, "c00", 5);

    SynthConfig cfg;
    cfg.jitter_sigma = 0.0;
    cfg.resample_frac = 0.0;
    cfg.feature_noise_sigma = 0.0;
    Graph same = perturb_subject(planted, 99, cfg);
    CHECK(same.F == planted.F);
    CHECK(same.C == planted.C);

    cfg.jitter_sigma = 0.05;
    cfg.resample_frac = 0.1;
    cfg.feature_noise_sigma = 0.05;
    Graph pa = perturb_subject(plant_contrast(tmpl, "c00", 5), 7, cfg);
    Graph pb = perturb_subject(plant_contrast(tmpl, "c01", 5), 7, cfg);
    CHECK(pa.C == pb.C); // same subject seed -> same geometry across contrasts
    CHECK(pa.F.rightCols(2) == pb.F.rightCols(2));
    CHECK(pa.F.col(kContrastChannel) != pb.F.col(kContrastChannel));
}

TEST_CASE("perturb_subject: jitter changes C moderately") {
    Graph tmpl = make_template(60, 11);
    Graph planted = plant_contrast(tmpl, "c00", 11);
    SynthConfig cfg;
    cfg.jitter_sigma = 0.05;
    cfg.resample_frac = 0.0;
    cfg.feature_noise_sigma = 0.0;
    double mean_rel = 0.0;
    const int trials = 8;
    for (int s = 0; s < trials; ++s) {
        Graph p = perturb_subject(planted, 1000 + s, cfg);
        double num = 0.0, den = 0.0;
        for (int i = 0; i < tmpl.n(); ++i)
            for (int j = 0; j < tmpl.n(); ++j)
                if (i != j) {
                    num += std::abs(p.C(i, j) - tmpl.C(i, j));
                    den += std::abs(tmpl.C(i, j));
                }
        mean_rel += num / den;
    }
    mean_rel /= trials;
    CHECK(mean_rel > 0.0);
    CHECK(mean_rel < 0.2);
}

TEST_CASE("gen_dataset: counts, validity, splits, determinism") {
    SynthConfig cfg;
    cfg.n_template = 40;
    cfg.n_contrasts = 3;
    cfg.n_subjects = 10;
    cfg.seed = 77;
    const auto dir = fresh_dir("otgdl_synth_ds");
    auto ds = gen_dataset(cfg, dir);

    CHECK(ds.native.entries.size() == 30);
    CHECK(ds.common.entries.size() == 30);
    CHECK(fs::exists(dir / "template.graph"));

    for (const auto& e : ds.native.entries) CHECK_NOTHROW(validate_graph(read_graph(dir / e.path)));
    for (const auto& e : ds.common.entries) CHECK_NOTHROW(validate_graph(read_graph(dir / e.path)));

    // reload checks the subject-split invariant internally
    auto nm = read_manifest(dir / "manifest.txt");
    auto cm = read_manifest(dir / "manifest_common.txt");
    CHECK(nm.entries.size() == 30);
    CHECK(cm.template_path == "template.graph");
    int n_train = 0;
    for (const auto& e : nm.entries) n_train += (e.split == Split::Train);
    CHECK(n_train == 21); // 7 of 10 subjects

    // byte-identical rerun
    const auto dir2 = fresh_dir("otgdl_synth_ds2");
    gen_dataset(cfg, dir2);
    for (const auto& e : ds.native.entries) {
        std::ifstream f1(dir / e.path), f2(dir2 / e.path);
        std::string s1((std::istreambuf_iterator<char>(f1)), {});
        std::string s2((std::istreambuf_iterator<char>(f2)), {});
        CHECK(s1 == s2);
    }
}

TEST_CASE("gen_dataset: class separation on the common geometry") {
    SynthConfig cfg;
    cfg.n_template = 50;
    cfg.n_contrasts = 3;
    cfg.n_subjects = 8;
    cfg.seed = 3;
    const auto dir = fresh_dir("otgdl_synth_sep");
    auto ds = gen_dataset(cfg, dir);

    std::vector<Vec> acts;
    std::vector<std::string> labels;
    for (const auto& e : ds.common.entries) {
        acts.push_back(read_graph(dir / e.path).F.col(kContrastChannel));
        labels.push_back(e.contrast_id);
    }
    double within = 0, between = 0;
    int nw = 0, nb = 0;
    for (std::size_t i = 0; i < acts.size(); ++i)
        for (std::size_t j = i + 1; j < acts.size(); ++j) {
            const double c = pearson(acts[i], acts[j]);
            if (labels[i] == labels[j]) {
                within += c;
                ++nw;
            } else {
                between += c;
                ++nb;
            }
        }
    CHECK(within / nw > between / nb);
}
