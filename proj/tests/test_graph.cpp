#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "otgdl/graph_io.hpp"
#include "otgdl/rng.hpp"

using namespace otgdl;
namespace fs = std::filesystem;

namespace {

Graph random_graph(int n, int d, Rng& rng) {
    Graph g;
    g.F = Mat(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) g.F(i, j) = rng.uniform(-2, 2);
    Mat pts(n, 2);
    for (int i = 0; i < n; ++i) {
        pts(i, 0) = rng.uniform();
        pts(i, 1) = rng.uniform();
    }
    g.C = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) g.C(i, j) = g.C(j, i) = (pts.row(i) - pts.row(j)).norm();
    return g;
}

// independent oracle: Floyd-Warshall over the same adjacency
Mat floyd_warshall(const Mat& adj) {
    const int n = static_cast<int>(adj.rows());
    const double inf = std::numeric_limits<double>::infinity();
    Mat d = Mat::Constant(n, n, inf);
    for (int i = 0; i < n; ++i) d(i, i) = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && adj(i, j) > 0) d(i, j) = adj(i, j);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
    return d;
}

fs::path temp_dir() {
    auto p = fs::temp_directory_path() / "otgdl_test_graph";
    fs::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("validate_graph accepts and rejects per invariant") {
    Graph g;
    g.F = Mat::Zero(2, 1);
    g.C = Mat::Zero(2, 2);
    g.C(0, 1) = g.C(1, 0) = 1.0;
    CHECK_NOTHROW(validate_graph(g));

    Graph bad = g;
    bad.C(1, 0) = 2.0;
    CHECK_THROWS_WITH_AS(validate_graph(bad), doctest::Contains("AsymmetricStructure"), Error);

    bad = g;
    bad.C(0, 0) = 0.5;
    CHECK_THROWS_WITH_AS(validate_graph(bad), doctest::Contains("NonzeroDiagonal"), Error);

    bad = g;
    bad.F(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS(validate_graph(bad), doctest::Contains("NonFiniteEntry"), Error);

    bad = g;
    bad.C = Mat::Zero(3, 3);
    CHECK_THROWS_WITH_AS(validate_graph(bad), doctest::Contains("DimensionMismatch"), Error);
}

TEST_CASE("shortest_paths: path graph, single node, oracle match") {
    Mat adj = Mat::Zero(3, 3);
    adj(0, 1) = adj(1, 0) = 1.0;
    adj(1, 2) = adj(2, 1) = 1.0;
    Mat d = shortest_paths(adj);
    CHECK(d(0, 2) == doctest::Approx(2.0));
    CHECK(d(2, 0) == doctest::Approx(2.0));

    CHECK(shortest_paths(Mat::Zero(1, 1))(0, 0) == 0.0);

    Rng rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 8;
        Mat a = Mat::Zero(n, n);
        // random connected graph: a ring plus random chords
        for (int i = 0; i < n; ++i) {
            int j = (i + 1) % n;
            a(i, j) = a(j, i) = rng.uniform(0.1, 2.0);
        }
        for (int e = 0; e < 6; ++e) {
            int i = static_cast<int>(rng.below(n)), j = static_cast<int>(rng.below(n));
            if (i != j && a(i, j) == 0) a(i, j) = a(j, i) = rng.uniform(0.1, 2.0);
        }
        Mat got = shortest_paths(a);
        Mat want = floyd_warshall(a);
        CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("shortest_paths rejects disconnected graphs") {
    Mat adj = Mat::Zero(4, 4);
    adj(0, 1) = adj(1, 0) = 1.0;
    adj(2, 3) = adj(3, 2) = 1.0;
    CHECK_THROWS_WITH_AS(shortest_paths(adj), doctest::Contains("DisconnectedGraph"), Error);
}

TEST_CASE("shortest_paths satisfies the triangle inequality (exhaustive n<=12)") {
    Rng rng(23);
    const int n = 12;
    Mat a = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        int j = (i + 1) % n;
        a(i, j) = a(j, i) = rng.uniform(0.1, 1.0);
    }
    for (int e = 0; e < 10; ++e) {
        int i = static_cast<int>(rng.below(n)), j = static_cast<int>(rng.below(n));
        if (i != j) a(i, j) = a(j, i) = rng.uniform(0.1, 1.0);
    }
    Mat d = shortest_paths(a);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) CHECK(d(i, k) <= d(i, j) + d(j, k) + 1e-12);
}

TEST_CASE("normalize_structure") {
    Graph g;
    g.F = Mat::Zero(2, 1);
    g.C = Mat::Zero(2, 2);
    g.C(0, 1) = g.C(1, 0) = 2.0;
    Graph n1 = normalize_structure(g);
    CHECK(n1.C(0, 1) == doctest::Approx(1.0));
    Graph n2 = normalize_structure(n1);
    CHECK(n2.C == n1.C); // idempotent

    Graph one;
    one.F = Mat::Zero(1, 1);
    one.C = Mat::Zero(1, 1);
    CHECK_NOTHROW(normalize_structure(one)); // 1-node graph passes through

    Graph degen;
    degen.F = Mat::Zero(2, 1);
    degen.C = Mat::Zero(2, 2);
    CHECK_THROWS_WITH_AS(normalize_structure(degen), doctest::Contains("DegenerateStructure"), Error);
}

TEST_CASE("graph file round-trip is bit exact") {
    Rng rng(41);
    Graph g = random_graph(10, 3, rng);
    g.subject_id = "s01";
    g.contrast_id = "c02";
    const auto path = temp_dir() / "roundtrip.graph";
    write_graph(g, path);
    Graph h = read_graph(path);
    CHECK(h.F == g.F);
    CHECK(h.C == g.C);
    CHECK(h.subject_id == g.subject_id);
    CHECK(h.contrast_id == g.contrast_id);
}

TEST_CASE("graph reader rejects truncated and wrong-version files") {
    const auto dir = temp_dir();
    {
        std::ofstream f(dir / "trunc.graph");
        f << "OTGDL-GRAPH\nversion 1\nn 3 d 2\n0 0\n";
    }
    CHECK_THROWS_WITH_AS(read_graph(dir / "trunc.graph"), doctest::Contains("ParseError"), Error);
    {
        std::ofstream f(dir / "vers.graph");
        f << "OTGDL-GRAPH\nversion 999\nn 1 d 1\n0\n0\n";
    }
    CHECK_THROWS_WITH_AS(read_graph(dir / "vers.graph"), doctest::Contains("VersionMismatch"), Error);
}

TEST_CASE("manifest round-trip, split leak detection") {
    const auto dir = temp_dir();
    Rng rng(5);
    Graph g = random_graph(4, 3, rng);
    write_graph(g, dir / "a.graph");
    write_graph(g, dir / "b.graph");

    DatasetManifest m;
    m.base_dir = dir;
    m.entries = {{"a.graph", "s0", "c0", Split::Train}, {"b.graph", "s1", "c0", Split::Test}};
    m.feat_mean = Vec::Zero(3);
    m.feat_sd = Vec::Ones(3);
    write_manifest(m, dir / "manifest.txt");
    DatasetManifest r = read_manifest(dir / "manifest.txt");
    CHECK(r.entries.size() == 2);
    CHECK(r.entries[0].subject_id == "s0");
    CHECK(r.entries[1].split == Split::Test);
    CHECK(r.feat_mean.size() == 3);

    DatasetManifest leak = m;
    leak.entries.push_back({"a.graph", "s0", "c1", Split::Val}); // s0 in two splits
    write_manifest(leak, dir / "leak.txt");
    CHECK_THROWS_WITH_AS(read_manifest(dir / "leak.txt"), doctest::Contains("SplitLeak"), Error);
}
