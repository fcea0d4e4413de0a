#include <doctest.h>

#include <fstream>

#include "otgdl/fgw.hpp"
#include "otgdl/rng.hpp"

using namespace otgdl;

namespace {

Graph random_geometric_graph(int n, int d, Rng& rng) {
    Graph g;
    g.F = Mat(n, d);
    for (auto& v : g.F.reshaped()) v = rng.uniform(-1.5, 1.5);
    Mat pts(n, 2);
    for (auto& v : pts.reshaped()) v = rng.uniform();
    g.C = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) g.C(i, j) = g.C(j, i) = (pts.row(i) - pts.row(j)).norm();
    return normalize_structure(g);
}

Graph permuted(const Graph& g, const std::vector<int>& perm) {
    Graph out = g;
    for (int i = 0; i < g.n(); ++i) {
        out.F.row(i) = g.F.row(perm[i]);
        for (int j = 0; j < g.n(); ++j) out.C(i, j) = g.C(perm[i], perm[j]);
    }
    return out;
}

Mat random_plan(int n1, int n2, Rng& rng) {
    Mat P(n1, n2);
    for (auto& v : P.reshaped()) v = rng.uniform(0.01, 1.0);
    return P / P.sum();
}

} // namespace

TEST_CASE("gw_tensor matches the quadruple-sum oracle") {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const int n1 = 2 + static_cast<int>(rng.below(5)), n2 = 2 + static_cast<int>(rng.below(5));
        Graph g1 = random_geometric_graph(n1, 2, rng), g2 = random_geometric_graph(n2, 2, rng);
        const Mat P = random_plan(n1, n2, rng);
        const Mat T = gw_tensor(g1.C, g2.C, P);
        double direct = 0.0;
        for (int i = 0; i < n1; ++i)
            for (int j = 0; j < n2; ++j)
                for (int k = 0; k < n1; ++k)
                    for (int l = 0; l < n2; ++l) {
                        const double dd = g1.C(i, k) - g2.C(j, l);
                        direct += dd * dd * P(i, j) * P(k, l);
                    }
        const double fast = T.cwiseProduct(P).sum();
        CHECK(std::abs(fast - direct) <= 1e-12 * std::max(1.0, std::abs(direct)));
    }
}

TEST_CASE("gw_tensor: matched structures and hand-checkable 2x2 case") {
    Rng rng(5);
    Graph g = random_geometric_graph(6, 2, rng);
    const Mat I6 = Mat::Identity(6, 6) / 6.0;
    CHECK(std::abs(gw_tensor(g.C, g.C, I6).cwiseProduct(I6).sum()) <= 1e-14);

    Mat C1 = Mat::Zero(2, 2), C2 = Mat::Zero(2, 2);
    C1(0, 1) = C1(1, 0) = 1.0;
    C2(0, 1) = C2(1, 0) = 2.0;
    const Mat U = Mat::Constant(2, 2, 0.25);
    // oracle: sum over all 16 terms of (C1 - C2)^2 / 16
    double direct = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) {
                    const double dd = C1(i, k) - C2(j, l);
                    direct += dd * dd / 16.0;
                }
    CHECK(gw_tensor(C1, C2, U).cwiseProduct(U).sum() == doctest::Approx(direct).epsilon(1e-14));
}

TEST_CASE("line search: Q == P, alpha = 0 endpoints, grid oracle") {
    Rng rng(7);
    Graph g1 = random_geometric_graph(5, 2, rng), g2 = random_geometric_graph(6, 2, rng);
    const Mat P = random_plan(5, 6, rng);
    CHECK(fgw_line_search(g1, g2, P, P, 0.5) == 0.0);

    const Mat Q = random_plan(5, 6, rng);
    const double t0 = fgw_line_search(g1, g2, P, Q, 0.0);
    CHECK((t0 == 0.0 || t0 == 1.0));

    for (int trial = 0; trial < 100; ++trial) {
        Graph a = random_geometric_graph(4 + static_cast<int>(rng.below(4)), 2, rng);
        Graph b = random_geometric_graph(4 + static_cast<int>(rng.below(4)), 2, rng);
        const Mat Pp = random_plan(a.n(), b.n(), rng);
        const Mat Qq = random_plan(a.n(), b.n(), rng);
        const double alpha = rng.uniform();
        const double ts = fgw_line_search(a, b, Pp, Qq, alpha);
        const double at_ts = fgw_loss(a, b, Pp + ts * (Qq - Pp), alpha);
        double grid_best = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= 1000; ++k) {
            const double t = k / 1000.0;
            grid_best = std::min(grid_best, fgw_loss(a, b, Pp + t * (Qq - Pp), alpha));
        }
        CHECK(at_ts <= grid_best + 1e-9);
    }
}

TEST_CASE("solve_fgw: self-distance is ~0 for any alpha") {
    Rng rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        Graph g = random_geometric_graph(6 + static_cast<int>(rng.below(10)), 3, rng);
        for (double alpha : {0.0, 0.5, 1.0}) {
            auto res = solve_fgw(g, g, alpha);
            CHECK(res.loss <= 1e-8);
            CHECK(res.plan.marginal_violation() <= 1e-9);
        }
    }
}

TEST_CASE("solve_fgw at alpha = 0 equals the linear OT optimum") {
    Rng rng(13);
    for (int trial = 0; trial < 5; ++trial) {
        Graph g1 = random_geometric_graph(7, 2, rng), g2 = random_geometric_graph(9, 2, rng);
        auto res = solve_fgw(g1, g2, 0.0);
        auto lp = solve_linear_ot_uniform(feature_cost(g1.F, g2.F));
        CHECK(res.loss == doctest::Approx(lp.cost).epsilon(1e-10));
    }
}

TEST_CASE("solve_fgw: permuted copy recovers ~zero loss") {
    Rng rng(17);
    Graph g = random_geometric_graph(12, 2, rng);
    std::vector<int> perm(12);
    for (int i = 0; i < 12; ++i) perm[i] = i;
    rng.shuffle(perm);
    Graph h = permuted(g, perm);
    for (double alpha : {0.25, 0.75}) {
        auto res = solve_fgw(g, h, alpha);
        CHECK(res.loss <= 1e-8);
    }
}

TEST_CASE("solve_fgw: loss trace is non-increasing, result matches fgw_loss") {
    Rng rng(19);
    Graph g1 = random_geometric_graph(10, 2, rng), g2 = random_geometric_graph(8, 2, rng);
    auto res = solve_fgw(g1, g2, 0.6);
    for (std::size_t i = 1; i < res.trace.size(); ++i)
        CHECK(res.trace[i].loss <= res.trace[i - 1].loss + 1e-12);
    CHECK(res.loss == doctest::Approx(fgw_loss(g1, g2, res.plan.P, 0.6)).epsilon(1e-12));
}

TEST_CASE("solve_fgw: permutation invariance of the value") {
    Rng rng(23);
    for (int trial = 0; trial < 5; ++trial) {
        Graph g1 = random_geometric_graph(9, 2, rng), g2 = random_geometric_graph(7, 2, rng);
        std::vector<int> perm(9);
        for (int i = 0; i < 9; ++i) perm[i] = i;
        rng.shuffle(perm);
        Graph gp = permuted(g1, perm);
        const double a = solve_fgw(g1, g2, 0.5).loss;
        const double b = solve_fgw(gp, g2, 0.5).loss;
        CHECK(std::abs(a - b) <= 1e-6);
    }
}

TEST_CASE("solver trace exports as CSV") {
    Rng rng(29);
    Graph g1 = random_geometric_graph(5, 2, rng), g2 = random_geometric_graph(5, 2, rng);
    auto res = solve_fgw(g1, g2, 0.5);
    const auto path = std::filesystem::temp_directory_path() / "otgdl_trace.csv";
    res.write_trace_csv(path);
    std::ifstream f(path);
    std::string header;
    std::getline(f, header);
    CHECK(header == "iteration,loss,step");
}
