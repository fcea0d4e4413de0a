#include <doctest.h>

#include "otgdl/losses.hpp"
#include "otgdl/rng.hpp"

using namespace otgdl;

namespace {

Graph random_graph(int n, int d, Rng& rng) {
    Graph g;
    g.F = Mat(n, d);
    for (auto& v : g.F.reshaped()) v = rng.uniform(-1.5, 1.5);
    g.C = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) g.C(i, j) = g.C(j, i) = rng.uniform(0.05, 1.0);
    return g;
}

Mat random_plan(int n1, int n2, Rng& rng) {
    Mat P(n1, n2);
    for (auto& v : P.reshaped()) v = rng.uniform(0.01, 1.0);
    return P / P.sum();
}

} // namespace

TEST_CASE("fgw_loss: hand-computed two-node example") {
    // F1 = F2 = (0; 1), C1 = [[0,1],[1,0]], C2 = [[0,2],[2,0]], P = I/2
    Graph g1, g2;
    g1.F = Mat(2, 1);
    g1.F << 0, 1;
    g2.F = g1.F;
    g1.C = Mat::Zero(2, 2);
    g1.C(0, 1) = g1.C(1, 0) = 1.0;
    g2.C = Mat::Zero(2, 2);
    g2.C(0, 1) = g2.C(1, 0) = 2.0;
    const Mat P = Mat::Identity(2, 2) / 2.0;
    CHECK(fgw_loss(g1, g2, P, 0.5) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(fgw_loss_quartic_oracle(g1, g2, P, 0.5) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("fgw_loss zero cases") {
    Rng rng(3);
    Graph g = random_graph(5, 2, rng);
    const Mat I5 = Mat::Identity(5, 5) / 5.0;
    for (double alpha : {0.0, 0.3, 1.0}) CHECK(fgw_loss(g, g, I5, alpha) <= 1e-15);

    Graph h = g;
    for (auto& v : h.F.reshaped()) v = rng.uniform(-1, 1);
    CHECK(fgw_loss(g, h, I5, 1.0) <= 1e-15); // features ignored at alpha = 1
}

TEST_CASE("factored form matches the quartic oracle") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const int n1 = 2 + static_cast<int>(rng.below(5));
        const int n2 = 2 + static_cast<int>(rng.below(5));
        Graph g1 = random_graph(n1, 3, rng), g2 = random_graph(n2, 3, rng);
        const Mat P = random_plan(n1, n2, rng);
        const double alpha = rng.uniform();
        const double fast = fgw_loss(g1, g2, P, alpha);
        const double slow = fgw_loss_quartic_oracle(g1, g2, P, alpha);
        CHECK(std::abs(fast - slow) <= 1e-12 * std::max(1.0, std::abs(slow)));
    }
}

TEST_CASE("quartic oracle: zero plan, homogeneity, size guard") {
    Rng rng(11);
    Graph g1 = random_graph(4, 2, rng), g2 = random_graph(5, 2, rng);
    CHECK(fgw_loss_quartic_oracle(g1, g2, Mat::Zero(4, 5), 0.5) == 0.0);

    const Mat P = random_plan(4, 5, rng);
    const double w1 = fgw_loss_quartic_oracle(g1, g2, P, 0.0);
    const double w2 = fgw_loss_quartic_oracle(g1, g2, 2.0 * P, 0.0);
    CHECK(w2 == doctest::Approx(2.0 * w1).epsilon(1e-12));
    const double gw1 = fgw_loss_quartic_oracle(g1, g2, P, 1.0);
    const double gw2 = fgw_loss_quartic_oracle(g1, g2, 2.0 * P, 1.0);
    CHECK(gw2 == doctest::Approx(4.0 * gw1).epsilon(1e-12));

    Graph big = random_graph(17, 2, rng);
    CHECK_THROWS_WITH_AS(fgw_loss_quartic_oracle(big, big, Mat::Zero(17, 17), 0.5),
                         doctest::Contains("SizeGuardExceeded"), Error);
}

TEST_CASE("fgw_loss is affine in alpha") {
    Rng rng(13);
    Graph g1 = random_graph(5, 2, rng), g2 = random_graph(6, 2, rng);
    const Mat P = random_plan(5, 6, rng);
    const double l0 = fgw_loss(g1, g2, P, 0.0);
    const double l1 = fgw_loss(g1, g2, P, 1.0);
    const double lh = fgw_loss(g1, g2, P, 0.5);
    CHECK(lh == doctest::Approx(0.5 * (l0 + l1)).epsilon(1e-12));
}

TEST_CASE("product_kl closed form") {
    const int n = 4;
    Vec nu = Vec::Constant(n, 1.0 / n);
    CHECK(product_kl(nu, nu) == doctest::Approx(0.0));
    // mu = 2 nu with mass(nu) = 1: 8 ln 2 - 3
    CHECK(product_kl(2.0 * nu, nu) == doctest::Approx(8.0 * std::log(2.0) - 3.0).epsilon(1e-14));

    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const int m = 2 + static_cast<int>(rng.below(7));
        Vec mu(m), nv(m);
        for (int i = 0; i < m; ++i) {
            mu(i) = rng.uniform(0.0, 1.0);
            nv(i) = rng.uniform(0.05, 1.0);
        }
        const double closed = product_kl(mu, nv);
        const double direct = product_kl_double_sum(mu, nv);
        CHECK(std::abs(closed - direct) <= 1e-12 * std::max(1.0, std::abs(direct)));
    }

    Vec mu(2), bad(2);
    mu << 0.5, 0.5;
    bad << 1.0, 0.0;
    CHECK_THROWS_WITH_AS(product_kl(mu, bad), doctest::Contains("ZeroReference"), Error);
}

TEST_CASE("fugw_loss reduces to fgw_loss on feasible plans and rho = 0") {
    Rng rng(19);
    Graph g1 = random_graph(4, 2, rng), g2 = random_graph(6, 2, rng);
    const Mat uniform = Mat::Constant(4, 6, 1.0 / 24.0);
    for (double rho : {0.0, 0.9, 5.0}) {
        CHECK(fugw_loss(g1, g2, uniform, {0.4, rho}) ==
              doctest::Approx(fgw_loss(g1, g2, uniform, 0.4)).epsilon(1e-13));
    }
    const Mat skew = random_plan(4, 6, rng) * 1.3;
    CHECK(fugw_loss(g1, g2, skew, {0.4, 0.0}) ==
          doctest::Approx(fgw_loss(g1, g2, skew, 0.4)).epsilon(1e-13));
    CHECK(fugw_loss(g1, g2, skew, {0.4, 0.9}) >= fgw_loss(g1, g2, skew, 0.4));
}

TEST_CASE("grad_plan matches central finite differences") {
    Rng rng(23);
    Graph g1 = random_graph(4, 2, rng), g2 = random_graph(5, 2, rng);
    Mat P = random_plan(4, 5, rng);
    for (LossParams params : {LossParams{0.0, 0.0}, LossParams{0.5, 0.0}, LossParams{0.7, 0.9}}) {
        const Mat G = grad_plan(g1, g2, P, params);
        double max_err = 0.0;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 5; ++j) {
                const double h = 1e-6 * std::max(1.0, std::abs(P(i, j)));
                Mat Pp = P, Pm = P;
                Pp(i, j) += h;
                Pm(i, j) -= h;
                const double fd = (fugw_loss(g1, g2, Pp, params) - fugw_loss(g1, g2, Pm, params)) / (2 * h);
                max_err = std::max(max_err, std::abs(fd - G(i, j)) / std::max(1.0, std::abs(fd)));
            }
        CHECK(max_err <= 1e-6);
    }
    // alpha = 0, rho = 0: gradient is exactly the feature cost
    const Mat G0 = grad_plan(g1, g2, P, {0.0, 0.0});
    CHECK((G0 - feature_cost(g1.F, g2.F)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("grad_plan needs positive marginals when rho > 0") {
    Rng rng(27);
    Graph g1 = random_graph(3, 2, rng), g2 = random_graph(3, 2, rng);
    Mat P = Mat::Zero(3, 3);
    P(0, 0) = 1.0;
    CHECK_THROWS_WITH_AS(grad_plan(g1, g2, P, {0.5, 0.9}), doctest::Contains("NonDifferentiablePoint"),
                         Error);
}

TEST_CASE("grad_features: zero plan, barycentric optimum, finite differences") {
    Rng rng(29);
    Graph g1 = random_graph(5, 3, rng);
    Mat F2(4, 3);
    for (auto& v : F2.reshaped()) v = rng.uniform(-1, 1);
    const Mat P = random_plan(5, 4, rng);

    CHECK(grad_features(g1, F2, Mat::Zero(5, 4), 0.3).cwiseAbs().maxCoeff() == 0.0);

    // optimal barycentric features zero the gradient
    const Vec colsum = P.colwise().sum().transpose();
    Mat Fopt = (P.transpose() * g1.F).array().colwise() / colsum.array();
    CHECK(grad_features(g1, Fopt, P, 0.3).cwiseAbs().maxCoeff() <= 1e-12);

    const double alpha = 0.3;
    const Mat G = grad_features(g1, F2, P, alpha);
    double max_err = 0.0;
    for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 3; ++k) {
            const double h = 1e-6;
            Mat Fp = F2, Fm = F2;
            Fp(j, k) += h;
            Fm(j, k) -= h;
            Graph gp, gm;
            auto wterm = [&](const Mat& F) {
                return feature_cost(g1.F, F).cwiseProduct(P).sum() * (1.0 - alpha);
            };
            const double fd = (wterm(Fp) - wterm(Fm)) / (2 * h);
            max_err = std::max(max_err, std::abs(fd - G(j, k)) / std::max(1.0, std::abs(fd)));
        }
    CHECK(max_err <= 1e-8);
}
