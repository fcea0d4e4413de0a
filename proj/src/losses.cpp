#include "otgdl/losses.hpp"

#include <cmath>

namespace otgdl {

namespace {

void check_pair_shapes(const Graph& g1, const Graph& g2, const Mat& P) {
    require(g1.d() == g2.d(), "ShapeMismatch", "feature dimensions differ");
    require(P.rows() == g1.n() && P.cols() == g2.n(), "ShapeMismatch",
            "plan shape inconsistent with graphs");
}

// generalized KL: sum x log(x/y) - m(x) + m(y), with 0 log 0 := 0
double kl_gen(const Vec& x, const Vec& y) {
    double s = 0.0;
    for (int i = 0; i < x.size(); ++i) {
        if (x(i) > 0.0) {
            require(y(i) > 0.0, "ZeroReference", "KL reference has a zero where mu > 0");
            s += x(i) * std::log(x(i) / y(i));
        }
    }
    return s - x.sum() + y.sum();
}

} // namespace

double fgw_loss(const Graph& g1, const Graph& g2, const Mat& P, double alpha) {
    check_pair_shapes(g1, g2, P);
    require(alpha >= 0.0 && alpha <= 1.0, "OutOfRange", "alpha must lie in [0,1]");
    // each term is a sum of squares times nonnegative weights; clamp the
    // factored forms' roundoff so the loss never dips below zero
    const double w = std::max(0.0, feature_cost(g1.F, g2.F).cwiseProduct(P).sum());
    const double gw = std::max(0.0, gw_tensor(g1.C, g2.C, P).cwiseProduct(P).sum());
    return (1.0 - alpha) * w + alpha * gw;
}

double fgw_loss_quartic_oracle(const Graph& g1, const Graph& g2, const Mat& P, double alpha) {
    check_pair_shapes(g1, g2, P);
    const int n1 = g1.n(), n2 = g2.n();
    require(n1 <= 16 && n2 <= 16, "SizeGuardExceeded", "quartic oracle is limited to n <= 16");
    double w = 0.0;
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j)
            w += (g1.F.row(i) - g2.F.row(j)).squaredNorm() * P(i, j);
    double gw = 0.0;
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j)
            for (int k = 0; k < n1; ++k)
                for (int l = 0; l < n2; ++l) {
                    const double d = g1.C(i, k) - g2.C(j, l);
                    gw += d * d * P(i, j) * P(k, l);
                }
    return (1.0 - alpha) * w + alpha * gw;
}

double product_kl(const Vec& mu, const Vec& nu) {
    require(mu.size() == nu.size(), "ShapeMismatch", "vector lengths differ");
    require((mu.array() >= 0.0).all(), "OutOfRange", "mu must be nonnegative");
    const double mm = mu.sum(), mn = nu.sum();
    return 2.0 * mm * kl_gen(mu, nu) + (mm - mn) * (mm - mn);
}

double product_kl_double_sum(const Vec& mu, const Vec& nu) {
    const int n = static_cast<int>(mu.size());
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double x = mu(i) * mu(j);
            if (x > 0.0) s += x * std::log(x / (nu(i) * nu(j)));
        }
    const double mm = mu.sum(), mn = nu.sum();
    return s - mm * mm + mn * mn;
}

double fugw_loss(const Graph& g1, const Graph& g2, const Mat& P, const LossParams& params) {
    params.check();
    double loss = fgw_loss(g1, g2, P, params.alpha);
    if (params.rho > 0.0) {
        const Vec mass1 = Vec::Constant(g1.n(), 1.0 / g1.n());
        const Vec mass2 = Vec::Constant(g2.n(), 1.0 / g2.n());
        loss += params.rho * (product_kl(P.rowwise().sum(), mass1) +
                              product_kl(P.colwise().sum().transpose(), mass2));
    }
    return loss;
}

Mat grad_plan(const Graph& g1, const Graph& g2, const Mat& P, const LossParams& params) {
    params.check();
    check_pair_shapes(g1, g2, P);
    Mat G = (1.0 - params.alpha) * feature_cost(g1.F, g2.F) +
            2.0 * params.alpha * gw_tensor(g1.C, g2.C, P);
    if (params.rho > 0.0) {
        // d/dmu_i [2 m KLgen(mu|nu) + (m - mn)^2]
        //   = 2 KLgen(mu|nu) + 2 m log(mu_i/nu_i) + 2 (m - mn)
        // then dmu_i/dP_ij = 1 (row marginal), same per column.
        const Vec mu = P.rowwise().sum();
        const Vec nuv = P.colwise().sum().transpose();
        const Vec mass1 = Vec::Constant(g1.n(), 1.0 / g1.n());
        const Vec mass2 = Vec::Constant(g2.n(), 1.0 / g2.n());
        require((mu.array() > 0.0).all() && (nuv.array() > 0.0).all(), "NonDifferentiablePoint",
                "KL penalty gradient needs strictly positive marginals");
        const double klr = kl_gen(mu, mass1), klc = kl_gen(nuv, mass2);
        const double mr = mu.sum(), mc = nuv.sum();
        Vec dr(g1.n()), dc(g2.n());
        for (int i = 0; i < g1.n(); ++i)
            dr(i) = 2.0 * klr + 2.0 * mr * std::log(mu(i) / mass1(i)) + 2.0 * (mr - 1.0);
        for (int j = 0; j < g2.n(); ++j)
            dc(j) = 2.0 * klc + 2.0 * mc * std::log(nuv(j) / mass2(j)) + 2.0 * (mc - 1.0);
        G += params.rho * (dr.replicate(1, g2.n()) + dc.transpose().replicate(g1.n(), 1));
    }
    return G;
}

Mat grad_features(const Graph& g1, const Mat& F2, const Mat& P, double alpha) {
    require(g1.d() == F2.cols(), "ShapeMismatch", "feature dimensions differ");
    require(P.rows() == g1.n() && P.cols() == F2.rows(), "ShapeMismatch",
            "plan shape inconsistent with features");
    const Vec colsum = P.colwise().sum().transpose();
    Mat G = F2.array().colwise() * colsum.array();
    G.noalias() -= P.transpose() * g1.F;
    return 2.0 * (1.0 - alpha) * G;
}

} // namespace otgdl
