#pragma once

#include "otgdl/ot.hpp"

namespace otgdl {

struct LossParams {
    double alpha = 0.5; // feature/structure trade-off in [0,1]
    double rho = 0.0;   // marginal-penalty weight, >= 0

    void check() const {
        require(alpha >= 0.0 && alpha <= 1.0, "OutOfRange", "alpha must lie in [0,1]");
        require(rho >= 0.0, "OutOfRange", "rho must be >= 0");
    }
};

// (1-a) sum ||F1_i - F2_j||^2 P_ij + a sum (C1_ik - C2_jl)^2 P_ij P_kl.
// P need not be feasible; entries must be >= 0.
double fgw_loss(const Graph& g1, const Graph& g2, const Mat& P, double alpha);

// Direct four-index summation, n1, n2 <= 16. Reference for fgw_loss.
double fgw_loss_quartic_oracle(const Graph& g1, const Graph& g2, const Mat& P, double alpha);

// KL(mu (x) mu | nu (x) nu) for nonnegative vectors, via the closed form
// 2 m(mu) KLgen(mu|nu) + (m(mu) - m(nu))^2 with the generalized
// (unnormalized) KL. Throws ZeroReference if nu_i = 0 while mu_i > 0.
double product_kl(const Vec& mu, const Vec& nu);

// Direct double-sum form, kept as the test oracle for product_kl.
double product_kl_double_sum(const Vec& mu, const Vec& nu);

// fgw_loss plus rho * (product_kl of each marginal against uniform mass).
double fugw_loss(const Graph& g1, const Graph& g2, const Mat& P, const LossParams& params);

// Analytic d fugw / d P. Requires P > 0 wherever the KL terms are active
// (throws NonDifferentiablePoint otherwise when rho > 0).
Mat grad_plan(const Graph& g1, const Graph& g2, const Mat& P, const LossParams& params);

// Gradient of the Wasserstein term w.r.t. the reconstruction features F2:
// row j = 2 (1-a) [ F2_j (P^T 1)_j - (P^T F1)_j ].
Mat grad_features(const Graph& g1, const Mat& F2, const Mat& P, double alpha);

} // namespace otgdl
