#pragma once

#include "otgdl/graph.hpp"

namespace otgdl {

// Coupling between the nodes of two graphs. Target marginals are always the
// uniform masses 1/n1 and 1/n2; predicted plans may violate them, exact
// solver output satisfies them to 1e-9.
struct TransportPlan {
    Mat P; // n1 x n2, entries >= 0

    int n1() const { return static_cast<int>(P.rows()); }
    int n2() const { return static_cast<int>(P.cols()); }

    Vec row_marginal() const { return P.rowwise().sum(); }
    Vec col_marginal() const { return P.colwise().sum().transpose(); }
    double mass() const { return P.sum(); }

    // max deviation from the uniform target marginals
    double marginal_violation() const {
        const double a = 1.0 / n1(), b = 1.0 / n2();
        return std::max((row_marginal().array() - a).abs().maxCoeff(),
                        (col_marginal().array() - b).abs().maxCoeff());
    }

    static TransportPlan uniform(int n1, int n2) {
        TransportPlan t;
        t.P = Mat::Constant(n1, n2, 1.0 / (static_cast<double>(n1) * n2));
        return t;
    }

    static TransportPlan scaled_identity(int n) {
        TransportPlan t;
        t.P = Mat::Identity(n, n) / static_cast<double>(n);
        return t;
    }
};

// Square-loss Gromov tensor T[i,j] = sum_{k,l} (C1[i,k] - C2[j,l])^2 P[k,l],
// via the factored form in O(n1^2 n2 + n1 n2^2). <T, P> is the quartic
// Gromov term of the FGW loss.
inline Mat gw_tensor(const Mat& C1, const Mat& C2, const Mat& P) {
    require(C1.rows() == P.rows() && C2.rows() == P.cols(), "ShapeMismatch",
            "gw_tensor shapes inconsistent with plan");
    const Vec p = P.rowwise().sum();
    const Vec q = P.colwise().sum().transpose();
    const Vec c1 = (C1.array().square().matrix() * p);            // n1
    const Vec c2 = (C2.array().square().matrix() * q);            // n2
    Mat T = c1.replicate(1, P.cols()) + c2.transpose().replicate(P.rows(), 1);
    T.noalias() -= 2.0 * (C1 * P * C2.transpose());
    return T;
}

// Bilinear form B(X, Y) = sum_{ijkl} (C1[i,k] - C2[j,l])^2 X[k,l] Y[i,j];
// symmetric in (X, Y) for symmetric C. Used by the exact line search.
inline double gw_bilinear(const Mat& C1, const Mat& C2, const Mat& X, const Mat& Y) {
    return gw_tensor(C1, C2, X).cwiseProduct(Y).sum();
}

// Squared-distance feature cost D[i,j] = ||F1_i - F2_j||^2.
inline Mat feature_cost(const Mat& F1, const Mat& F2) {
    require(F1.cols() == F2.cols(), "ShapeMismatch", "feature dimensions differ");
    const Vec r1 = F1.rowwise().squaredNorm();
    const Vec r2 = F2.rowwise().squaredNorm();
    Mat D = r1.replicate(1, F2.rows()) + r2.transpose().replicate(F1.rows(), 1);
    D.noalias() -= 2.0 * (F1 * F2.transpose());
    return D.cwiseMax(0.0);
}

} // namespace otgdl
