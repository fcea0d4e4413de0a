#pragma once

#include "otgdl/tape.hpp"

namespace otgdl {

// Tape-side counterparts of the loss kernels, used wherever the loss must be
// differentiated through the plan (and possibly through reconstruction
// features). Structure matrices are always constants.

// sum_ij ||F1_i - F2_j||^2 P_ij with F1, F2, P tape nodes
inline Tape::Id tape_w_term(Tape& t, Tape::Id F1, Tape::Id F2, Tape::Id P) {
    const int n1 = t.val(F1).rows(), n2 = t.val(F2).rows();
    auto r1 = t.row_sum(t.mul(F1, F1));                      // n1 x 1
    auto r2 = t.row_sum(t.mul(F2, F2));                      // n2 x 1
    auto D = t.add(t.broadcast_col(r1, n2), t.broadcast_row(t.transpose(r2), n1));
    D = t.sub(D, t.scale(t.matmul(F1, t.transpose(F2)), 2.0));
    return t.reduce_sum(t.mul(D, P));
}

// sum_ijkl (C1_ik - C2_jl)^2 P_ij P_kl via the factored form
inline Tape::Id tape_gw_term(Tape& t, const Mat& C1, const Mat& C2, Tape::Id P) {
    auto p = t.row_sum(P); // n1 x 1
    auto q = t.col_sum(P); // 1 x n2
    auto t1 = t.reduce_sum(t.mul(t.matmul(t.constant(Mat(C1.array().square())), p), p));
    auto t2 = t.reduce_sum(t.mul(t.matmul(q, t.constant(Mat(C2.array().square()))), q));
    auto cross = t.reduce_sum(t.mul(t.matmul(t.matmul(t.constant(C1), P), t.constant(Mat(C2.transpose()))), P));
    return t.sub(t.add(t1, t2), t.scale(cross, 2.0));
}

inline Tape::Id tape_fgw_loss(Tape& t, Tape::Id F1, Tape::Id F2, const Mat& C1, const Mat& C2,
                              Tape::Id P, double alpha) {
    auto w = tape_w_term(t, F1, F2, P);
    auto gw = tape_gw_term(t, C1, C2, P);
    return t.add(t.scale(w, 1.0 - alpha), t.scale(gw, alpha));
}

// KL(mu (x) mu | nu (x) nu) with uniform nu of mass 1, mu = a strictly
// positive marginal node (n x 1)
inline Tape::Id tape_product_kl_uniform(Tape& t, Tape::Id mu, int n) {
    const Vec log_nu = Vec::Constant(n, std::log(1.0 / n));
    auto m = t.reduce_sum(mu);
    auto dot = t.reduce_sum(t.mul(mu, t.sub(t.log(mu), t.constant(Tensor::from_mat(log_nu)))));
    auto klgen = t.add(t.sub(dot, m), t.constant(1.0));
    auto d = t.sub(m, t.constant(1.0));
    return t.add(t.scale(t.mul(m, klgen), 2.0), t.mul(d, d));
}

inline Tape::Id tape_fugw_loss(Tape& t, Tape::Id F1, Tape::Id F2, const Mat& C1, const Mat& C2,
                               Tape::Id P, double alpha, double rho) {
    auto loss = tape_fgw_loss(t, F1, F2, C1, C2, P, alpha);
    if (rho > 0.0) {
        auto mu = t.row_sum(P);
        auto nu = t.transpose(t.col_sum(P));
        auto pen = t.add(tape_product_kl_uniform(t, mu, static_cast<int>(C1.rows())),
                         tape_product_kl_uniform(t, nu, static_cast<int>(C2.rows())));
        loss = t.add(loss, t.scale(pen, rho));
    }
    return loss;
}

} // namespace otgdl
