#include <doctest.h>

#include <algorithm>

#include "otgdl/linear_ot.hpp"
#include "otgdl/rng.hpp"

using namespace otgdl;

namespace {

// oracle for uniform marginals: vertices are scaled permutation matrices
double best_permutation_cost(const Mat& M) {
    const int n = static_cast<int>(M.rows());
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    double best = std::numeric_limits<double>::infinity();
    do {
        double c = 0;
        for (int i = 0; i < n; ++i) c += M(i, perm[i]);
        best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / n;
}

} // namespace

TEST_CASE("1x1 problem has the single feasible plan") {
    Mat M(1, 1);
    M(0, 0) = 3.7;
    auto res = solve_linear_ot_uniform(M);
    CHECK(res.plan.P(0, 0) == doctest::Approx(1.0));
    CHECK(res.cost == doctest::Approx(3.7));
}

TEST_CASE("2x2 swap cost picks the diagonal") {
    Mat M(2, 2);
    M << 0, 1, 1, 0;
    auto res = solve_linear_ot_uniform(M);
    CHECK(res.cost == doctest::Approx(0.0));
    CHECK(res.plan.P(0, 0) == doctest::Approx(0.5));
    CHECK(res.plan.P(1, 1) == doctest::Approx(0.5));
    CHECK(res.plan.P(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("n=3 matches the permutation-enumeration oracle") {
    Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        Mat M(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) M(i, j) = rng.uniform(-1, 5);
        auto res = solve_linear_ot_uniform(M);
        CHECK(res.cost == doctest::Approx(best_permutation_cost(M)).epsilon(1e-12));
    }
}

TEST_CASE("rectangular problems are feasible and beat the uniform plan") {
    Rng rng(29);
    for (int trial = 0; trial < 20; ++trial) {
        const int n1 = 2 + static_cast<int>(rng.below(8));
        const int n2 = 2 + static_cast<int>(rng.below(8));
        Mat M(n1, n2);
        for (int i = 0; i < n1; ++i)
            for (int j = 0; j < n2; ++j) M(i, j) = rng.uniform(0, 3);
        auto res = solve_linear_ot_uniform(M);
        CHECK(res.plan.marginal_violation() <= 1e-9);
        CHECK(res.plan.P.minCoeff() >= 0.0);
        const double uniform_cost = M.sum() / (n1 * n2);
        CHECK(res.cost <= uniform_cost + 1e-12);
    }
}

TEST_CASE("non-uniform marginals solve and dual certifies optimality bound") {
    Rng rng(31);
    const int n = 5;
    Mat M(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) M(i, j) = rng.uniform(0, 2);
    Vec a(n), b(n);
    for (int i = 0; i < n; ++i) a(i) = rng.uniform(0.1, 1.0);
    b = a.sum() / n * Vec::Ones(n);
    auto res = solve_linear_ot(M, a, b);
    CHECK((res.plan.P.rowwise().sum() - a).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((res.plan.P.colwise().sum().transpose() - b).cwiseAbs().maxCoeff() <= 1e-9);
    // greedy feasible plans cannot beat the optimum
    const double north_west = [&] {
        Vec ra = a, rb = b;
        double cost = 0;
        int i = 0, j = 0;
        while (i < n && j < n) {
            const double m = std::min(ra(i), rb(j));
            cost += m * M(i, j);
            ra(i) -= m;
            rb(j) -= m;
            if (ra(i) <= 1e-15) ++i;
            else ++j;
        }
        return cost;
    }();
    CHECK(res.cost <= north_west + 1e-9);
}

TEST_CASE("mass mismatch raises InfeasibleMarginals") {
    Mat M = Mat::Zero(2, 2);
    Vec a(2), b(2);
    a << 0.5, 0.5;
    b << 0.5, 0.6;
    CHECK_THROWS_WITH_AS(solve_linear_ot(M, a, b), doctest::Contains("InfeasibleMarginals"), Error);
}
