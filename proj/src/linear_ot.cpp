#include "otgdl/linear_ot.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace otgdl {

namespace {

// Transportation problem on the complete bipartite network, uncapacitated
// arcs. Supplies/demands are doubles; callers that pass integer-valued
// amounts get exact termination (x - x == 0). Nodes: 0..n1-1 sources,
// n1..n1+n2-1 sinks.
class SspSolver {
public:
    SspSolver(const Mat& M, Vec supply, Vec demand)
        : M_(M), supply_(std::move(supply)), demand_(std::move(demand)),
          n1_(static_cast<int>(M.rows())), n2_(static_cast<int>(M.cols())),
          flow_(Mat::Zero(n1_, n2_)), pi_src_(Vec::Zero(n1_)), pi_snk_(n2_) {
        // initial sink potentials keep every forward reduced cost >= 0
        for (int j = 0; j < n2_; ++j) pi_snk_(j) = M_.col(j).minCoeff();
    }

    Mat solve(double eps) {
        const int nv = n1_ + n2_;
        std::vector<double> dist(nv);
        std::vector<int> parent(nv);
        std::vector<char> done(nv);
        const double inf = std::numeric_limits<double>::infinity();

        while (true) {
            double remaining = 0.0;
            for (int i = 0; i < n1_; ++i) remaining = std::max(remaining, supply_(i));
            if (remaining <= eps) break;

            // dense Dijkstra over reduced costs from all positive-supply sources
            std::fill(dist.begin(), dist.end(), inf);
            std::fill(parent.begin(), parent.end(), -1);
            std::fill(done.begin(), done.end(), 0);
            for (int i = 0; i < n1_; ++i)
                if (supply_(i) > eps) dist[i] = 0.0;

            for (int it = 0; it < nv; ++it) {
                int u = -1;
                double best = inf;
                for (int v = 0; v < nv; ++v)
                    if (!done[v] && dist[v] < best) {
                        best = dist[v];
                        u = v;
                    }
                if (u < 0) break;
                done[u] = 1;
                if (u < n1_) {
                    const int i = u;
                    for (int j = 0; j < n2_; ++j) {
                        const double rc = std::max(0.0, M_(i, j) + pi_src_(i) - pi_snk_(j));
                        const int v = n1_ + j;
                        if (dist[u] + rc < dist[v]) {
                            dist[v] = dist[u] + rc;
                            parent[v] = u;
                        }
                    }
                } else {
                    const int j = u - n1_;
                    for (int i = 0; i < n1_; ++i) {
                        if (flow_(i, j) <= 0.0) continue;
                        const double rc = std::max(0.0, pi_snk_(j) - pi_src_(i) - M_(i, j));
                        if (dist[u] + rc < dist[i]) {
                            dist[i] = dist[u] + rc;
                            parent[i] = u;
                        }
                    }
                }
            }

            int t = -1;
            double best = inf;
            for (int j = 0; j < n2_; ++j)
                if (demand_(j) > eps && dist[n1_ + j] < best) {
                    best = dist[n1_ + j];
                    t = n1_ + j;
                }
            require(t >= 0, "InfeasibleMarginals", "no augmenting path; masses inconsistent");

            for (int i = 0; i < n1_; ++i)
                if (std::isfinite(dist[i])) pi_src_(i) += std::min(dist[i], dist[t]);
            for (int j = 0; j < n2_; ++j)
                if (std::isfinite(dist[n1_ + j])) pi_snk_(j) += std::min(dist[n1_ + j], dist[t]);

            // bottleneck along the path back to a source
            double delta = demand_(t - n1_);
            for (int v = t; parent[v] >= 0; v = parent[v]) {
                const int u = parent[v];
                if (u >= n1_) delta = std::min(delta, flow_(v, u - n1_)); // backward arc
            }
            int head = t;
            while (parent[head] >= 0) head = parent[head];
            delta = std::min(delta, supply_(head));

            for (int v = t; parent[v] >= 0; v = parent[v]) {
                const int u = parent[v];
                if (u < n1_) flow_(u, v - n1_) += delta;
                else flow_(v, u - n1_) -= delta;
            }
            supply_(head) -= delta;
            demand_(t - n1_) -= delta;
        }
        return flow_;
    }

private:
    const Mat& M_;
    Vec supply_, demand_;
    int n1_, n2_;
    Mat flow_;
    Vec pi_src_, pi_snk_;
};

} // namespace

LinearOtResult solve_linear_ot(const Mat& M, const Vec& a, const Vec& b) {
    const int n1 = static_cast<int>(M.rows()), n2 = static_cast<int>(M.cols());
    require(a.size() == n1 && b.size() == n2, "ShapeMismatch", "marginal lengths");
    require(M.allFinite(), "NonFiniteEntry", "cost matrix has non-finite entries");
    require((a.array() > 0.0).all() && (b.array() > 0.0).all(), "OutOfRange",
            "marginals must be strictly positive");
    const double mass_a = a.sum(), mass_b = b.sum();
    require(std::abs(mass_a - mass_b) <= 1e-12, "InfeasibleMarginals",
            "total masses differ by more than 1e-12");

    LinearOtResult res;
    const bool uniform = (a.array() == a(0)).all() && (b.array() == b(0)).all();
    if (uniform) {
        // integer flow units: every source holds n2, every sink n1
        SspSolver s(M, Vec::Constant(n1, static_cast<double>(n2)),
                    Vec::Constant(n2, static_cast<double>(n1)));
        res.plan.P = s.solve(0.0) * (mass_a / (static_cast<double>(n1) * n2));
    } else {
        SspSolver s(M, a, b);
        res.plan.P = s.solve(1e-14 * mass_a);
    }
    res.cost = res.plan.P.cwiseProduct(M).sum();
    return res;
}

LinearOtResult solve_linear_ot_uniform(const Mat& M) {
    const int n1 = static_cast<int>(M.rows()), n2 = static_cast<int>(M.cols());
    return solve_linear_ot(M, Vec::Constant(n1, 1.0 / n1), Vec::Constant(n2, 1.0 / n2));
}

} // namespace otgdl
