#include "otgdl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace otgdl {

void validate_graph(const Graph& g) {
    const int n = static_cast<int>(g.F.rows());
    const int d = static_cast<int>(g.F.cols());
    require(n >= 1 && d >= 1, "DimensionMismatch", "graph needs n >= 1 and d >= 1");
    require(g.C.rows() == n && g.C.cols() == n, "DimensionMismatch",
            "C must be n x n with n matching F");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j)
            require(std::isfinite(g.F(i, j)), "NonFiniteEntry", "F has a non-finite value");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            require(std::isfinite(g.C(i, j)), "NonFiniteEntry", "C has a non-finite value");
    for (int i = 0; i < n; ++i)
        require(g.C(i, i) == 0.0, "NonzeroDiagonal", "C diagonal must be exactly zero");
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            require(g.C(i, j) == g.C(j, i), "AsymmetricStructure", "C must equal its transpose");
}

Mat shortest_paths(const Mat& adjacency) {
    const int n = static_cast<int>(adjacency.rows());
    require(adjacency.cols() == n, "DimensionMismatch", "adjacency must be square");
    const double inf = std::numeric_limits<double>::infinity();

    // adjacency lists; dense input but kNN graphs are sparse in practice
    std::vector<std::vector<std::pair<int, double>>> adj(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && adjacency(i, j) > 0.0) adj[i].push_back({j, adjacency(i, j)});

    Mat dist(n, n);
    std::vector<double> du(n);
    using Item = std::pair<double, int>;
    for (int s = 0; s < n; ++s) {
        std::fill(du.begin(), du.end(), inf);
        du[s] = 0.0;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        pq.push({0.0, s});
        while (!pq.empty()) {
            auto [dcur, u] = pq.top();
            pq.pop();
            if (dcur > du[u]) continue;
            for (auto [v, w] : adj[u]) {
                const double nd = dcur + w;
                if (nd < du[v]) {
                    du[v] = nd;
                    pq.push({nd, v});
                }
            }
        }
        for (int j = 0; j < n; ++j) {
            require(std::isfinite(du[j]), "DisconnectedGraph", "unreachable node pair");
            dist(s, j) = du[j];
        }
    }
    // symmetrize away roundoff from differing relaxation orders
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double v = std::min(dist(i, j), dist(j, i));
            dist(i, j) = dist(j, i) = v;
        }
    return dist;
}

Graph normalize_structure(const Graph& g) {
    Graph out = g;
    if (g.n() == 1) return out;
    const double m = g.C.maxCoeff();
    require(m > 0.0, "DegenerateStructure", "C is all zeros");
    out.C /= m;
    return out;
}

Graph standardize_features(const Graph& g, const Vec& mean, const Vec& sd) {
    require(mean.size() == g.d() && sd.size() == g.d(), "DimensionMismatch",
            "feature statistics must match feature dimension");
    Graph out = g;
    for (int j = 0; j < g.d(); ++j) {
        out.F.col(j).array() -= mean(j);
        if (sd(j) > 0.0) out.F.col(j) /= sd(j);
    }
    return out;
}

} // namespace otgdl
