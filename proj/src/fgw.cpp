#include "otgdl/fgw.hpp"

#include <cmath>
#include <fstream>

namespace otgdl {

void FgwResult::write_trace_csv(const std::filesystem::path& path) const {
    std::ofstream f(path);
    require(f.good(), "IoError", "cannot open " + path.string());
    f << "iteration,loss,step\n";
    char buf[96];
    for (const auto& row : trace) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", row.iteration, row.loss, row.step);
        f << buf;
    }
}

double fgw_line_search(const Graph& g1, const Graph& g2, const Mat& P, const Mat& Q, double alpha) {
    const Mat D = Q - P;
    if (D.cwiseAbs().maxCoeff() == 0.0) return 0.0;
    // phi(t) = a t^2 + b t + c with
    //   a = alpha B(D, D)
    //   b = (1-alpha) <D_F, D> + 2 alpha B(P, D)   (B symmetric for symmetric C)
    const double a = alpha * gw_bilinear(g1.C, g2.C, D, D);
    const double b = (1.0 - alpha) * feature_cost(g1.F, g2.F).cwiseProduct(D).sum() +
                     2.0 * alpha * gw_bilinear(g1.C, g2.C, P, D);
    if (a > 0.0) {
        const double t = -b / (2.0 * a);
        return std::clamp(t, 0.0, 1.0);
    }
    // concave or linear in t: minimum at an endpoint
    return (a + b < 0.0) ? 1.0 : 0.0;
}

FgwResult solve_fgw(const Graph& g1, const Graph& g2, double alpha, const CgOptions& opts) {
    opts.check();
    require(alpha >= 0.0 && alpha <= 1.0, "OutOfRange", "alpha must lie in [0,1]");
    validate_graph(g1);
    validate_graph(g2);
    const int n1 = g1.n(), n2 = g2.n();
    const Vec a = Vec::Constant(n1, 1.0 / n1);
    const Vec b = Vec::Constant(n2, 1.0 / n2);

    FgwResult res;
    res.plan = opts.init ? TransportPlan{*opts.init} : TransportPlan::uniform(n1, n2);
    const Mat D_F = feature_cost(g1.F, g2.F);

    double loss = fgw_loss(g1, g2, res.plan.P, alpha);
    res.trace.push_back({0, loss, 0.0});
    for (int it = 1; it <= opts.max_iters; ++it) {
        const Mat grad = (1.0 - alpha) * D_F + 2.0 * alpha * gw_tensor(g1.C, g2.C, res.plan.P);
        const Mat Q = solve_linear_ot(grad, a, b).plan.P;
        const double t = fgw_line_search(g1, g2, res.plan.P, Q, alpha);
        res.plan.P += t * (Q - res.plan.P);
        const double new_loss = fgw_loss(g1, g2, res.plan.P, alpha);
        res.trace.push_back({it, new_loss, t});
        res.iterations = it;
        const double decrease = loss - new_loss;
        loss = new_loss;
        if (decrease <= opts.tol * std::max(1.0, std::abs(loss))) {
            res.converged = true;
            break;
        }
    }
    res.loss = loss;
    return res;
}

} // namespace otgdl
