#pragma once

#include <filesystem>
#include <vector>

#include "otgdl/linear_ot.hpp"
#include "otgdl/losses.hpp"

namespace otgdl {

struct CgOptions {
    int max_iters = 200;
    double tol = 1e-9; // relative loss-decrease stopping threshold
    const Mat* init = nullptr; // nullptr -> uniform product plan

    void check() const {
        require(max_iters >= 1, "OutOfRange", "max_iters must be >= 1");
        require(tol > 0.0, "OutOfRange", "tol must be > 0");
    }
};

struct CgTraceRow {
    int iteration;
    double loss;
    double step;
};

struct FgwResult {
    TransportPlan plan;
    double loss = 0.0;
    int iterations = 0;
    bool converged = false; // false = max_iters hit; not an error
    std::vector<CgTraceRow> trace;

    void write_trace_csv(const std::filesystem::path& path) const;
};

// Exact minimizer over t in [0,1] of the FGW loss restricted to
// P + t (Q - P); the loss is a quadratic in t (the Gromov term supplies the
// quadratic coefficient). Ties and degenerate quadratics resolve by endpoint
// comparison; Q == P returns 0.
double fgw_line_search(const Graph& g1, const Graph& g2, const Mat& P, const Mat& Q, double alpha);

// Conditional gradient on the transport polytope: linearized subproblems via
// solve_linear_ot, exact line search, uniform product-plan init. Returns the
// best iterate when max_iters is reached (non-convergence is not an error).
FgwResult solve_fgw(const Graph& g1, const Graph& g2, double alpha, const CgOptions& opts = {});

} // namespace otgdl
