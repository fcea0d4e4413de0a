#pragma once

#include "otgdl/ot.hpp"

namespace otgdl {

struct LinearOtResult {
    TransportPlan plan;
    double cost = 0.0;
};

// Exact minimizer of <P, M> over the transport polytope with marginals
// (a, b), via successive shortest paths with node potentials on the dense
// bipartite network. Uniform marginals are solved in integer flow units so
// termination and feasibility are exact. Throws InfeasibleMarginals when the
// total masses differ by more than 1e-12.
LinearOtResult solve_linear_ot(const Mat& M, const Vec& a, const Vec& b);

// Convenience for the uniform-marginal case used everywhere in this project.
LinearOtResult solve_linear_ot_uniform(const Mat& M);

} // namespace otgdl
