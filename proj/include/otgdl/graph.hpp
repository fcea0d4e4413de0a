#pragma once

#include <string>

#include "otgdl/tensor.hpp"

namespace otgdl {

// Attributed graph: node features F (n x d) and pairwise structure C (n x n,
// symmetric, zero diagonal). Node mass is uniform 1/n throughout and is not
// stored. meta keys "subject" and "contrast" carry dataset labels.
struct Graph {
    Mat F; // n x d
    Mat C; // n x n
    std::string subject_id;
    std::string contrast_id;

    int n() const { return static_cast<int>(F.rows()); }
    int d() const { return static_cast<int>(F.cols()); }
    double mass() const { return 1.0 / static_cast<double>(n()); }
};

// Throws on the first violated invariant: AsymmetricStructure,
// NonzeroDiagonal, NonFiniteEntry, DimensionMismatch.
void validate_graph(const Graph& g);

// All-pairs shortest paths over a nonnegative symmetric edge-weight matrix
// (0 = no edge, off-diagonal). Throws DisconnectedGraph if any pair is
// unreachable.
Mat shortest_paths(const Mat& adjacency);

// Divides C by its max entry. Identity on 1-node graphs; throws
// DegenerateStructure when C is all zeros with n > 1.
Graph normalize_structure(const Graph& g);

// Per-dimension z-scoring with externally supplied statistics (train-split
// moments live in the manifest). Dimensions with sd <= 0 are left centered.
Graph standardize_features(const Graph& g, const Vec& mean, const Vec& sd);

} // namespace otgdl
