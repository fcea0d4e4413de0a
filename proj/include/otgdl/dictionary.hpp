#pragma once

#include <string>
#include <vector>

#include "otgdl/graph_io.hpp"
#include "otgdl/softbin.hpp"
#include "otgdl/tape.hpp"

namespace otgdl {

enum class DictVariant { Fixed, LinearAlpha, SoftbinMLP };

const char* variant_name(DictVariant v);
DictVariant parse_variant(const std::string& s);

// K atoms of node features on a shared common geometry C, in one of three
// alpha-parameterizations:
//   Fixed      - atoms independent of alpha
//   LinearAlpha- alpha * endpoint0 + (1 - alpha) * endpoint1
//   SoftbinMLP - two-layer MLP over softbin(alpha) emits all K atoms
// Atom features are stored flattened: one (K x n*d) row-major tensor per
// parameter, row k = vec(atom k).
struct DictionaryModel {
    DictVariant variant = DictVariant::Fixed;
    int K = 1, n = 1, d = 1;
    int softbin_bins = 16;
    int mlp_hidden = 16;
    Mat C; // n x n common structure
    std::vector<std::pair<std::string, Tensor>> weights;

    const Tensor& find(const std::string& name) const;
    bool all_finite() const;
};

// Simplex weights reconstructing a graph from atoms.
struct Embedding {
    Vec omega;

    void check() const {
        require((omega.array() >= 0.0).all(), "OutOfRange", "embedding entries must be >= 0");
        require(std::abs(omega.sum() - 1.0) <= 1e-12, "OutOfRange", "embedding must sum to 1");
    }
};

// Binds dictionary parameters onto a tape; trainable=true exposes them as
// differentiable leaves.
class DictionaryNet {
public:
    DictionaryNet(Tape& tape, const DictionaryModel& model, bool trainable);

    // K x (n*d) atom features at this alpha
    Tape::Id atoms_at(double alpha);
    // omega_row: 1 x K node -> n x d reconstruction features
    Tape::Id reconstruct_features(Tape::Id omega_row, double alpha);

    const std::vector<Tape::Id>& weight_ids() const { return weight_ids_; }

private:
    Tape& tape_;
    const DictionaryModel& model_;
    std::vector<Tape::Id> weight_ids_;
};

// K x (n*d) atom features (plain evaluation, no tape).
Mat atoms_at(const DictionaryModel& model, double alpha);

// Graph with features sum_k omega_k atom_k and the model's C.
Graph reconstruct(const DictionaryModel& model, const Embedding& omega, double alpha);

// Atoms initialized from K randomly chosen common-geometry train graphs; C
// taken from the manifest's template. SoftbinMLP starts with the sampled
// atoms in its output bias and small random weights, so its atoms match the
// samples at every alpha.
DictionaryModel init_dictionary(const DatasetManifest& common, int K, DictVariant variant,
                                std::uint64_t seed);

} // namespace otgdl
