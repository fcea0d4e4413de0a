#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "otgdl/graph.hpp"

namespace otgdl {

// Single-graph text container:
//   OTGDL-GRAPH
//   version 1
//   n <int> d <int>
//   n rows of d floats (F), n rows of n floats (C), then meta lines.
// Floats use 17 significant digits so read(write(g)) is bit-exact.
void write_graph(const Graph& g, const std::filesystem::path& path);
Graph read_graph(const std::filesystem::path& path);

enum class Split { Train, Val, Test };

const char* split_name(Split s);
Split parse_split(const std::string& s);

struct ManifestEntry {
    std::string path; // relative to the manifest file
    std::string subject_id;
    std::string contrast_id;
    Split split;
};

// One graph per entry line: `path subject_id contrast_id split`. Optional
// directive lines: `template <path>`, `featmean <v>...`, `featsd <v>...`
// (train-split feature statistics).
struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    std::string template_path;
    Vec feat_mean;
    Vec feat_sd;
    std::filesystem::path base_dir; // set on load; used to resolve paths

    std::filesystem::path resolve(const std::string& rel) const { return base_dir / rel; }

    std::vector<const ManifestEntry*> split_entries(Split s) const {
        std::vector<const ManifestEntry*> out;
        for (const auto& e : entries)
            if (e.split == s) out.push_back(&e);
        return out;
    }
};

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);

// Checks on load: every referenced file exists, and no subject id appears in
// two different splits.
DatasetManifest read_manifest(const std::filesystem::path& path);

// Loads an entry's graph and applies the manifest's feature standardization
// when statistics are present.
Graph load_graph(const DatasetManifest& m, const ManifestEntry& e);
Graph load_template(const DatasetManifest& m);

} // namespace otgdl
