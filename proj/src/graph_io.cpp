#include "otgdl/graph_io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace otgdl {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

[[noreturn]] void parse_fail(const std::filesystem::path& path, int line, const std::string& what) {
    fail("ParseError", path.string() + ":" + std::to_string(line) + ": " + what);
}

} // namespace

void write_graph(const Graph& g, const std::filesystem::path& path) {
    validate_graph(g);
    std::ostringstream os;
    os << "OTGDL-GRAPH\n";
    os << "version 1\n";
    os << "n " << g.n() << " d " << g.d() << "\n";
    for (int i = 0; i < g.n(); ++i) {
        for (int j = 0; j < g.d(); ++j) os << (j ? " " : "") << fmt17(g.F(i, j));
        os << "\n";
    }
    for (int i = 0; i < g.n(); ++i) {
        for (int j = 0; j < g.n(); ++j) os << (j ? " " : "") << fmt17(g.C(i, j));
        os << "\n";
    }
    if (!g.subject_id.empty()) os << "meta subject " << g.subject_id << "\n";
    if (!g.contrast_id.empty()) os << "meta contrast " << g.contrast_id << "\n";

    // write-then-rename so readers never observe a partial file
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        require(f.good(), "IoError", "cannot open " + tmp + " for writing");
        f << os.str();
        require(f.good(), "IoError", "short write to " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

Graph read_graph(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), "IoError", "cannot open " + path.string());
    int lineno = 0;
    std::string line;

    auto next_line = [&]() {
        if (!std::getline(f, line)) parse_fail(path, lineno + 1, "unexpected end of file");
        ++lineno;
    };

    next_line();
    if (line != "OTGDL-GRAPH") parse_fail(path, lineno, "bad magic token");
    next_line();
    {
        std::istringstream is(line);
        std::string kw;
        long v = -1;
        is >> kw >> v;
        if (kw != "version" || is.fail()) parse_fail(path, lineno, "expected version line");
        require(v == 1, "VersionMismatch", path.string() + ": unsupported graph format version " + std::to_string(v));
    }
    int n = 0, d = 0;
    next_line();
    {
        std::istringstream is(line);
        std::string kn, kd;
        is >> kn >> n >> kd >> d;
        if (kn != "n" || kd != "d" || is.fail() || n < 1 || d < 1)
            parse_fail(path, lineno, "expected `n <int> d <int>`");
    }
    Graph g;
    g.F.resize(n, d);
    g.C.resize(n, n);
    for (int i = 0; i < n; ++i) {
        next_line();
        std::istringstream is(line);
        for (int j = 0; j < d; ++j) {
            if (!(is >> g.F(i, j))) parse_fail(path, lineno, "feature row has too few values");
        }
    }
    for (int i = 0; i < n; ++i) {
        next_line();
        std::istringstream is(line);
        for (int j = 0; j < n; ++j) {
            if (!(is >> g.C(i, j))) parse_fail(path, lineno, "structure row has too few values");
        }
    }
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream is(line);
        std::string kw, key;
        is >> kw >> key;
        if (kw != "meta" || is.fail()) parse_fail(path, lineno, "expected meta line");
        std::string value;
        std::getline(is, value);
        if (!value.empty() && value[0] == ' ') value.erase(0, 1);
        if (key == "subject") g.subject_id = value;
        else if (key == "contrast") g.contrast_id = value;
        // unknown meta keys are preserved-by-ignore: readers only need labels
    }
    return g;
}

const char* split_name(Split s) {
    switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    }
    return "?";
}

Split parse_split(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Val;
    if (s == "test") return Split::Test;
    fail("ParseError", "unknown split tag `" + s + "`");
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
    std::ostringstream os;
    if (!m.template_path.empty()) os << "template " << m.template_path << "\n";
    if (m.feat_mean.size() > 0) {
        os << "featmean";
        for (int j = 0; j < m.feat_mean.size(); ++j) os << " " << fmt17(m.feat_mean(j));
        os << "\n";
        os << "featsd";
        for (int j = 0; j < m.feat_sd.size(); ++j) os << " " << fmt17(m.feat_sd(j));
        os << "\n";
    }
    for (const auto& e : m.entries)
        os << e.path << " " << e.subject_id << " " << e.contrast_id << " " << split_name(e.split) << "\n";
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        require(f.good(), "IoError", "cannot open " + tmp + " for writing");
        f << os.str();
    }
    std::filesystem::rename(tmp, path);
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream f(path);
    require(f.good(), "IoError", "cannot open " + path.string());
    DatasetManifest m;
    m.base_dir = path.parent_path();
    std::string line;
    int lineno = 0;
    std::vector<double> mean, sd;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream is(line);
        std::string first;
        is >> first;
        if (first == "template") {
            is >> m.template_path;
        } else if (first == "featmean" || first == "featsd") {
            auto& dst = (first == "featmean") ? mean : sd;
            double v;
            while (is >> v) dst.push_back(v);
        } else {
            ManifestEntry e;
            e.path = first;
            std::string split;
            is >> e.subject_id >> e.contrast_id >> split;
            if (is.fail()) parse_fail(path, lineno, "expected `path subject contrast split`");
            e.split = parse_split(split);
            m.entries.push_back(std::move(e));
        }
    }
    m.feat_mean = Eigen::Map<Vec>(mean.data(), static_cast<long>(mean.size()));
    m.feat_sd = Eigen::Map<Vec>(sd.data(), static_cast<long>(sd.size()));

    std::map<std::string, Split> subject_split;
    for (const auto& e : m.entries) {
        require(std::filesystem::exists(m.resolve(e.path)), "IoError",
                "manifest references missing file " + e.path);
        auto [it, inserted] = subject_split.insert({e.subject_id, e.split});
        require(inserted || it->second == e.split, "SplitLeak",
                "subject " + e.subject_id + " appears in two splits");
    }
    if (!m.template_path.empty())
        require(std::filesystem::exists(m.resolve(m.template_path)), "IoError",
                "manifest references missing template " + m.template_path);
    return m;
}

Graph load_graph(const DatasetManifest& m, const ManifestEntry& e) {
    Graph g = read_graph(m.resolve(e.path));
    if (m.feat_mean.size() == g.d()) g = standardize_features(g, m.feat_mean, m.feat_sd);
    return g;
}

Graph load_template(const DatasetManifest& m) {
    require(!m.template_path.empty(), "IoError", "manifest has no template path");
    Graph g = read_graph(m.resolve(m.template_path));
    if (m.feat_mean.size() == g.d()) g = standardize_features(g, m.feat_mean, m.feat_sd);
    return g;
}

} // namespace otgdl
