#include "otgdl/checkpoint.hpp"

#include <cstring>
#include <sstream>

#include "otgdl/io_util.hpp"

namespace otgdl {

namespace {

constexpr char kMagic[] = "OTGDLCKPT";
constexpr std::size_t kMagicLen = 9;
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(out, bits);
}

class Reader {
public:
    Reader(const std::string& data, const std::string& origin) : data_(data), origin_(origin) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte()) << (8 * i);
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(byte()) << (8 * i);
        return v;
    }

    double f64() {
        const std::uint64_t bits = u64();
        double d;
        std::memcpy(&d, &bits, 8);
        return d;
    }

    std::string bytes(std::size_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool at_end() const { return pos_ == data_.size(); }

private:
    unsigned char byte() { return static_cast<unsigned char>(data_[pos_++]); }

    void need(std::size_t n) {
        require(pos_ + n <= data_.size(), "CorruptCheckpoint", origin_ + ": truncated checkpoint");
    }

    const std::string& data_;
    std::string origin_;
    std::size_t pos_ = 0;
};

std::string model_field(const std::string& config_text, const std::string& key) {
    std::istringstream is(config_text);
    std::string line;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string k, v;
        ls >> k >> v;
        if (k == key) return v;
    }
    fail("CorruptCheckpoint", "checkpoint config misses field " + key);
}

} // namespace

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    std::string out;
    out.append(kMagic, kMagicLen);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(ckpt.kind.size()));
    out += ckpt.kind;
    put_u64(out, ckpt.config_text.size());
    out += ckpt.config_text;
    put_u32(out, static_cast<std::uint32_t>(ckpt.arrays.size()));
    for (const auto& [name, t] : ckpt.arrays) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
        std::size_t numel = 1;
        for (int dim : t.shape) {
            put_u64(out, static_cast<std::uint64_t>(dim));
            numel *= static_cast<std::size_t>(dim);
        }
        require(numel == t.data.size(), "CorruptCheckpoint", "array shape/data mismatch on write");
        for (double v : t.data) put_f64(out, v);
    }
    write_text_atomic(path, out);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    const std::string data = read_text(path);
    Reader r(data, path.string());
    require(r.bytes(kMagicLen) == std::string(kMagic, kMagicLen), "CorruptCheckpoint",
            path.string() + ": bad magic");
    const std::uint32_t version = r.u32();
    require(version == kVersion, "VersionMismatch",
            path.string() + ": unsupported checkpoint version " + std::to_string(version));
    Checkpoint ckpt;
    ckpt.kind = r.bytes(r.u32());
    ckpt.config_text = r.bytes(r.u64());
    const std::uint32_t n_arrays = r.u32();
    for (std::uint32_t i = 0; i < n_arrays; ++i) {
        std::string name = r.bytes(r.u32());
        const std::uint32_t ndim = r.u32();
        require(ndim >= 1 && ndim <= 4, "CorruptCheckpoint", "bad array rank");
        std::vector<int> shape(ndim);
        std::size_t numel = 1;
        for (auto& dim : shape) {
            const std::uint64_t d = r.u64();
            require(d >= 1 && d <= (1ull << 32), "CorruptCheckpoint", "bad array dimension");
            dim = static_cast<int>(d);
            numel *= static_cast<std::size_t>(d);
        }
        Tensor t;
        t.shape = std::move(shape);
        t.data.resize(numel);
        for (auto& v : t.data) v = r.f64();
        ckpt.arrays.push_back({std::move(name), std::move(t)});
    }
    require(r.at_end(), "CorruptCheckpoint", path.string() + ": trailing bytes");
    return ckpt;
}

void save_predictor(const PredictorParams& params, const std::string& run_config_text,
                    const std::filesystem::path& path) {
    Checkpoint ckpt;
    ckpt.kind = "predictor";
    std::ostringstream os;
    os << "model.version " << params.version << "\n";
    os << "model.feature_dim " << params.feature_dim << "\n";
    os << run_config_text;
    ckpt.config_text = os.str();
    ckpt.arrays = params.weights;
    write_checkpoint(ckpt, path);
}

PredictorParams load_predictor(const std::filesystem::path& path) {
    Checkpoint ckpt = read_checkpoint(path);
    require(ckpt.kind == "predictor", "CorruptCheckpoint",
            path.string() + ": expected a predictor checkpoint, found kind " + ckpt.kind);
    PredictorParams params;
    params.version = std::stoi(model_field(ckpt.config_text, "model.version"));
    params.feature_dim = std::stoi(model_field(ckpt.config_text, "model.feature_dim"));
    auto& pc = params.config;
    pc.n_embed_layers = std::stoi(model_field(ckpt.config_text, "predictor.n_embed_layers"));
    pc.gcn_hidden = std::stoi(model_field(ckpt.config_text, "predictor.gcn_hidden"));
    pc.node_out_dim = std::stoi(model_field(ckpt.config_text, "predictor.node_out_dim"));
    pc.alpha_embed_dim = std::stoi(model_field(ckpt.config_text, "predictor.alpha_embed_dim"));
    pc.mlp_hidden = std::stoi(model_field(ckpt.config_text, "predictor.mlp_hidden"));
    pc.temperature = std::stod(model_field(ckpt.config_text, "predictor.temperature"));
    pc.head_balancing_steps = std::stoi(model_field(ckpt.config_text, "predictor.head_balancing_steps"));
    pc.affinity_bandwidth = std::stod(model_field(ckpt.config_text, "predictor.affinity_bandwidth"));
    params.weights = std::move(ckpt.arrays);
    require(params.all_finite(), "CorruptCheckpoint", "non-finite weights in checkpoint");
    return params;
}

void save_dictionary(const DictionaryModel& model, const std::string& run_config_text,
                     const std::filesystem::path& path) {
    Checkpoint ckpt;
    ckpt.kind = "dictionary";
    std::ostringstream os;
    os << "model.variant " << variant_name(model.variant) << "\n";
    os << "model.K " << model.K << "\n";
    os << "model.n " << model.n << "\n";
    os << "model.d " << model.d << "\n";
    os << "model.softbin_bins " << model.softbin_bins << "\n";
    os << "model.mlp_hidden " << model.mlp_hidden << "\n";
    os << run_config_text;
    ckpt.config_text = os.str();
    ckpt.arrays = model.weights;
    ckpt.arrays.push_back({"common_C", Tensor::from_mat(model.C)});
    write_checkpoint(ckpt, path);
}

DictionaryModel load_dictionary(const std::filesystem::path& path) {
    Checkpoint ckpt = read_checkpoint(path);
    require(ckpt.kind == "dictionary", "CorruptCheckpoint",
            path.string() + ": expected a dictionary checkpoint, found kind " + ckpt.kind);
    DictionaryModel model;
    model.variant = parse_variant(model_field(ckpt.config_text, "model.variant"));
    model.K = std::stoi(model_field(ckpt.config_text, "model.K"));
    model.n = std::stoi(model_field(ckpt.config_text, "model.n"));
    model.d = std::stoi(model_field(ckpt.config_text, "model.d"));
    model.softbin_bins = std::stoi(model_field(ckpt.config_text, "model.softbin_bins"));
    model.mlp_hidden = std::stoi(model_field(ckpt.config_text, "model.mlp_hidden"));
    bool found_c = false;
    for (auto& [name, t] : ckpt.arrays) {
        if (name == "common_C") {
            require(t.rows() == model.n && t.cols() == model.n, "CorruptCheckpoint",
                    "common_C shape mismatch");
            model.C = t.to_mat();
            found_c = true;
        } else {
            model.weights.push_back({name, std::move(t)});
        }
    }
    require(found_c, "CorruptCheckpoint", "dictionary checkpoint misses common_C");
    require(model.all_finite(), "CorruptCheckpoint", "non-finite weights in checkpoint");
    return model;
}

} // namespace otgdl
