#include "mrmn/parameters.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "mrmn/data.hpp"
#include "mrmn/error.hpp"
#include "mrmn/kernels.hpp"
#include "mrmn/rng.hpp"

namespace mrmn {

double margin_for(const HyperParams& hp, const std::string& type_name) {
    auto it = hp.margins.find(type_name);
    if (it == hp.margins.end())
        throw ConfigError("no margin configured for feedback type '" + type_name + "'");
    if (it->second < 0.0)
        throw ConfigError("margin for feedback type '" + type_name + "' is negative");
    return it->second;
}

void validate(const HyperParams& hp, const Dataset& dataset) {
    if (hp.d < 1) throw ConfigError("embedding dimension must be at least 1");
    if (hp.slots < 1) throw ConfigError("slot count must be at least 1");
    if (!(hp.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (hp.k < 1) throw ConfigError("ranking cutoff K must be at least 1");
    for (const auto& name : dataset.type_names) margin_for(hp, name);
}

bool ModelParameters::all_finite() const {
    if (!user_embeddings.all_finite() || !item_embeddings.all_finite() || !memory.all_finite())
        return false;
    return std::all_of(keys.begin(), keys.end(), [](const Matrix& m) { return m.all_finite(); });
}

ModelParameters init_parameters(const HyperParams& hp, std::size_t n_users, std::size_t n_items,
                                const std::vector<std::string>& type_names,
                                std::size_t slots_override) {
    if (n_users < 1 || n_items < 1) throw ConfigError("need at least one user and one item");
    if (hp.d < 1) throw ConfigError("embedding dimension must be at least 1");
    const std::size_t slots = slots_override == SIZE_MAX ? hp.slots : slots_override;

    const double bound = 1.0 / std::sqrt(static_cast<double>(hp.d));
    Rng rng(derive_seed(hp.seed, seed_stream::init));
    auto fill = [&](Matrix& m) {
        double* p = m.data();
        for (std::size_t k = 0; k < m.size(); ++k) p[k] = rng.next_uniform(-bound, bound);
    };

    ModelParameters params;
    params.type_names = type_names;
    params.user_embeddings = Matrix(n_users, hp.d);
    params.item_embeddings = Matrix(n_items, hp.d);
    fill(params.user_embeddings);
    fill(params.item_embeddings);
    params.keys.reserve(type_names.size());
    for (std::size_t t = 0; t < type_names.size(); ++t) {
        params.keys.emplace_back(slots, hp.d);
        fill(params.keys.back());
    }
    params.memory = Matrix(slots, hp.d);
    fill(params.memory);
    return params;
}

void project_unit_ball(std::span<double> vec) {
    double norm_sq = kernels::squared_norm(vec.data(), vec.size());
    if (norm_sq <= 1.0) return;
    kernels::scale(vec.data(), 1.0 / std::sqrt(norm_sq), vec.size());
}

// ---------------------------------------------------------------------------
// Checkpoint format (all integers little-endian):
//   magic "MRMNCKPT" | version u32 | d u32 | N u32 | n_users u64 | n_items u64
//   | t u32 | per type (dense order): name_len u32, name bytes, margin f64
//   | matrices, each framed as rows u64, cols u64, then rows*cols f64
//     row-major: U, V, K^tau for tau in type-NAME-sorted order (d x N), M.
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'M', 'R', 'M', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int k = 0; k < 4; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xFF);
    out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xFF);
    out.write(b, 8);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw CheckpointTruncatedError("checkpoint truncated");
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(b[k]) << (8 * k);
    return v;
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8))
        throw CheckpointTruncatedError("checkpoint truncated");
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
    return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

void put_matrix(std::ostream& out, const Matrix& m) {
    put_u64(out, m.rows());
    put_u64(out, m.cols());
    for (std::size_t k = 0; k < m.size(); ++k) put_f64(out, m.data()[k]);
}

Matrix get_matrix(std::istream& in, std::size_t want_rows, std::size_t want_cols,
                  const char* what) {
    std::uint64_t rows = get_u64(in);
    std::uint64_t cols = get_u64(in);
    if (rows != want_rows || cols != want_cols)
        throw CheckpointDimensionError(std::string(what) + ": stored " + std::to_string(rows) +
                                       "x" + std::to_string(cols) + ", header implies " +
                                       std::to_string(want_rows) + "x" +
                                       std::to_string(want_cols));
    Matrix m(rows, cols);
    for (std::size_t k = 0; k < m.size(); ++k) m.data()[k] = get_f64(in);
    return m;
}

// Dense-order indices sorted by type name; fixes the K^tau block order.
std::vector<std::size_t> name_sorted_order(const std::vector<std::string>& names) {
    std::vector<std::size_t> order(names.size());
    for (std::size_t k = 0; k < names.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return names[a] < names[b]; });
    return order;
}

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) t.at(c, r) = m.at(r, c);
    return t;
}

}  // namespace

void save_checkpoint(const ModelParameters& params, const HyperParams& hp,
                     const std::string& path) {
    if (!params.all_finite()) throw Error("refusing to checkpoint non-finite parameters");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open checkpoint for writing: " + path);

    out.write(kMagic, sizeof(kMagic));
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(params.dim()));
    put_u32(out, static_cast<std::uint32_t>(params.slot_count()));
    put_u64(out, params.user_embeddings.rows());
    put_u64(out, params.item_embeddings.rows());
    put_u32(out, static_cast<std::uint32_t>(params.type_names.size()));
    for (const auto& name : params.type_names) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_f64(out, margin_for(hp, name));
    }

    put_matrix(out, params.user_embeddings);
    put_matrix(out, params.item_embeddings);
    for (std::size_t idx : name_sorted_order(params.type_names)) {
        put_matrix(out, transpose(params.keys[idx]));  // stored as d x N
    }
    put_matrix(out, params.memory);

    if (!out) throw Error("write failed for checkpoint: " + path);
}

std::pair<ModelParameters, HyperParams> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint: " + path);

    char magic[8];
    if (!in.read(magic, sizeof(magic))) throw CheckpointTruncatedError("checkpoint truncated");
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw CheckpointFormatError("bad magic bytes; not a checkpoint file");

    std::uint32_t version = get_u32(in);
    if (version != kVersion)
        throw CheckpointVersionError("unsupported checkpoint version " + std::to_string(version));

    const std::size_t d = get_u32(in);
    const std::size_t slots = get_u32(in);
    const std::size_t n_users = get_u64(in);
    const std::size_t n_items = get_u64(in);
    const std::size_t t = get_u32(in);
    if (d < 1 || n_users < 1 || n_items < 1)
        throw CheckpointDimensionError("header declares an empty model");

    HyperParams hp;
    hp.d = d;
    hp.slots = slots;
    ModelParameters params;
    for (std::size_t k = 0; k < t; ++k) {
        std::uint32_t len = get_u32(in);
        std::string name(len, '\0');
        if (!in.read(name.data(), len)) throw CheckpointTruncatedError("checkpoint truncated");
        double margin = get_f64(in);
        if (hp.margins.count(name))
            throw CheckpointFormatError("duplicate feedback type '" + name + "' in header");
        params.type_names.push_back(name);
        hp.margins[name] = margin;
    }

    params.user_embeddings = get_matrix(in, n_users, d, "user embeddings");
    params.item_embeddings = get_matrix(in, n_items, d, "item embeddings");
    params.keys.resize(t);
    for (std::size_t idx : name_sorted_order(params.type_names)) {
        params.keys[idx] = transpose(get_matrix(in, d, slots, "key matrix"));
    }
    params.memory = get_matrix(in, slots, d, "memory matrix");

    if (in.peek() != std::char_traits<char>::eof())
        throw CheckpointFormatError("trailing bytes after checkpoint payload");
    return {std::move(params), std::move(hp)};
}

}  // namespace mrmn
