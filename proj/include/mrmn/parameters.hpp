#pragma once

// Trainable tensors: initialization, norm control, checkpoint serialization.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mrmn/types.hpp"

namespace mrmn {

struct Dataset;

// How the corrupted item's score gets its relation vector: reuse the one
// computed from the positive pair (default), or recompute from u (.) j.
enum class NegRelationMode { reuse, recompute };

struct HyperParams {
    std::size_t d = 20;      // embedding dimension
    std::size_t slots = 10;  // number of key/memory slots (N)
    std::map<std::string, double> margins;  // per feedback type
    double learning_rate = 0.05;
    std::size_t epochs = 30;
    std::uint64_t seed = 42;
    std::size_t negatives_per_eval = 100;
    std::size_t k = 10;  // ranking cutoff
    double l2_reg = 1e-4;  // inner-product baseline only
    NegRelationMode neg_relation = NegRelationMode::reuse;
};

// Margin for a type name; throws ConfigError when missing.
double margin_for(const HyperParams& hp, const std::string& type_name);

// Checks d/slots/lr bounds and that every dataset type has a margin.
void validate(const HyperParams& hp, const Dataset& dataset);

// Every learned tensor. Key matrices are stored slot-major (slots x d): slot
// s of type tau is the contiguous row keys[tau].row(s). The checkpoint format
// stores the mathematical d x N layout; save/load transpose.
struct ModelParameters {
    Matrix user_embeddings;          // |U| x d
    Matrix item_embeddings;          // |I| x d
    std::vector<Matrix> keys;        // per type, slots x d
    Matrix memory;                   // slots x d
    std::vector<std::string> type_names;  // dense order, aligned with keys

    std::size_t dim() const { return user_embeddings.cols(); }
    std::size_t slot_count() const { return memory.rows(); }
    bool all_finite() const;

    friend bool operator==(const ModelParameters&, const ModelParameters&) = default;
};

// All matrices i.i.d. uniform on [-1/sqrt(d), +1/sqrt(d)], filled in a fixed
// order from a generator derived from hp.seed; bit-reproducible. slots = 0
// yields empty key/memory tensors (distance/inner-product baselines).
ModelParameters init_parameters(const HyperParams& hp, std::size_t n_users, std::size_t n_items,
                                const std::vector<std::string>& type_names,
                                std::size_t slots_override = SIZE_MAX);

// Scales vec onto the unit L2 ball when its norm exceeds 1; identity inside.
void project_unit_ball(std::span<double> vec);

void save_checkpoint(const ModelParameters& params, const HyperParams& hp,
                     const std::string& path);
std::pair<ModelParameters, HyperParams> load_checkpoint(const std::string& path);

}  // namespace mrmn
