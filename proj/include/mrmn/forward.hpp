#pragma once

// Deterministic forward pass: joint embedding, key addressing, attention,
// relation read, translation score. Pure functions over an immutable
// parameter snapshot; safe for unlimited parallel callers.

#include <span>
#include <vector>

#include "mrmn/parameters.hpp"
#include "mrmn/types.hpp"

namespace mrmn {

struct AttentionProfile {
    TypeIndex type = 0;
    std::vector<double> weights;  // non-negative, sums to 1
};

struct RelationVector {
    TypeIndex type = 0;
    std::vector<double> r;
};

// out = u (.) i, the joint user-item embedding.
void joint_embedding(std::span<const double> u, std::span<const double> i, std::span<double> out);

// logits[s] = dot(v, key slot s).
void key_attention(std::span<const double> v, const Matrix& key_slots, std::span<double> logits);

// Max-subtracted softmax; finite logits in, probability vector out.
void attention_softmax(std::span<const double> logits, std::span<double> weights);

// out = sum_s weights[s] * memory row s.
void relation_vector(std::span<const double> weights, const Matrix& memory, std::span<double> out);

// ||u + r - i||^2. Lower is better: a perfect item sits at the translated
// user position.
double score(std::span<const double> u, std::span<const double> r, std::span<const double> i);

struct Prediction {
    double score = 0.0;
    AttentionProfile attention;
    RelationVector relation;
};

// Full composition, returning attention and relation for introspection.
Prediction predict(UserIndex user, ItemIndex item, TypeIndex type,
                   const ModelParameters& params);

// Score-only path used by ranking (skips profile copies).
double predict_score(UserIndex user, ItemIndex item, TypeIndex type,
                     const ModelParameters& params);

struct Dataset;

// Mean attention weights per feedback type over a seeded sample of at most
// sample_cap positive train pairs of that type. Rows align with
// params.type_names; a type with no train pairs yields an empty row.
std::vector<std::vector<double>> mean_attention_profiles(const ModelParameters& params,
                                                         const Dataset& dataset,
                                                         std::size_t sample_cap,
                                                         std::uint64_t seed);

}  // namespace mrmn
