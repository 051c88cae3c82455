#include "mrmn/forward.hpp"

#include <algorithm>
#include <cmath>

#include "mrmn/data.hpp"
#include "mrmn/error.hpp"
#include "mrmn/kernels.hpp"
#include "mrmn/rng.hpp"

namespace mrmn {

void joint_embedding(std::span<const double> u, std::span<const double> i, std::span<double> out) {
    require_same_length(u, i, "joint_embedding");
    require_same_length(u, out, "joint_embedding");
    kernels::hadamard(u.data(), i.data(), out.data(), u.size());
}

void key_attention(std::span<const double> v, const Matrix& key_slots, std::span<double> logits) {
    if (key_slots.cols() != v.size()) throw DimensionError("key_attention: key width != |v|");
    if (logits.size() != key_slots.rows())
        throw DimensionError("key_attention: logit count != slot count");
    kernels::row_dots(v.data(), key_slots.data(), key_slots.rows(), key_slots.cols(),
                      logits.data());
}

void attention_softmax(std::span<const double> logits, std::span<double> weights) {
    require_same_length(logits, weights, "attention_softmax");
    double max_logit = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t s = 0; s < logits.size(); ++s) {
        weights[s] = std::exp(logits[s] - max_logit);
        sum += weights[s];
    }
    kernels::scale(weights.data(), 1.0 / sum, weights.size());
}

void relation_vector(std::span<const double> weights, const Matrix& memory,
                     std::span<double> out) {
    if (weights.size() != memory.rows())
        throw DimensionError("relation_vector: weight count != memory rows");
    if (out.size() != memory.cols())
        throw DimensionError("relation_vector: output length != memory width");
    kernels::weighted_row_sum(weights.data(), memory.data(), memory.rows(), memory.cols(),
                              out.data());
}

double score(std::span<const double> u, std::span<const double> r, std::span<const double> i) {
    require_same_length(u, r, "score");
    require_same_length(u, i, "score");
    return kernels::translated_squared_distance(u.data(), r.data(), i.data(), u.size());
}

namespace {

void check_indices(UserIndex user, ItemIndex item, TypeIndex type,
                   const ModelParameters& params) {
    if (user >= params.user_embeddings.rows()) throw DimensionError("user index out of range");
    if (item >= params.item_embeddings.rows()) throw DimensionError("item index out of range");
    if (type >= params.keys.size()) throw DimensionError("unknown feedback type index");
}

}  // namespace

Prediction predict(UserIndex user, ItemIndex item, TypeIndex type, const ModelParameters& params) {
    check_indices(user, item, type, params);
    const std::size_t d = params.dim();
    const std::size_t slots = params.slot_count();

    auto u = params.user_embeddings.row_span(user);
    auto i = params.item_embeddings.row_span(item);

    Prediction pred;
    pred.attention.type = type;
    pred.relation.type = type;
    pred.attention.weights.resize(slots);
    pred.relation.r.resize(d);

    std::vector<double> v(d);
    std::vector<double> logits(slots);
    joint_embedding(u, i, v);
    key_attention(v, params.keys[type], logits);
    attention_softmax(logits, pred.attention.weights);
    relation_vector(pred.attention.weights, params.memory, pred.relation.r);
    pred.score = score(u, pred.relation.r, i);
    return pred;
}

double predict_score(UserIndex user, ItemIndex item, TypeIndex type,
                     const ModelParameters& params) {
    check_indices(user, item, type, params);
    const std::size_t d = params.dim();
    const std::size_t slots = params.slot_count();

    const double* u = params.user_embeddings.row(user);
    const double* i = params.item_embeddings.row(item);

    std::vector<double> v(d), logits(slots), weights(slots), r(d);
    kernels::hadamard(u, i, v.data(), d);
    kernels::row_dots(v.data(), params.keys[type].data(), slots, d, logits.data());
    attention_softmax(logits, weights);
    kernels::weighted_row_sum(weights.data(), params.memory.data(), slots, d, r.data());
    return kernels::translated_squared_distance(u, r.data(), i, d);
}

std::vector<std::vector<double>> mean_attention_profiles(const ModelParameters& params,
                                                         const Dataset& dataset,
                                                         std::size_t sample_cap,
                                                         std::uint64_t seed) {
    const std::size_t t = params.type_names.size();
    const std::size_t slots = params.slot_count();
    std::vector<std::vector<double>> rows(t);

    for (TypeIndex type = 0; type < t; ++type) {
        std::vector<std::pair<UserIndex, ItemIndex>> pairs;
        for (UserIndex u = 0; u < dataset.n_users; ++u) {
            for (ItemIndex item : dataset.positives[type][u]) pairs.emplace_back(u, item);
        }
        if (pairs.empty()) continue;

        Rng rng(derive_seed(derive_seed(seed, seed_stream::attention), type));
        if (pairs.size() > sample_cap) {
            // partial Fisher-Yates: the first sample_cap entries are a
            // uniform draw without replacement
            for (std::size_t k = 0; k < sample_cap; ++k) {
                std::size_t j = k + rng.next_index(pairs.size() - k);
                std::swap(pairs[k], pairs[j]);
            }
            pairs.resize(sample_cap);
        }

        std::vector<double> mean(slots, 0.0);
        for (const auto& [user, item] : pairs) {
            Prediction pred = predict(user, item, type, params);
            for (std::size_t s = 0; s < slots; ++s) mean[s] += pred.attention.weights[s];
        }
        const double inv = 1.0 / static_cast<double>(pairs.size());
        for (double& w : mean) w *= inv;
        rows[type] = std::move(mean);
    }
    return rows;
}

}  // namespace mrmn
