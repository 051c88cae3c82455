#include "mrmn/training.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cmath>
#include <numeric>

#include "mrmn/error.hpp"
#include "mrmn/forward.hpp"
#include "mrmn/kernels.hpp"

namespace mrmn {

ItemIndex UniformNegativeSampler::sample(UserIndex user, const Dataset& dataset, Rng& rng) {
    const std::size_t n_items = dataset.n_items;
    const auto& interacted = dataset.all_interacted[user];
    if (interacted.size() >= n_items)
        throw NoNegativeError("user " + std::to_string(user) + " interacted with every item");

    for (int attempt = 0; attempt < 100; ++attempt) {
        auto candidate = static_cast<ItemIndex>(rng.next_index(n_items));
        if (!std::binary_search(interacted.begin(), interacted.end(), candidate)) return candidate;
    }

    // Dense user: walk the sorted interacted list once and pick from the gaps.
    std::vector<ItemIndex> complement;
    complement.reserve(n_items - interacted.size());
    std::size_t pos = 0;
    for (ItemIndex item = 0; item < n_items; ++item) {
        if (pos < interacted.size() && interacted[pos] == item) {
            ++pos;
            continue;
        }
        complement.push_back(item);
    }
    return complement[rng.next_index(complement.size())];
}

double triplet_loss(double s_pos, double s_neg, double margin) {
    return std::max(0.0, s_pos + margin - s_neg);
}

namespace {

struct ForwardState {
    std::vector<double> v;        // u (.) item
    std::vector<double> weights;  // softmax attention
    std::vector<double> r;        // relation vector
};

ForwardState run_attention(const double* u, const double* item, const ModelParameters& params,
                           TypeIndex type) {
    const std::size_t d = params.dim();
    const std::size_t slots = params.slot_count();
    ForwardState st;
    st.v.resize(d);
    st.weights.resize(slots);
    st.r.resize(d);
    std::vector<double> logits(slots);
    kernels::hadamard(u, item, st.v.data(), d);
    kernels::row_dots(st.v.data(), params.keys[type].data(), slots, d, logits.data());
    attention_softmax(logits, st.weights);
    kernels::weighted_row_sum(st.weights.data(), params.memory.data(), slots, d, st.r.data());
    return st;
}

void check_triplet(const TrainingTriplet& t, const ModelParameters& params) {
    if (t.user >= params.user_embeddings.rows()) throw DimensionError("user index out of range");
    if (t.pos_item >= params.item_embeddings.rows() || t.neg_item >= params.item_embeddings.rows())
        throw DimensionError("item index out of range");
    if (t.type >= params.keys.size()) throw DimensionError("unknown feedback type index");
}

// Backpropagates g_r through the attention read: adds the softmax-Jacobian
// terms into g_v, the per-slot key gradients, and the memory gradients.
void attention_backward(const ForwardState& st, const Matrix& key_slots, const Matrix& memory,
                        const std::vector<double>& g_r, std::vector<double>& g_v,
                        Matrix& g_key, Matrix& g_memory) {
    const std::size_t d = memory.cols();
    const std::size_t slots = memory.rows();

    std::vector<double> g_w(slots);
    kernels::row_dots(g_r.data(), memory.data(), slots, d, g_w.data());
    const double coupling = kernels::dot(g_w.data(), st.weights.data(), slots);

    std::vector<double> g_logits(slots);
    for (std::size_t s = 0; s < slots; ++s) {
        g_logits[s] = st.weights[s] * (g_w[s] - coupling);
    }

    std::vector<double> g_v_part(d);
    kernels::weighted_row_sum(g_logits.data(), key_slots.data(), slots, d, g_v_part.data());
    kernels::axpy(1.0, g_v_part.data(), g_v.data(), d);

    for (std::size_t s = 0; s < slots; ++s) {
        kernels::axpy(g_logits[s], st.v.data(), g_key.row(s), d);
        kernels::axpy(st.weights[s], g_r.data(), g_memory.row(s), d);
    }
}

}  // namespace

double triplet_forward_loss(const TrainingTriplet& triplet, const ModelParameters& params,
                            const HyperParams& hp) {
    check_triplet(triplet, params);
    const std::size_t d = params.dim();
    const double* u = params.user_embeddings.row(triplet.user);
    const double* i = params.item_embeddings.row(triplet.pos_item);
    const double* j = params.item_embeddings.row(triplet.neg_item);
    const double margin = margin_for(hp, params.type_names[triplet.type]);

    ForwardState pos = run_attention(u, i, params, triplet.type);
    double s_pos = kernels::translated_squared_distance(u, pos.r.data(), i, d);

    double s_neg;
    if (hp.neg_relation == NegRelationMode::reuse) {
        s_neg = kernels::translated_squared_distance(u, pos.r.data(), j, d);
    } else {
        ForwardState neg = run_attention(u, j, params, triplet.type);
        s_neg = kernels::translated_squared_distance(u, neg.r.data(), j, d);
    }
    return triplet_loss(s_pos, s_neg, margin);
}

BackwardResult backward(const TrainingTriplet& triplet, const ModelParameters& params,
                        const HyperParams& hp) {
    check_triplet(triplet, params);
    const std::size_t d = params.dim();
    const std::size_t slots = params.slot_count();
    const double* u = params.user_embeddings.row(triplet.user);
    const double* i = params.item_embeddings.row(triplet.pos_item);
    const double* j = params.item_embeddings.row(triplet.neg_item);
    const double margin = margin_for(hp, params.type_names[triplet.type]);
    const bool reuse = hp.neg_relation == NegRelationMode::reuse;

    BackwardResult result;
    GradientSet& g = result.grads;
    g.user = triplet.user;
    g.pos_item = triplet.pos_item;
    g.neg_item = triplet.neg_item;
    g.type = triplet.type;
    g.user_grad.assign(d, 0.0);
    g.pos_grad.assign(d, 0.0);
    g.neg_grad.assign(d, 0.0);
    g.key_grad = Matrix(slots, d);
    g.memory_grad = Matrix(slots, d);

    ForwardState pos = run_attention(u, i, params, triplet.type);
    double s_pos = kernels::translated_squared_distance(u, pos.r.data(), i, d);

    ForwardState neg;
    const double* r_neg = pos.r.data();
    if (!reuse) {
        neg = run_attention(u, j, params, triplet.type);
        r_neg = neg.r.data();
    }
    double s_neg = kernels::translated_squared_distance(u, r_neg, j, d);

    result.loss = triplet_loss(s_pos, s_neg, margin);
    if (!(s_pos + margin - s_neg > 0.0)) return result;  // hinge inactive
    g.active = true;

    std::vector<double> e_pos(d), e_neg(d);
    for (std::size_t k = 0; k < d; ++k) {
        e_pos[k] = (u[k] + pos.r[k]) - i[k];
        e_neg[k] = (u[k] + r_neg[k]) - j[k];
    }

    // Direct score terms: dL/ds_pos = 1, dL/ds_neg = -1.
    for (std::size_t k = 0; k < d; ++k) {
        g.user_grad[k] = 2.0 * e_pos[k] - 2.0 * e_neg[k];
        g.pos_grad[k] = -2.0 * e_pos[k];
        g.neg_grad[k] = 2.0 * e_neg[k];
    }

    if (reuse) {
        // One attention read feeds both scores: dL/dr = 2(e_pos - e_neg).
        std::vector<double> g_r(d);
        for (std::size_t k = 0; k < d; ++k) g_r[k] = 2.0 * (e_pos[k] - e_neg[k]);

        std::vector<double> g_v(d, 0.0);
        attention_backward(pos, params.keys[triplet.type], params.memory, g_r, g_v, g.key_grad,
                           g.memory_grad);
        // v = u (.) i
        for (std::size_t k = 0; k < d; ++k) {
            g.user_grad[k] += g_v[k] * i[k];
            g.pos_grad[k] += g_v[k] * u[k];
        }
    } else {
        std::vector<double> g_r_pos(d), g_r_neg(d);
        for (std::size_t k = 0; k < d; ++k) {
            g_r_pos[k] = 2.0 * e_pos[k];
            g_r_neg[k] = -2.0 * e_neg[k];
        }

        std::vector<double> g_v_pos(d, 0.0), g_v_neg(d, 0.0);
        attention_backward(pos, params.keys[triplet.type], params.memory, g_r_pos, g_v_pos,
                           g.key_grad, g.memory_grad);
        attention_backward(neg, params.keys[triplet.type], params.memory, g_r_neg, g_v_neg,
                           g.key_grad, g.memory_grad);
        for (std::size_t k = 0; k < d; ++k) {
            g.user_grad[k] += g_v_pos[k] * i[k] + g_v_neg[k] * j[k];
            g.pos_grad[k] += g_v_pos[k] * u[k];
            g.neg_grad[k] += g_v_neg[k] * u[k];
        }
    }
    return result;
}

void sgd_step(ModelParameters& params, const GradientSet& grads, double lr) {
    if (!grads.active) return;
    const std::size_t d = params.dim();
    const std::size_t slots = params.slot_count();

    double* u = params.user_embeddings.row(grads.user);
    kernels::axpy(-lr, grads.user_grad.data(), u, d);
    project_unit_ball({u, d});

    double* i = params.item_embeddings.row(grads.pos_item);
    kernels::axpy(-lr, grads.pos_grad.data(), i, d);
    project_unit_ball({i, d});

    double* j = params.item_embeddings.row(grads.neg_item);
    kernels::axpy(-lr, grads.neg_grad.data(), j, d);
    project_unit_ball({j, d});

    for (std::size_t s = 0; s < slots; ++s) {
        kernels::axpy(-lr, grads.key_grad.row(s), params.keys[grads.type].row(s), d);
        kernels::axpy(-lr, grads.memory_grad.row(s), params.memory.row(s), d);
    }

#ifndef NDEBUG
    for (std::size_t k = 0; k < d; ++k) {
        assert(std::isfinite(u[k]) && std::isfinite(i[k]) && std::isfinite(j[k]));
    }
    assert(std::sqrt(kernels::squared_norm(u, d)) <= 1.0 + 1e-6);
    assert(std::sqrt(kernels::squared_norm(i, d)) <= 1.0 + 1e-6);
    assert(std::sqrt(kernels::squared_norm(j, d)) <= 1.0 + 1e-6);
#endif
}

EpochSummary train_epoch(ModelParameters& params, const Dataset& dataset, const HyperParams& hp,
                         NegativeSampler& sampler, Rng& rng) {
    if (dataset.train_triplets.empty()) throw DataError("dataset has no train records");
    const auto start = std::chrono::steady_clock::now();

    std::vector<std::size_t> order(dataset.train_triplets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t active = 0;
    for (std::size_t idx : order) {
        const TrainTriplet& pos = dataset.train_triplets[idx];
        TrainingTriplet triplet;
        triplet.user = pos.user;
        triplet.pos_item = pos.item;
        triplet.type = pos.type;
        triplet.neg_item = sampler.sample(pos.user, dataset, rng);

        BackwardResult res = backward(triplet, params, hp);
        sgd_step(params, res.grads, hp.learning_rate);
        loss_sum += res.loss;
        if (res.grads.active) ++active;
    }

    const auto stop = std::chrono::steady_clock::now();
    EpochSummary summary;
    const auto n = static_cast<double>(order.size());
    summary.mean_loss = loss_sum / n;
    summary.active_fraction = static_cast<double>(active) / n;
    summary.elapsed_ms = std::chrono::duration<double, std::milli>(stop - start).count();
    return summary;
}

}  // namespace mrmn
