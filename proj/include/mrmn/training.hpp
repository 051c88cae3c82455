#pragma once

// Pairwise margin training: negative sampling, hinge loss, exact gradients of
// the single-triplet objective, SGD row updates with unit-ball projection.

#include <vector>

#include "mrmn/data.hpp"
#include "mrmn/parameters.hpp"
#include "mrmn/rng.hpp"
#include "mrmn/types.hpp"

namespace mrmn {

struct TrainingTriplet {
    UserIndex user = 0;
    ItemIndex pos_item = 0;
    ItemIndex neg_item = 0;
    TypeIndex type = 0;
};

// Injectable sampling strategy; a constrained sampler (e.g. geo-filtered) can
// be slotted in without touching the trainer.
class NegativeSampler {
public:
    virtual ~NegativeSampler() = default;
    // An item the user has never interacted with, under any feedback type.
    virtual ItemIndex sample(UserIndex user, const Dataset& dataset, Rng& rng) = 0;
};

// Uniform over the complement of all_interacted[user]: rejection sampling
// capped at 100 attempts, then an explicit materialized complement. Throws
// NoNegativeError when the user interacted with everything.
class UniformNegativeSampler final : public NegativeSampler {
public:
    ItemIndex sample(UserIndex user, const Dataset& dataset, Rng& rng) override;
};

// max(0, s_pos + margin - s_neg)
double triplet_loss(double s_pos, double s_neg, double margin);

// Sparse per-row gradients for the rows one triplet touches. Always sized and
// zero-filled; `active` is false exactly when the hinge is inactive and every
// entry is zero.
struct GradientSet {
    UserIndex user = 0;
    ItemIndex pos_item = 0;
    ItemIndex neg_item = 0;
    TypeIndex type = 0;
    std::vector<double> user_grad;  // d
    std::vector<double> pos_grad;   // d
    std::vector<double> neg_grad;   // d
    Matrix key_grad;                // slots x d, for keys[type]
    Matrix memory_grad;             // slots x d
    bool active = false;
};

struct BackwardResult {
    double loss = 0.0;
    GradientSet grads;
};

// Loss of one triplet as a pure function of the parameters; the finite
// difference oracle perturbs parameters and re-evaluates this.
double triplet_forward_loss(const TrainingTriplet& triplet, const ModelParameters& params,
                            const HyperParams& hp);

// Exact gradients of triplet_forward_loss for every touched row, including
// the joint-embedding chain into the attention logits, the softmax Jacobian,
// the shared memory, and both scores. Under NegRelationMode::reuse the
// relation vector of the positive pair is used for the corrupted score too,
// so the negative item feeds no attention-path gradient.
BackwardResult backward(const TrainingTriplet& triplet, const ModelParameters& params,
                        const HyperParams& hp);

// row <- row - lr * grad for every touched row, then unit-ball projection of
// the touched user/item rows. Keys and memory are never projected. A
// non-active GradientSet leaves the parameters bit-identical.
void sgd_step(ModelParameters& params, const GradientSet& grads, double lr);

struct EpochSummary {
    double mean_loss = 0.0;
    double active_fraction = 0.0;
    double elapsed_ms = 0.0;
};

// One pass over every positive train triplet in a seeded shuffle, one fresh
// negative per triplet, backward + sgd_step each.
EpochSummary train_epoch(ModelParameters& params, const Dataset& dataset, const HyperParams& hp,
                         NegativeSampler& sampler, Rng& rng);

}  // namespace mrmn
