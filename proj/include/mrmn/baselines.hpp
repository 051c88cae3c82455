#pragma once

// MF-BPR and CML under the same data, sampling, and evaluation harness as the
// memory model, plus the single-relation (LRML) configuration of it. All
// models train through one RankingModel interface so runs differ only in the
// scorer and loss.

#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "mrmn/evaluation.hpp"
#include "mrmn/training.hpp"

namespace mrmn {

enum class ModelKind { mrmn, lrml, cml, mf_bpr };

ModelKind model_kind_from_string(const std::string& name);  // throws ConfigError
const char* model_kind_name(ModelKind kind);

// dot(u, i); higher is better.
double mf_bpr_score(std::span<const double> u, std::span<const double> i);

// -ln sigmoid(s_pos - s_neg), computed without overflow.
double mf_bpr_loss(double s_pos, double s_neg);

// ||u - i||^2; lower is better.
double cml_score(std::span<const double> u, std::span<const double> i);

// Loss/gradients for one CML triplet: the same hinge as the memory model with
// a single margin, scores without a relation vector.
double cml_forward_loss(const TrainingTriplet& triplet, const ModelParameters& params,
                        double margin);
BackwardResult cml_backward(const TrainingTriplet& triplet, const ModelParameters& params,
                            double margin);

// Loss/gradients for one MF-BPR triplet, L2 regularization included (the
// finite-difference contract covers the full expression).
double mf_bpr_forward_loss(const TrainingTriplet& triplet, const ModelParameters& params,
                           double l2_reg);
BackwardResult mf_bpr_backward(const TrainingTriplet& triplet, const ModelParameters& params,
                               double l2_reg);

// Relabels every record to the primary feedback type and reduces the margin
// map to that single type. Training the result with the unmodified memory
// model pipeline is exactly the single-relation configuration; applied to a
// multi-type log it is also the all-types-as-primary relabeling.
std::pair<HyperParams, InteractionLog> configure_lrml(const HyperParams& hp,
                                                      const InteractionLog& log);

class RankingModel : public Scorer {
public:
    virtual EpochSummary run_epoch(const Dataset& dataset, NegativeSampler& sampler, Rng& rng) = 0;
    virtual const ModelParameters& parameters() const = 0;
    virtual const HyperParams& hyper_params() const = 0;
    virtual ModelKind kind() const = 0;
};

// Fresh model with seeded initialization, or one resumed from checkpoint
// parameters (shape-checked against the dataset).
std::unique_ptr<RankingModel> make_model(ModelKind kind, const Dataset& dataset, HyperParams hp,
                                         std::optional<ModelParameters> params = std::nullopt);

}  // namespace mrmn
