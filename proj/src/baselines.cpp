#include "mrmn/baselines.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "mrmn/error.hpp"
#include "mrmn/forward.hpp"
#include "mrmn/kernels.hpp"

namespace mrmn {

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "mrmn") return ModelKind::mrmn;
    if (name == "lrml") return ModelKind::lrml;
    if (name == "cml") return ModelKind::cml;
    if (name == "mf-bpr") return ModelKind::mf_bpr;
    throw ConfigError("unknown model '" + name + "' (expected mrmn, lrml, cml, or mf-bpr)");
}

const char* model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::mrmn: return "mrmn";
        case ModelKind::lrml: return "lrml";
        case ModelKind::cml: return "cml";
        case ModelKind::mf_bpr: return "mf-bpr";
    }
    return "unknown";
}

double mf_bpr_score(std::span<const double> u, std::span<const double> i) {
    require_same_length(u, i, "mf_bpr_score");
    return kernels::dot(u.data(), i.data(), u.size());
}

double mf_bpr_loss(double s_pos, double s_neg) {
    const double x = s_pos - s_neg;
    // -ln sigmoid(x) = log1p(exp(-x)), guarded against exp overflow
    if (x >= 0.0) return std::log1p(std::exp(-x));
    return -x + std::log1p(std::exp(x));
}

double cml_score(std::span<const double> u, std::span<const double> i) {
    require_same_length(u, i, "cml_score");
    return kernels::squared_distance(u.data(), i.data(), u.size());
}

namespace {

void check_triplet(const TrainingTriplet& t, const ModelParameters& params) {
    if (t.user >= params.user_embeddings.rows()) throw DimensionError("user index out of range");
    if (t.pos_item >= params.item_embeddings.rows() || t.neg_item >= params.item_embeddings.rows())
        throw DimensionError("item index out of range");
}

GradientSet empty_grads(const TrainingTriplet& t, std::size_t d) {
    GradientSet g;
    g.user = t.user;
    g.pos_item = t.pos_item;
    g.neg_item = t.neg_item;
    g.type = t.type;
    g.user_grad.assign(d, 0.0);
    g.pos_grad.assign(d, 0.0);
    g.neg_grad.assign(d, 0.0);
    return g;
}

}  // namespace

double cml_forward_loss(const TrainingTriplet& triplet, const ModelParameters& params,
                        double margin) {
    check_triplet(triplet, params);
    const std::size_t d = params.dim();
    const double* u = params.user_embeddings.row(triplet.user);
    const double* i = params.item_embeddings.row(triplet.pos_item);
    const double* j = params.item_embeddings.row(triplet.neg_item);
    return triplet_loss(kernels::squared_distance(u, i, d), kernels::squared_distance(u, j, d),
                        margin);
}

BackwardResult cml_backward(const TrainingTriplet& triplet, const ModelParameters& params,
                            double margin) {
    check_triplet(triplet, params);
    const std::size_t d = params.dim();
    const double* u = params.user_embeddings.row(triplet.user);
    const double* i = params.item_embeddings.row(triplet.pos_item);
    const double* j = params.item_embeddings.row(triplet.neg_item);

    BackwardResult result;
    result.grads = empty_grads(triplet, d);

    const double s_pos = kernels::squared_distance(u, i, d);
    const double s_neg = kernels::squared_distance(u, j, d);
    result.loss = triplet_loss(s_pos, s_neg, margin);
    if (!(s_pos + margin - s_neg > 0.0)) return result;

    result.grads.active = true;
    for (std::size_t k = 0; k < d; ++k) {
        const double dp = u[k] - i[k];
        const double dn = u[k] - j[k];
        result.grads.user_grad[k] = 2.0 * dp - 2.0 * dn;
        result.grads.pos_grad[k] = -2.0 * dp;
        result.grads.neg_grad[k] = 2.0 * dn;
    }
    return result;
}

double mf_bpr_forward_loss(const TrainingTriplet& triplet, const ModelParameters& params,
                           double l2_reg) {
    check_triplet(triplet, params);
    const std::size_t d = params.dim();
    const double* u = params.user_embeddings.row(triplet.user);
    const double* i = params.item_embeddings.row(triplet.pos_item);
    const double* j = params.item_embeddings.row(triplet.neg_item);
    const double pairwise = mf_bpr_loss(kernels::dot(u, i, d), kernels::dot(u, j, d));
    const double reg = kernels::squared_norm(u, d) + kernels::squared_norm(i, d) +
                       kernels::squared_norm(j, d);
    return pairwise + l2_reg * reg;
}

BackwardResult mf_bpr_backward(const TrainingTriplet& triplet, const ModelParameters& params,
                               double l2_reg) {
    check_triplet(triplet, params);
    const std::size_t d = params.dim();
    const double* u = params.user_embeddings.row(triplet.user);
    const double* i = params.item_embeddings.row(triplet.pos_item);
    const double* j = params.item_embeddings.row(triplet.neg_item);

    BackwardResult result;
    result.grads = empty_grads(triplet, d);
    result.grads.active = true;  // log loss never saturates exactly

    const double s_pos = kernels::dot(u, i, d);
    const double s_neg = kernels::dot(u, j, d);
    const double x = s_pos - s_neg;
    result.loss = mf_bpr_loss(s_pos, s_neg) + l2_reg * (kernels::squared_norm(u, d) +
                                                        kernels::squared_norm(i, d) +
                                                        kernels::squared_norm(j, d));
    const double dloss_dx = -1.0 / (1.0 + std::exp(x));  // -sigmoid(-x)

    for (std::size_t k = 0; k < d; ++k) {
        result.grads.user_grad[k] = dloss_dx * (i[k] - j[k]) + 2.0 * l2_reg * u[k];
        result.grads.pos_grad[k] = dloss_dx * u[k] + 2.0 * l2_reg * i[k];
        result.grads.neg_grad[k] = -dloss_dx * u[k] + 2.0 * l2_reg * j[k];
    }
    return result;
}

std::pair<HyperParams, InteractionLog> configure_lrml(const HyperParams& hp,
                                                      const InteractionLog& log) {
    if (log.types.size() == 0) throw DataError("log has no feedback types");
    const std::string primary = log.types.token(0);

    double margin;
    if (auto it = hp.margins.find(primary); it != hp.margins.end()) {
        margin = it->second;
    } else if (hp.margins.size() == 1) {
        margin = hp.margins.begin()->second;
    } else {
        throw ConfigError("single-relation run needs a margin for the primary type '" + primary +
                          "'");
    }

    HyperParams collapsed_hp = hp;
    collapsed_hp.margins = {{primary, margin}};
    return {std::move(collapsed_hp), collapse_types(log, primary)};
}

// ---------------------------------------------------------------------------
// RankingModel implementations
// ---------------------------------------------------------------------------

namespace {

void check_params_shape(const ModelParameters& params, const Dataset& dataset,
                        const HyperParams& hp) {
    if (params.user_embeddings.rows() != dataset.n_users ||
        params.item_embeddings.rows() != dataset.n_items)
        throw DimensionError("checkpoint user/item counts do not match the dataset");
    if (params.type_names != dataset.type_names)
        throw DimensionError("checkpoint feedback types do not match the dataset");
    if (params.dim() != hp.d) throw DimensionError("checkpoint dimension does not match config");
}

// Shared epoch loop: seeded shuffle over the train triplets, one negative per
// positive, caller-supplied step.
template <typename Step>
EpochSummary pairwise_epoch(const Dataset& dataset, NegativeSampler& sampler, Rng& rng,
                            Step&& step) {
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
        auto [loss, was_active] = step(triplet);
        loss_sum += loss;
        if (was_active) ++active;
    }

    const auto stop = std::chrono::steady_clock::now();
    EpochSummary summary;
    const auto n = static_cast<double>(order.size());
    summary.mean_loss = loss_sum / n;
    summary.active_fraction = static_cast<double>(active) / n;
    summary.elapsed_ms = std::chrono::duration<double, std::milli>(stop - start).count();
    return summary;
}

class MrmnModel final : public RankingModel {
public:
    MrmnModel(ModelKind kind, const Dataset& dataset, HyperParams hp,
              std::optional<ModelParameters> params)
        : kind_(kind), hp_(std::move(hp)) {
        if (kind_ == ModelKind::lrml && dataset.type_names.size() != 1)
            throw ConfigError("single-relation model requires a single feedback type; "
                              "collapse types first");
        validate(hp_, dataset);
        if (params) {
            check_params_shape(*params, dataset, hp_);
            if (params->slot_count() != hp_.slots)
                throw DimensionError("checkpoint slot count does not match config");
            params_ = std::move(*params);
        } else {
            params_ = init_parameters(hp_, dataset.n_users, dataset.n_items, dataset.type_names);
        }
    }

    EpochSummary run_epoch(const Dataset& dataset, NegativeSampler& sampler, Rng& rng) override {
        return train_epoch(params_, dataset, hp_, sampler, rng);
    }

    double operator()(UserIndex user, ItemIndex item, TypeIndex type) const override {
        return predict_score(user, item, type, params_);
    }
    ScoreDirection direction() const override { return ScoreDirection::lower_is_better; }
    const ModelParameters& parameters() const override { return params_; }
    const HyperParams& hyper_params() const override { return hp_; }
    ModelKind kind() const override { return kind_; }

private:
    ModelKind kind_;
    HyperParams hp_;
    ModelParameters params_;
};

class CmlModel final : public RankingModel {
public:
    CmlModel(const Dataset& dataset, HyperParams hp, std::optional<ModelParameters> params)
        : hp_(std::move(hp)) {
        validate(hp_, dataset);
        margin_ = margin_for(hp_, dataset.type_names[0]);  // primary type's margin
        if (params) {
            check_params_shape(*params, dataset, hp_);
            params_ = std::move(*params);
        } else {
            params_ = init_parameters(hp_, dataset.n_users, dataset.n_items, dataset.type_names,
                                      /*slots_override=*/0);
        }
    }

    EpochSummary run_epoch(const Dataset& dataset, NegativeSampler& sampler, Rng& rng) override {
        return pairwise_epoch(dataset, sampler, rng, [&](const TrainingTriplet& triplet) {
            BackwardResult res = cml_backward(triplet, params_, margin_);
            sgd_step(params_, res.grads, hp_.learning_rate);  // projects touched rows
            return std::pair<double, bool>(res.loss, res.grads.active);
        });
    }

    double operator()(UserIndex user, ItemIndex item, TypeIndex) const override {
        return cml_score(params_.user_embeddings.row_span(user),
                         params_.item_embeddings.row_span(item));
    }
    ScoreDirection direction() const override { return ScoreDirection::lower_is_better; }
    const ModelParameters& parameters() const override { return params_; }
    const HyperParams& hyper_params() const override { return hp_; }
    ModelKind kind() const override { return ModelKind::cml; }

private:
    HyperParams hp_;
    double margin_;
    ModelParameters params_;
};

class MfBprModel final : public RankingModel {
public:
    MfBprModel(const Dataset& dataset, HyperParams hp, std::optional<ModelParameters> params)
        : hp_(std::move(hp)) {
        validate(hp_, dataset);
        if (params) {
            check_params_shape(*params, dataset, hp_);
            params_ = std::move(*params);
        } else {
            params_ = init_parameters(hp_, dataset.n_users, dataset.n_items, dataset.type_names,
                                      /*slots_override=*/0);
        }
    }

    EpochSummary run_epoch(const Dataset& dataset, NegativeSampler& sampler, Rng& rng) override {
        const std::size_t d = params_.dim();
        return pairwise_epoch(dataset, sampler, rng, [&](const TrainingTriplet& triplet) {
            BackwardResult res = mf_bpr_backward(triplet, params_, hp_.l2_reg);
            // inner-product model: plain SGD, magnitudes stay unconstrained
            const double lr = hp_.learning_rate;
            kernels::axpy(-lr, res.grads.user_grad.data(),
                          params_.user_embeddings.row(triplet.user), d);
            kernels::axpy(-lr, res.grads.pos_grad.data(),
                          params_.item_embeddings.row(triplet.pos_item), d);
            kernels::axpy(-lr, res.grads.neg_grad.data(),
                          params_.item_embeddings.row(triplet.neg_item), d);
            return std::pair<double, bool>(res.loss, res.grads.active);
        });
    }

    double operator()(UserIndex user, ItemIndex item, TypeIndex) const override {
        return mf_bpr_score(params_.user_embeddings.row_span(user),
                            params_.item_embeddings.row_span(item));
    }
    ScoreDirection direction() const override { return ScoreDirection::higher_is_better; }
    const ModelParameters& parameters() const override { return params_; }
    const HyperParams& hyper_params() const override { return hp_; }
    ModelKind kind() const override { return ModelKind::mf_bpr; }

private:
    HyperParams hp_;
    ModelParameters params_;
};

}  // namespace

std::unique_ptr<RankingModel> make_model(ModelKind kind, const Dataset& dataset, HyperParams hp,
                                         std::optional<ModelParameters> params) {
    switch (kind) {
        case ModelKind::mrmn:
        case ModelKind::lrml:
            return std::make_unique<MrmnModel>(kind, dataset, std::move(hp), std::move(params));
        case ModelKind::cml:
            return std::make_unique<CmlModel>(dataset, std::move(hp), std::move(params));
        case ModelKind::mf_bpr:
            return std::make_unique<MfBprModel>(dataset, std::move(hp), std::move(params));
    }
    throw ConfigError("unknown model kind");
}

}  // namespace mrmn
