#include "mrmn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_set>

#include "mrmn/error.hpp"
#include "mrmn/rng.hpp"

namespace mrmn {

std::optional<std::vector<ItemIndex>> sample_eval_candidates(UserIndex user, ItemIndex ground_truth,
                                                             const Dataset& dataset, std::size_t n,
                                                             Rng& rng,
                                                             const CandidateFilter& filter) {
    const auto& interacted = dataset.all_interacted[user];
    auto eligible = [&](ItemIndex item) {
        if (std::binary_search(interacted.begin(), interacted.end(), item)) return false;
        return !filter || filter(item);
    };

    std::size_t eligible_count;
    if (!filter) {
        eligible_count = dataset.n_items - interacted.size();
    } else {
        eligible_count = 0;
        for (ItemIndex item = 0; item < dataset.n_items; ++item) {
            if (eligible(item)) ++eligible_count;
        }
    }
    if (eligible_count < n) return std::nullopt;

    std::vector<ItemIndex> candidates;
    candidates.reserve(n + 1);
    candidates.push_back(ground_truth);

    if (n == 0) return candidates;

    if (eligible_count <= 4 * n) {
        // Small complement: materialize and take a partial Fisher-Yates prefix.
        std::vector<ItemIndex> pool;
        pool.reserve(eligible_count);
        for (ItemIndex item = 0; item < dataset.n_items; ++item) {
            if (eligible(item)) pool.push_back(item);
        }
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t j = k + rng.next_index(pool.size() - k);
            std::swap(pool[k], pool[j]);
            candidates.push_back(pool[k]);
        }
    } else {
        std::unordered_set<ItemIndex> picked;
        picked.reserve(n * 2);
        while (picked.size() < n) {
            auto item = static_cast<ItemIndex>(rng.next_index(dataset.n_items));
            if (!eligible(item) || picked.count(item)) continue;
            picked.insert(item);
            candidates.push_back(item);
        }
    }
    return candidates;
}

std::size_t rank_candidates(UserIndex user, ItemIndex ground_truth,
                            std::span<const ItemIndex> candidates, TypeIndex type,
                            const Scorer& scorer) {
    const double gt_score = scorer(user, ground_truth, type);
    const bool ascending = scorer.direction() == ScoreDirection::lower_is_better;

    std::size_t rank = 1;
    bool seen_gt = false;
    for (ItemIndex item : candidates) {
        if (item == ground_truth && !seen_gt) {
            seen_gt = true;  // skip the ground truth itself, once
            continue;
        }
        const double s = scorer(user, item, type);
        const bool beats = ascending ? s < gt_score : s > gt_score;
        if (beats || s == gt_score) ++rank;  // ties count against the ground truth
    }
    return rank;
}

double hit_ratio_at_k(std::size_t rank, std::size_t k) { return rank <= k ? 1.0 : 0.0; }

double ndcg_at_k(std::size_t rank, std::size_t k) {
    if (rank > k) return 0.0;
    return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

EvalReport evaluate(const Scorer& scorer, const Dataset& dataset, const HyperParams& hp,
                    Split split, TypeIndex eval_type, const CandidateFilter& filter) {
    const auto& held_out = split == Split::valid ? dataset.valid : dataset.test;
    if (eval_type >= dataset.type_names.size())
        throw ConfigError("evaluation feedback type index out of range");

    bool any = std::any_of(held_out.begin(), held_out.end(),
                           [](const auto& rec) { return rec.has_value(); });
    if (!any) throw DataError("split has no held-out records");

    EvalReport report;
    report.k = hp.k;
    report.negatives = hp.negatives_per_eval;

    double hr_sum = 0.0;
    double ndcg_sum = 0.0;
    for (UserIndex user = 0; user < dataset.n_users; ++user) {
        if (!held_out[user].has_value()) continue;
        const ItemIndex ground_truth = held_out[user]->item;

        Rng rng(derive_seed(derive_seed(hp.seed, seed_stream::eval), user));
        auto candidates = sample_eval_candidates(user, ground_truth, dataset,
                                                 hp.negatives_per_eval, rng, filter);
        if (!candidates) {
            ++report.users_skipped;
            continue;
        }

        RankingRecord rec;
        rec.user = user;
        rec.ground_truth = ground_truth;
        rec.candidates = std::move(*candidates);
        rec.rank = rank_candidates(user, ground_truth, rec.candidates, eval_type, scorer);
        hr_sum += hit_ratio_at_k(rec.rank, hp.k);
        ndcg_sum += ndcg_at_k(rec.rank, hp.k);
        report.per_user.push_back(std::move(rec));
        ++report.users_evaluated;
    }

    if (report.users_evaluated == 0)
        throw DataError("no user in the split had enough non-interacted items to evaluate");
    report.hr_at_k = hr_sum / static_cast<double>(report.users_evaluated);
    report.ndcg_at_k = ndcg_sum / static_cast<double>(report.users_evaluated);
    return report;
}

void write_report_csv(const EvalReport& report, std::ostream& out) {
    out << "user,rank,hit,ndcg\n";
    for (const auto& rec : report.per_user) {
        out << rec.user << ',' << rec.rank << ',' << hit_ratio_at_k(rec.rank, report.k) << ','
            << ndcg_at_k(rec.rank, report.k) << '\n';
    }
    out << "# hr@" << report.k << "=" << report.hr_at_k << " ndcg@" << report.k << "="
        << report.ndcg_at_k << " evaluated=" << report.users_evaluated
        << " skipped=" << report.users_skipped << '\n';
}

}  // namespace mrmn
