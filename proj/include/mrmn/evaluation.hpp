#pragma once

// Leave-one-out top-K evaluation: seeded candidate sampling, rank of the
// held-out item against sampled negatives, HR@K and NDCG@K.

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mrmn/data.hpp"
#include "mrmn/parameters.hpp"
#include "mrmn/rng.hpp"
#include "mrmn/types.hpp"

namespace mrmn {

// Whether smaller scores rank first (distance models) or larger ones do
// (inner-product models). Carried by the scorer so ranking never guesses.
enum class ScoreDirection { lower_is_better, higher_is_better };

class Scorer {
public:
    virtual ~Scorer() = default;
    virtual double operator()(UserIndex user, ItemIndex item, TypeIndex type) const = 0;
    virtual ScoreDirection direction() const = 0;
};

// Accept/reject predicate for candidate items; the default accepts all.
using CandidateFilter = std::function<bool(ItemIndex)>;

// n distinct negatives drawn uniformly without replacement from the items the
// user never interacted with, plus the ground truth at position 0. Returns
// nullopt when fewer than n eligible items exist (the user is skipped).
std::optional<std::vector<ItemIndex>> sample_eval_candidates(UserIndex user, ItemIndex ground_truth,
                                                             const Dataset& dataset, std::size_t n,
                                                             Rng& rng,
                                                             const CandidateFilter& filter = {});

// 1-based rank of the ground truth among the candidates under the scorer's
// direction. Negatives scoring equal to the ground truth rank ahead of it.
std::size_t rank_candidates(UserIndex user, ItemIndex ground_truth,
                            std::span<const ItemIndex> candidates, TypeIndex type,
                            const Scorer& scorer);

double hit_ratio_at_k(std::size_t rank, std::size_t k);

// Single relevant item: 1/log2(rank+1) inside the cutoff, else 0.
double ndcg_at_k(std::size_t rank, std::size_t k);

struct RankingRecord {
    UserIndex user = 0;
    ItemIndex ground_truth = 0;
    std::vector<ItemIndex> candidates;
    std::size_t rank = 0;
};

struct EvalReport {
    double hr_at_k = 0.0;
    double ndcg_at_k = 0.0;
    std::size_t k = 0;
    std::size_t negatives = 0;
    std::size_t users_evaluated = 0;
    std::size_t users_skipped = 0;
    std::vector<RankingRecord> per_user;
};

enum class Split { valid, test };

// Scores every user holding a record in the split with the given feedback
// type. Candidate draws are seeded per user from (seed, user index), so the
// report is reproducible and indifferent to user-set growth.
EvalReport evaluate(const Scorer& scorer, const Dataset& dataset, const HyperParams& hp,
                    Split split, TypeIndex eval_type, const CandidateFilter& filter = {});

// CSV `user,rank,hit,ndcg` rows plus a trailing `#` summary line.
void write_report_csv(const EvalReport& report, std::ostream& out);

}  // namespace mrmn
