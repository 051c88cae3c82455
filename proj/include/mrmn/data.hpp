#pragma once

// Interaction log ingestion: parsing, activity filtering, and the temporal
// leave-one-out split that produces the training dataset.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mrmn/types.hpp"

namespace mrmn {

struct RawInteraction {
    std::string user;
    std::string item;
    std::string type;
    std::int64_t timestamp = 0;
};

struct IndexedInteraction {
    UserIndex user = 0;
    ItemIndex item = 0;
    TypeIndex type = 0;
    std::int64_t timestamp = 0;

    friend bool operator==(const IndexedInteraction&, const IndexedInteraction&) = default;
};

// Bijection between external tokens and dense indices, in first-appearance
// order.
class Vocab {
public:
    std::uint32_t intern(const std::string& token);
    std::optional<std::uint32_t> find(const std::string& token) const;
    const std::string& token(std::uint32_t index) const { return tokens_[index]; }
    const std::vector<std::string>& tokens() const { return tokens_; }
    std::size_t size() const { return tokens_.size(); }

    friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

struct InteractionLog {
    std::vector<IndexedInteraction> records;  // input order
    Vocab users;
    Vocab items;
    Vocab types;
    // Non-fatal conditions noticed at parse time (currently: fewer than two
    // feedback types, which only makes sense for single-relation runs).
    std::size_t warning_count = 0;
};

struct ParseOptions {
    char delimiter = ',';
};

// Parses `user,item,type,timestamp` lines. Empty lines and lines starting
// with '#' are skipped. Throws ParseError (with line number) on malformed
// lines and DataError on an empty stream.
InteractionLog parse_interactions(std::istream& in, const ParseOptions& options = {});
InteractionLog parse_interactions_file(const std::string& path, const ParseOptions& options = {});

// Writes records in the same line format. canonical=true emits them sorted
// by (user index, timestamp), ties kept in input order; that order is stable
// under re-parsing, so a canonical dump re-dumps to identical bytes.
void write_interactions(const InteractionLog& log, std::ostream& out, char delimiter = ',',
                        bool canonical = false);

// Drops users with fewer than min_user interactions (counted over all types),
// then items with fewer than min_item interactions counted on the
// user-filtered records. Vocabularies are re-densified. Throws DataError when
// nothing survives.
InteractionLog filter_by_activity(const InteractionLog& log, std::size_t min_user,
                                  std::size_t min_item);

// Relabels every record to a single feedback type (used for single-relation
// and all-types-as-primary runs).
InteractionLog collapse_types(const InteractionLog& log, const std::string& type_name);

struct HeldOutRecord {
    ItemIndex item = 0;
    TypeIndex type = 0;
    std::int64_t timestamp = 0;
};

struct TrainTriplet {
    UserIndex user = 0;
    ItemIndex item = 0;
    TypeIndex type = 0;
};

// Split + indexed positives. Immutable once built; safe to share across
// readers.
struct Dataset {
    std::size_t n_users = 0;
    std::size_t n_items = 0;
    std::vector<std::string> type_names;  // dense order, index 0 = primary

    // positives[type][user]: sorted unique item indices, train records only
    std::vector<std::vector<std::vector<ItemIndex>>> positives;
    // all_interacted[user]: sorted unique items over every record of every
    // type, held-out ones included, so negatives never hit a held-out item
    std::vector<std::vector<ItemIndex>> all_interacted;

    std::vector<std::vector<IndexedInteraction>> train;  // per user, time order
    std::vector<std::optional<HeldOutRecord>> valid;
    std::vector<std::optional<HeldOutRecord>> test;

    // every unique (user, item, type) train positive, enumerated once per epoch
    std::vector<TrainTriplet> train_triplets;

    bool has_interacted(UserIndex user, ItemIndex item) const;
    std::size_t non_interacted_count(UserIndex user) const {
        return n_items - all_interacted[user].size();
    }
};

// Per user: records sorted by timestamp ascending (ties in input order), last
// record to test, second-to-last to valid, the rest to train. Users with
// fewer than 3 records contribute everything to train.
Dataset leave_one_out_split(const InteractionLog& log);

// Per-type counts for the ingest summary table.
struct TypeStats {
    std::string type;
    std::size_t users = 0;         // users with at least one interaction of the type
    std::size_t items = 0;         // items with at least one interaction of the type
    std::size_t interactions = 0;  // unique (user, item) pairs of the type
    double density = 0.0;          // interactions / (users * items)
};

std::vector<TypeStats> compute_type_stats(const InteractionLog& log);

}  // namespace mrmn
