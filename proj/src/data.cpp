#include "mrmn/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "mrmn/error.hpp"

namespace mrmn {

std::uint32_t Vocab::intern(const std::string& token) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    auto id = static_cast<std::uint32_t>(tokens_.size());
    tokens_.push_back(token);
    index_.emplace(token, id);
    return id;
}

std::optional<std::uint32_t> Vocab::find(const std::string& token) const {
    auto it = index_.find(token);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

namespace {

std::vector<std::string> split_fields(const std::string& line, char delimiter) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(delimiter, start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

std::int64_t parse_timestamp(const std::string& field, std::size_t line_no) {
    std::int64_t value = 0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw ParseError(line_no, "timestamp is not an integer: '" + field + "'");
    return value;
}

}  // namespace

InteractionLog parse_interactions(std::istream& in, const ParseOptions& options) {
    InteractionLog log;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;

        auto fields = split_fields(line, options.delimiter);
        if (fields.size() != 4)
            throw ParseError(line_no, "expected 4 fields, got " + std::to_string(fields.size()));
        for (const auto& f : fields) {
            if (f.empty()) throw ParseError(line_no, "empty field");
        }

        IndexedInteraction rec;
        rec.user = log.users.intern(fields[0]);
        rec.item = log.items.intern(fields[1]);
        rec.type = log.types.intern(fields[2]);
        rec.timestamp = parse_timestamp(fields[3], line_no);
        log.records.push_back(rec);
    }
    if (log.records.empty()) throw DataError("no interaction records in input");
    if (log.types.size() < 2) log.warning_count += 1;
    return log;
}

InteractionLog parse_interactions_file(const std::string& path, const ParseOptions& options) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open input file: " + path);
    return parse_interactions(in, options);
}

void write_interactions(const InteractionLog& log, std::ostream& out, char delimiter,
                        bool canonical) {
    std::vector<std::size_t> order(log.records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (canonical) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const auto& ra = log.records[a];
            const auto& rb = log.records[b];
            if (ra.user != rb.user) return ra.user < rb.user;
            return ra.timestamp < rb.timestamp;
        });
    }
    for (std::size_t idx : order) {
        const auto& rec = log.records[idx];
        out << log.users.token(rec.user) << delimiter << log.items.token(rec.item) << delimiter
            << log.types.token(rec.type) << delimiter << rec.timestamp << '\n';
    }
}

InteractionLog filter_by_activity(const InteractionLog& log, std::size_t min_user,
                                  std::size_t min_item) {
    std::vector<std::size_t> user_counts(log.users.size(), 0);
    for (const auto& rec : log.records) ++user_counts[rec.user];

    std::vector<std::size_t> item_counts(log.items.size(), 0);
    for (const auto& rec : log.records) {
        if (user_counts[rec.user] >= min_user) ++item_counts[rec.item];
    }

    InteractionLog out;
    for (const auto& rec : log.records) {
        if (user_counts[rec.user] < min_user) continue;
        if (item_counts[rec.item] < min_item) continue;
        IndexedInteraction kept;
        kept.user = out.users.intern(log.users.token(rec.user));
        kept.item = out.items.intern(log.items.token(rec.item));
        kept.type = out.types.intern(log.types.token(rec.type));
        kept.timestamp = rec.timestamp;
        out.records.push_back(kept);
    }
    if (out.records.empty()) throw DataError("activity filter removed every record");
    if (out.types.size() < 2) out.warning_count += 1;
    return out;
}

InteractionLog collapse_types(const InteractionLog& log, const std::string& type_name) {
    InteractionLog out;
    out.users = log.users;
    out.items = log.items;
    TypeIndex single = out.types.intern(type_name);
    out.records.reserve(log.records.size());
    for (const auto& rec : log.records) {
        IndexedInteraction collapsed = rec;
        collapsed.type = single;
        out.records.push_back(collapsed);
    }
    out.warning_count = 1;  // single type by construction
    return out;
}

bool Dataset::has_interacted(UserIndex user, ItemIndex item) const {
    const auto& items = all_interacted[user];
    return std::binary_search(items.begin(), items.end(), item);
}

Dataset leave_one_out_split(const InteractionLog& log) {
    if (log.records.empty()) throw DataError("cannot split an empty log");

    Dataset ds;
    ds.n_users = log.users.size();
    ds.n_items = log.items.size();
    ds.type_names = log.types.tokens();

    const std::size_t t = ds.type_names.size();
    ds.positives.assign(t, std::vector<std::vector<ItemIndex>>(ds.n_users));
    ds.all_interacted.assign(ds.n_users, {});
    ds.train.assign(ds.n_users, {});
    ds.valid.assign(ds.n_users, std::nullopt);
    ds.test.assign(ds.n_users, std::nullopt);

    std::vector<std::vector<IndexedInteraction>> per_user(ds.n_users);
    for (const auto& rec : log.records) per_user[rec.user].push_back(rec);

    for (UserIndex u = 0; u < ds.n_users; ++u) {
        auto& recs = per_user[u];
        std::stable_sort(recs.begin(), recs.end(),
                         [](const IndexedInteraction& a, const IndexedInteraction& b) {
                             return a.timestamp < b.timestamp;
                         });

        std::size_t n_train = recs.size();
        if (recs.size() >= 3) {
            n_train = recs.size() - 2;
            const auto& v = recs[n_train];
            const auto& te = recs[n_train + 1];
            ds.valid[u] = HeldOutRecord{v.item, v.type, v.timestamp};
            ds.test[u] = HeldOutRecord{te.item, te.type, te.timestamp};
        }
        ds.train[u].assign(recs.begin(), recs.begin() + n_train);

        for (std::size_t k = 0; k < n_train; ++k) {
            ds.positives[recs[k].type][u].push_back(recs[k].item);
        }
        for (const auto& rec : recs) ds.all_interacted[u].push_back(rec.item);
    }

    for (auto& items : ds.all_interacted) {
        std::sort(items.begin(), items.end());
        items.erase(std::unique(items.begin(), items.end()), items.end());
    }
    for (auto& by_user : ds.positives) {
        for (auto& items : by_user) {
            std::sort(items.begin(), items.end());
            items.erase(std::unique(items.begin(), items.end()), items.end());
        }
    }

    for (TypeIndex type = 0; type < t; ++type) {
        for (UserIndex u = 0; u < ds.n_users; ++u) {
            for (ItemIndex item : ds.positives[type][u]) {
                ds.train_triplets.push_back(TrainTriplet{u, item, type});
            }
        }
    }
    return ds;
}

std::vector<TypeStats> compute_type_stats(const InteractionLog& log) {
    const std::size_t t = log.types.size();
    std::vector<std::set<UserIndex>> users(t);
    std::vector<std::set<ItemIndex>> items(t);
    std::vector<std::set<std::pair<UserIndex, ItemIndex>>> pairs(t);
    for (const auto& rec : log.records) {
        users[rec.type].insert(rec.user);
        items[rec.type].insert(rec.item);
        pairs[rec.type].insert({rec.user, rec.item});
    }
    std::vector<TypeStats> stats(t);
    for (TypeIndex type = 0; type < t; ++type) {
        stats[type].type = log.types.token(type);
        stats[type].users = users[type].size();
        stats[type].items = items[type].size();
        stats[type].interactions = pairs[type].size();
        double cells = static_cast<double>(stats[type].users) * static_cast<double>(stats[type].items);
        stats[type].density = cells > 0 ? static_cast<double>(stats[type].interactions) / cells : 0.0;
    }
    return stats;
}

}  // namespace mrmn
