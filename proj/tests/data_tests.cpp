#include <map>
#include <set>
#include <sstream>

#include <doctest.h>

#include "mrmn/data.hpp"
#include "mrmn/error.hpp"
#include "synthetic.hpp"

using namespace mrmn;

namespace {

InteractionLog parse_text(const std::string& text, char delimiter = ',') {
    std::istringstream in(text);
    ParseOptions opts;
    opts.delimiter = delimiter;
    return parse_interactions(in, opts);
}

std::string dump(const InteractionLog& log, bool canonical = false) {
    std::ostringstream out;
    write_interactions(log, out, ',', canonical);
    return out.str();
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("parse builds vocabularies in first-appearance order") {
    auto log = parse_text("alice,book,click,1\n"
                          "bob,dvd,buy,2\n"
                          "alice,dvd,buy,3\n");
    CHECK(log.users.size() == 2);
    CHECK(log.items.size() == 2);
    CHECK(log.types.size() == 2);
    CHECK(log.records.size() == 3);
    CHECK(log.users.token(0) == "alice");
    CHECK(log.users.token(1) == "bob");
    CHECK(log.items.token(0) == "book");
    CHECK(log.types.token(0) == "click");
    CHECK(log.records[2].user == 0);
    CHECK(log.records[2].item == 1);
    CHECK(log.records[2].type == 1);
    CHECK(log.warning_count == 0);
}

TEST_CASE("empty stream is an error") {
    CHECK_THROWS_AS(parse_text(""), DataError);
    CHECK_THROWS_AS(parse_text("# only a comment\n\n"), DataError);
}

TEST_CASE("wrong arity reports the line number") {
    try {
        parse_text("u1,i1\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 1);
    }
    try {
        parse_text("u1,i1,click,1\nu2,i2,click\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("bad fields rejected") {
    CHECK_THROWS_AS(parse_text("u1,,click,1\n"), ParseError);
    CHECK_THROWS_AS(parse_text("u1,i1,click,notanumber\n"), ParseError);
    CHECK_THROWS_AS(parse_text("u1,i1,click,1,extra\n"), ParseError);
}

TEST_CASE("comments, blank lines, CRLF and custom delimiter") {
    auto log = parse_text("# header\n"
                          "\n"
                          "u1|i1|click|1\r\n"
                          "u2|i2|buy|-5\n",
                          '|');
    CHECK(log.records.size() == 2);
    CHECK(log.records[1].timestamp == -5);
    CHECK(log.types.size() == 2);
}

TEST_CASE("single feedback type bumps the warning counter") {
    auto log = parse_text("u1,i1,click,1\nu2,i2,click,2\n");
    CHECK(log.warning_count == 1);
}

TEST_CASE("round trip preserves vocabularies and records") {
    auto log = testing::random_log(8, 12, 3, 6, 99);
    auto reparsed = parse_text(dump(log));
    CHECK(reparsed.users == log.users);
    CHECK(reparsed.items == log.items);
    CHECK(reparsed.types == log.types);
    CHECK(reparsed.records == log.records);
}

TEST_CASE("canonical dump is idempotent") {
    auto log = testing::random_log(6, 9, 2, 5, 4);
    std::string first = dump(log, /*canonical=*/true);
    std::string second = dump(parse_text(first), /*canonical=*/true);
    CHECK(first == second);
}

TEST_CASE("filter keeps everything when thresholds are met") {
    auto log = parse_text("u1,i1,a,1\nu1,i2,b,2\nu2,i1,a,3\nu2,i2,b,4\n");
    auto filtered = filter_by_activity(log, 2, 2);
    CHECK(filtered.records.size() == 4);
    CHECK(dump(filtered) == dump(log));
}

TEST_CASE("filtering away every record is an error") {
    auto log = parse_text("u1,i1,a,1\nu1,i2,a,2\nu1,i3,a,3\n");
    CHECK_THROWS_AS(filter_by_activity(log, 5, 0), DataError);
}

TEST_CASE("user threshold keeps exactly the busy users") {
    // user counts: u1=2, u2=5, u3=7, u4=1
    std::ostringstream text;
    for (int k = 0; k < 2; ++k) text << "u1,i" << k << ",a," << k << "\n";
    for (int k = 0; k < 5; ++k) text << "u2,i" << k << ",a," << k << "\n";
    for (int k = 0; k < 7; ++k) text << "u3,i" << k << ",a," << k << "\n";
    for (int k = 0; k < 1; ++k) text << "u4,i" << k << ",a," << k << "\n";
    auto log = parse_text(text.str());

    auto filtered = filter_by_activity(log, 5, 0);

    // brute-force recount over the original log
    std::map<std::string, int> counts;
    for (const auto& rec : log.records) ++counts[log.users.token(rec.user)];
    std::set<std::string> expect;
    for (const auto& [user, n] : counts)
        if (n >= 5) expect.insert(user);

    std::set<std::string> got(filtered.users.tokens().begin(), filtered.users.tokens().end());
    CHECK(got == expect);
    CHECK(got == std::set<std::string>{"u2", "u3"});
    CHECK(filtered.records.size() == 12);
}

TEST_CASE("item filter counts on the user-filtered log") {
    // i1 appears 3 times but twice via the dropped user u1
    auto log = parse_text("u1,i1,a,1\nu1,i1,a,2\nu2,i1,a,3\nu2,i2,a,4\nu2,i2,a,5\n");
    auto filtered = filter_by_activity(log, 3, 2);
    CHECK(filtered.users.size() == 1);
    CHECK(filtered.items.size() == 1);
    CHECK(filtered.items.token(0) == "i2");
}

TEST_CASE("raising min_user never increases survivors") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto log = testing::random_log(10, 8, 2, 1 + seed % 7, seed);
        std::size_t prev = log.records.size();
        for (std::size_t min_user = 1; min_user <= 8; ++min_user) {
            std::size_t survived = 0;
            try {
                survived = filter_by_activity(log, min_user, 0).records.size();
            } catch (const DataError&) {
                survived = 0;
            }
            CHECK(survived <= prev);
            prev = survived;
        }
    }
}

TEST_CASE("leave one out holds back the last two records") {
    auto log = parse_text("u1,i1,a,1\nu1,i2,a,2\nu1,i3,b,3\n");
    auto ds = leave_one_out_split(log);
    REQUIRE(ds.valid[0].has_value());
    REQUIRE(ds.test[0].has_value());
    CHECK(ds.train[0].size() == 1);
    CHECK(ds.train[0][0].timestamp == 1);
    CHECK(ds.valid[0]->timestamp == 2);
    CHECK(ds.test[0]->timestamp == 3);
    CHECK(ds.test[0]->item == log.items.find("i3").value());
    CHECK(ds.test[0]->type == log.types.find("b").value());
}

TEST_CASE("users with fewer than 3 records stay in train") {
    auto log = parse_text("u1,i1,a,1\nu1,i2,a,2\nu2,i1,a,9\n");
    auto ds = leave_one_out_split(log);
    CHECK(ds.train[0].size() == 2);
    CHECK(!ds.valid[0].has_value());
    CHECK(!ds.test[0].has_value());
    CHECK(ds.train[1].size() == 1);
}

TEST_CASE("timestamp ties follow input order") {
    auto log = parse_text("u1,i1,a,5\nu1,i2,a,5\nu1,i3,a,5\n");
    auto ds = leave_one_out_split(log);
    CHECK(ds.train[0][0].item == log.items.find("i1").value());
    CHECK(ds.valid[0]->item == log.items.find("i2").value());
    CHECK(ds.test[0]->item == log.items.find("i3").value());
}

TEST_CASE("split partitions every user's records") {
    auto log = testing::random_log(12, 10, 3, 5, 7);
    auto ds = leave_one_out_split(log);
    std::vector<std::size_t> per_user(log.users.size(), 0);
    for (const auto& rec : log.records) ++per_user[rec.user];
    for (UserIndex u = 0; u < ds.n_users; ++u) {
        std::size_t held = (ds.valid[u].has_value() ? 1 : 0) + (ds.test[u].has_value() ? 1 : 0);
        CHECK(ds.train[u].size() + held == per_user[u]);
    }
}

TEST_CASE("no train record is newer than the test record") {
    auto log = testing::random_log(15, 12, 2, 6, 11);
    auto ds = leave_one_out_split(log);
    for (UserIndex u = 0; u < ds.n_users; ++u) {
        if (!ds.test[u].has_value()) continue;
        CHECK(ds.valid[u]->timestamp <= ds.test[u]->timestamp);
        for (const auto& rec : ds.train[u]) {
            CHECK(rec.timestamp <= ds.valid[u]->timestamp);
            CHECK(rec.timestamp <= ds.test[u]->timestamp);
        }
    }
}

TEST_CASE("positives come from train, all_interacted from everything") {
    auto log = parse_text("u1,i1,a,1\nu1,i2,a,2\nu1,i3,a,3\n");
    auto ds = leave_one_out_split(log);
    ItemIndex i1 = log.items.find("i1").value();
    ItemIndex i2 = log.items.find("i2").value();
    ItemIndex i3 = log.items.find("i3").value();
    CHECK(ds.positives[0][0] == std::vector<ItemIndex>{i1});
    CHECK(ds.has_interacted(0, i1));
    CHECK(ds.has_interacted(0, i2));  // held out, still blocked for negatives
    CHECK(ds.has_interacted(0, i3));
    CHECK(ds.train_triplets.size() == 1);
}

TEST_CASE("every per-type positive appears in all_interacted") {
    auto log = testing::random_log(10, 14, 3, 7, 23);
    auto ds = leave_one_out_split(log);
    for (std::size_t type = 0; type < ds.type_names.size(); ++type) {
        for (UserIndex u = 0; u < ds.n_users; ++u) {
            for (ItemIndex item : ds.positives[type][u]) CHECK(ds.has_interacted(u, item));
        }
    }
}

TEST_CASE("collapse relabels and keeps user/item/timestamp") {
    auto log = testing::random_log(5, 6, 3, 4, 3);
    auto collapsed = collapse_types(log, "all");
    REQUIRE(collapsed.types.size() == 1);
    CHECK(collapsed.types.token(0) == "all");
    REQUIRE(collapsed.records.size() == log.records.size());
    for (std::size_t k = 0; k < log.records.size(); ++k) {
        CHECK(collapsed.records[k].user == log.records[k].user);
        CHECK(collapsed.records[k].item == log.records[k].item);
        CHECK(collapsed.records[k].timestamp == log.records[k].timestamp);
        CHECK(collapsed.records[k].type == 0);
    }
}

TEST_CASE("type stats match a hand recount") {
    auto log = parse_text("u1,i1,a,1\nu1,i1,a,2\nu1,i2,a,3\nu2,i1,b,4\n");
    auto stats = compute_type_stats(log);
    REQUIRE(stats.size() == 2);
    CHECK(stats[0].type == "a");
    CHECK(stats[0].users == 1);
    CHECK(stats[0].items == 2);
    CHECK(stats[0].interactions == 2);  // (u1,i1) deduplicated
    CHECK(stats[0].density == doctest::Approx(1.0));
    CHECK(stats[1].interactions == 1);
}

}  // TEST_SUITE
