#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "coldwarm/random.hpp"
#include "coldwarm/split.hpp"
#include "support.hpp"

using namespace coldwarm;

namespace {

// Ten events at t=1..10 by users a,b,c in turn; a owns t=10.
InteractionLog toy() {
    std::vector<RawInteraction> rows;
    const char* users[] = {"a", "b", "c"};
    for (int t = 1; t <= 10; ++t) rows.push_back({users[(t - 1) % 3], "i" + std::to_string(t % 4), t});
    return make_log(rows);
}

std::set<UserId> test_users(const GlobalTimepointSplit& s) {
    std::set<UserId> out;
    for (const auto& r : s.test) out.insert(r.user);
    return out;
}

} // namespace

TEST_CASE("timepoint of t=1..10 at q=0.9 is 9") {
    auto s = split_global_timepoint(toy(), 0.9, 0.1, 1);
    CHECK(s.gt == 9);
    // Only t=10 (user a) is after the timepoint.
    REQUIRE(s.test.size() == 1);
    CHECK(s.test[0].holdout.size() == 1);
    CHECK(s.test[0].holdout[0].timestamp == 10);
    CHECK(s.test[0].input.size() == 3);
    CHECK(s.counters.post_gt_events == 1);
    check_split_invariants(s);
}

TEST_CASE("split rejects degenerate inputs") {
    CHECK_THROWS_AS(split_global_timepoint(toy(), 1.0, 0.1, 1), ConfigError);
    CHECK_THROWS_AS(split_global_timepoint(toy(), 0.9, 0.0, 1), ConfigError);
    auto flat = make_log({{"a", "x", 3}, {"b", "y", 3}});
    CHECK_THROWS_AS(split_global_timepoint(flat, 0.5, 0.5, 1), DataError);
    // Everything tied at the maximum leaves no test events.
    auto tail = make_log({{"a", "x", 1}, {"b", "y", 5}, {"c", "y", 5}, {"d", "x", 5}});
    CHECK_THROWS_AS(split_global_timepoint(tail, 0.9, 0.5, 1), DataError);
}

TEST_CASE("post-timepoint share is the quantile share") {
    std::mt19937_64 rng(2);
    std::vector<RawInteraction> rows;
    for (int t = 0; t < 1000; ++t) rows.push_back({"u" + std::to_string(rng() % 50), "i" + std::to_string(rng() % 40), t});
    auto s = split_global_timepoint(make_log(rows), 0.9, 0.1, 3);
    CHECK(s.counters.post_gt_events == 100);
}

TEST_CASE("validation users are a seeded share of non-test users") {
    std::mt19937_64 rng(9);
    auto log = testing::random_log(rng, 200, 30, 10);
    auto a = split_global_timepoint(log, 0.8, 0.25, 17);
    auto b = split_global_timepoint(log, 0.8, 0.25, 17);
    const std::size_t non_test = log.n_users() - a.test.size();
    CHECK(a.validation.size() + a.counters.validation_dropped ==
          static_cast<std::size_t>(std::llround(0.25 * static_cast<double>(non_test))));
    REQUIRE(a.validation.size() == b.validation.size());
    for (std::size_t j = 0; j < a.validation.size(); ++j) CHECK(a.validation[j].user == b.validation[j].user);
    for (const auto& vp : a.validation) {
        CHECK(!vp.input.empty());
        CHECK(std::none_of(vp.input.begin(), vp.input.end(), [&](const Event& e) { return chronological(vp.target, e); }));
    }
    check_split_invariants(a);
}

TEST_CASE("item scan split on a hand-built log") {
    // u1, u2 train users; u3 is a test user. gt = 4.
    auto log = make_log({{"u1", "x", 1}, {"u1", "p", 2}, {"u2", "p", 3}, {"u3", "p", 4}, {"u2", "y", 4},
                         {"u3", "y", 5}, {"u3", "p", 6}, {"u3", "x", 7}});
    auto s = split_global_timepoint(log, 0.6, 0.01, 1);
    REQUIRE(s.gt == 4);
    CHECK(s.validation.empty());
    const ItemId p = *log.items->find("p");
    auto is = build_item_scan_split(s, p);
    CHECK(is.probe_pool.size() == 2);
    CHECK(is.base_train.events.size() == 2);
    REQUIRE(is.eval_users.size() == 1);
    // The probe is scrubbed from the test user's input and holdout.
    CHECK(is.eval_users[0].input.empty());
    CHECK(is.eval_users[0].holdout.size() == 2);
    check_item_scan_invariants(s, is);

    // n = |pool| gives back the full train set in stream order.
    auto full = materialize_train(is, 2, 5);
    CHECK(full.events == s.train.events);
    CHECK_THROWS_AS(materialize_train(is, 3, 5), DataError);
    CHECK_THROWS_AS(materialize_train(is, 0, 5), DataError);

    // Item seen only by the test user.
    auto only_test = make_log({{"u1", "x", 1}, {"u2", "x", 2}, {"u2", "y", 3}, {"u3", "z", 5}, {"u3", "x", 6}});
    auto s2 = split_global_timepoint(only_test, 0.6, 0.01, 1);
    CHECK_THROWS_AS(build_item_scan_split(s2, *only_test.items->find("z")), DataError);
}

TEST_CASE("probe pool matches an independent frequency count") {
    std::mt19937_64 rng(4);
    auto log = testing::random_log(rng, 80, 15, 12);
    auto s = split_global_timepoint(log, 0.85, 0.1, 2);
    std::set<UserId> excluded = test_users(s);
    for (const auto& vp : s.validation) excluded.insert(vp.user);
    for (ItemId i = 0; i < log.n_items(); ++i) {
        std::size_t count = 0;
        for (const auto& e : log.events) count += e.item == i && !excluded.count(e.user);
        if (!count) continue;
        auto is = build_item_scan_split(s, i);
        CHECK(is.probe_pool.size() == count);
        check_item_scan_invariants(s, is);
    }
}

TEST_CASE("materialize_train draws pairs uniformly") {
    std::vector<RawInteraction> rows;
    for (int u = 0; u < 4; ++u) rows.push_back({"u" + std::to_string(u), "p", u});
    rows.push_back({"t", "p", 10});
    rows.push_back({"t", "q", 11});
    auto log = make_log(rows);
    auto s = split_global_timepoint(log, 0.7, 0.01, 1);
    auto is = build_item_scan_split(s, 0);
    REQUIRE(is.probe_pool.size() == 4);
    std::map<std::pair<UserId, UserId>, int> counts;
    const int draws = 10000;
    for (int d = 0; d < draws; ++d) {
        auto t = materialize_train(is, 2, derive_seed(99, {static_cast<std::uint64_t>(d)}));
        REQUIRE(t.events.size() == 2);
        CHECK(t.events[0].position < t.events[1].position);
        ++counts[{t.events[0].user, t.events[1].user}];
    }
    CHECK(counts.size() == 6);
    for (const auto& [pair, c] : counts) CHECK(std::abs(c / double(draws) - 1.0 / 6) < 0.02);
}

TEST_CASE("user scan split keeps the earliest holdout event") {
    auto log = make_log({{"a", "x", 1}, {"a", "y", 2}, {"b", "x", 2}, {"b", "z", 3}, {"a", "z", 6}, {"a", "w", 5},
                         {"a", "v", 7}, {"a", "u", 8}, {"a", "t", 9}, {"b", "y", 6}, {"c", "y", 7}});
    auto s = split_global_timepoint(log, 0.3, 0.01, 1);
    REQUIRE(s.gt == 3);
    auto us = build_user_scan_split(s);
    check_user_scan_invariants(us);
    std::size_t expected_discarded = 0;
    for (const auto& r : s.test) expected_discarded += r.holdout.size() - 1;
    CHECK(us.discarded_events == expected_discarded);
    CHECK(us.cold_start_users == 1);
    for (const auto& r : us.test_records) {
        if (log.users->key(r.user) == "a") CHECK(r.holdout[0].timestamp == 5);
        if (log.users->key(r.user) == "b") CHECK(r.holdout[0].timestamp == 6);
    }
}

TEST_CASE("export and import round trip") {
    std::mt19937_64 rng(8);
    auto log = testing::random_log(rng, 40, 12, 8);
    auto s = split_global_timepoint(log, 0.8, 0.2, 6);
    const auto d1 = testing::scratch_dir("split_a");
    const auto d2 = testing::scratch_dir("split_b");
    export_split(s, d1.string());
    export_split(split_global_timepoint(log, 0.8, 0.2, 6), d2.string());
    for (auto f : {"train.csv", "validation.csv", "test.csv", "users.csv", "items.csv", "manifest.json"})
        CHECK(testing::slurp(d1 / f) == testing::slurp(d2 / f));

    auto back = import_split(d1.string());
    CHECK(back.gt == s.gt);
    CHECK(back.seed == s.seed);
    CHECK(back.train.events == s.train.events);
    CHECK(back.train.n_items() == s.train.n_items());
    REQUIRE(back.test.size() == s.test.size());
    for (std::size_t j = 0; j < s.test.size(); ++j) {
        CHECK(back.test[j].input == s.test[j].input);
        CHECK(back.test[j].holdout == s.test[j].holdout);
    }
    REQUIRE(back.validation.size() == s.validation.size());
    for (std::size_t j = 0; j < s.validation.size(); ++j) CHECK(back.validation[j].target == s.validation[j].target);
    CHECK(back.counters.validation_dropped == s.counters.validation_dropped);
}

TEST_CASE("randomized leakage invariants") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 40; ++trial) {
        auto log = testing::random_log(rng, 25, 10, 9, 50);
        GlobalTimepointSplit s;
        try {
            s = split_global_timepoint(log, 0.9, 0.2, trial);
        } catch (const DataError&) {
            continue;
        }
        check_split_invariants(s);
        check_user_scan_invariants(build_user_scan_split(s));
        std::set<ItemId> train_items;
        for (const auto& e : s.train.events) train_items.insert(e.item);
        for (auto i : train_items) check_item_scan_invariants(s, build_item_scan_split(s, i));
    }
}
