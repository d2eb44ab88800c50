#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "coldwarm/data.hpp"
#include "support.hpp"

using namespace coldwarm;

namespace {

InteractionLog ingest(const std::string& text, LogSchema schema = {}, IngestReport* report = nullptr) {
    std::istringstream is(text);
    return ingest_log(is, schema, report);
}

// Repeatedly drop everything below p in one sweep until stable; keyed by strings.
std::set<std::pair<std::string, std::string>> pcore_oracle(const InteractionLog& log, std::size_t p) {
    std::vector<std::pair<std::string, std::string>> ev;
    for (const auto& e : log.events) ev.emplace_back(log.users->key(e.user), log.items->key(e.item));
    while (true) {
        std::map<std::string, std::size_t> udeg;
        std::map<std::string, std::set<std::string>> idist;
        for (const auto& [u, i] : ev) {
            ++udeg[u];
            idist[i].insert(u);
        }
        std::vector<std::pair<std::string, std::string>> kept;
        for (const auto& x : ev)
            if (udeg[x.first] >= p && idist[x.second].size() >= p) kept.push_back(x);
        if (kept.size() == ev.size()) break;
        ev = std::move(kept);
    }
    return {ev.begin(), ev.end()};
}

} // namespace

TEST_CASE("ingest by header names and reports malformed rows") {
    IngestReport report;
    auto log = ingest("user,item,timestamp\n"
                      "a,x,1\n"
                      "b,y,notanumber\n"
                      "a,y,3\n"
                      "\n"
                      "c,,4\n"
                      "c,x,5\n",
                      {}, &report);
    CHECK(log.events.size() == 3);
    CHECK(report.rows_read == 5);
    CHECK(report.skipped == 2);
    CHECK(report.skipped_lines == std::vector<std::size_t>{3, 6});
    CHECK(log.n_users() == 2);
    CHECK(log.n_items() == 2);
    CHECK(log.users->key(log.events[2].user) == "c");
    CHECK(log.events[2].position == 2);
}

TEST_CASE("abort policy names the offending line") {
    LogSchema s;
    s.on_malformed = MalformedPolicy::abort;
    CHECK_THROWS_WITH_AS(ingest("user,item,timestamp\na,x,1\na,x,-3\n", s), "malformed row at line 3", DataError);
}

TEST_CASE("missing column is a schema error") {
    CHECK_THROWS_AS(ingest("uid,item,timestamp\na,x,1\n"), DataError);
}

TEST_CASE("index columns with a multi-character delimiter") {
    LogSchema s;
    s.delimiter = "::";
    s.has_header = false;
    s.user = {std::nullopt, 0};
    s.item = {std::nullopt, 1};
    s.timestamp = {std::nullopt, 3};
    s.weight = ColumnRef{std::nullopt, 2};
    auto log = ingest("1::1193::5::978300760\n1::661::3::978302109\n2::1193::4::978298413\n", s);
    REQUIRE(log.events.size() == 3);
    CHECK(log.events[1].weight == 3.0);
    CHECK(log.events[2].timestamp == 978298413);
    CHECK(log.n_items() == 2);
}

TEST_CASE("stats recount with duplicate pairs") {
    auto log = make_log({{"a", "x", 1}, {"a", "x", 2}, {"a", "y", 3}, {"b", "y", 4}});
    auto s = compute_stats(log);
    CHECK(s.n_users == 2);
    CHECK(s.n_items == 2);
    CHECK(s.n_interactions == 4);
    CHECK(s.density == doctest::Approx(1.0));
    CHECK(s.avg_user_interactions == 2.0);
    CHECK(s.avg_item_interactions == 2.0);
    CHECK(stats_csv(s) == "users,items,interactions,density,avg_user_interactions,avg_item_interactions\n"
                          "2,2,4,1,2,2\n");
}

TEST_CASE("stats of an empty log is an error") {
    CHECK_THROWS_AS(compute_stats(ingest("user,item,timestamp\n")), DataError);
}

TEST_CASE("p-core filter matches brute force") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 60; ++trial) {
        auto log = testing::random_log(rng, 30, 25, 12);
        for (std::size_t p : {1, 2, 3, 5}) {
            const auto expected = pcore_oracle(log, p);
            if (expected.empty()) {
                CHECK_THROWS_AS(pcore_filter(log, p), DataError);
                continue;
            }
            auto got = pcore_filter(log, p);
            std::set<std::pair<std::string, std::string>> pairs;
            for (const auto& e : got.events) pairs.emplace(got.users->key(e.user), got.items->key(e.item));
            CHECK(pairs == expected);
            CHECK(got.n_users() == compute_stats(got).n_users);
            // Idempotent at its fixed point.
            CHECK(pcore_filter(got, p).events.size() == got.events.size());
        }
    }
}

TEST_CASE("p-core with p=1 keeps everything") {
    auto log = make_log({{"a", "x", 1}, {"b", "y", 2}});
    CHECK(pcore_filter(log, 1).events.size() == 2);
    CHECK_THROWS_AS(pcore_filter(log, 0), ConfigError);
}

TEST_CASE("matrix collapses duplicates to the latest event") {
    auto log = make_log({{"a", "x", 5, 2.0}, {"a", "x", 1, 7.0}, {"a", "x", 5, 3.0}, {"b", "x", 0, 4.0}});
    auto bin = build_matrix(log, MatrixMode::binary);
    CHECK(bin.nnz() == 2);
    CHECK(bin.by_user.coeff(0, 0) == 1.0);
    auto w = build_matrix(log, MatrixMode::weighted);
    // Timestamp tie at 5 is broken by stream position.
    CHECK(w.by_user.coeff(0, 0) == 3.0);
    CHECK(w.by_item.coeff(1, 0) == 4.0);
}
