#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "coldwarm/item_scan.hpp"
#include "coldwarm/random.hpp"
#include "support.hpp"

using namespace coldwarm;

namespace {

ItemScanConfig planted_config(const std::vector<ItemId>& probes) {
    ItemScanConfig c;
    c.n_grid = {1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20};
    c.k_list = {probes.size()};
    c.model_name = "popularity";
    c.seed = 5;
    c.filter_seen = false;
    c.probe_items = probes;
    c.bootstrap = 50;
    c.workers = 2;
    return c;
}

std::map<std::size_t, double> curve_values(const std::vector<MetricPoint>& pts, const std::string& metric) {
    std::map<std::size_t, double> out;
    for (const auto& p : pts)
        if (p.metric == metric) out[p.n] = p.mean;
    return out;
}

} // namespace

TEST_CASE("probe sampling") {
    std::mt19937_64 rng(1);
    auto log = testing::random_log(rng, 30, 12, 6);
    bool clamped = false;
    auto all = sample_probe_items(log, 1000, 3, &clamped);
    CHECK(clamped);
    CHECK(all.size() == compute_stats(log).n_items);
    CHECK(std::is_sorted(all.begin(), all.end()));
    CHECK(sample_probe_items(log, 5, 8) == sample_probe_items(log, 5, 8));

    // 2 of 5 items: each of the ten pairs with probability 1/10.
    auto five = make_log({{"a", "0", 1}, {"a", "1", 2}, {"a", "2", 3}, {"a", "3", 4}, {"a", "4", 5}});
    std::map<std::vector<ItemId>, int> counts;
    const int reps = 10000;
    for (int r = 0; r < reps; ++r) ++counts[sample_probe_items(five, 2, derive_seed(7, {std::uint64_t(r)}))];
    CHECK(counts.size() == 10);
    for (const auto& [pair, c] : counts) CHECK(std::abs(c / double(reps) - 0.1) < 0.02);
}

TEST_CASE("successive evaluation with fixed lists") {
    // Scores put item 2 first, then 0, 1, 3.
    testing::FixedStub model({0.5, 0.4, 0.9, 0.1});
    std::vector<TestUserRecord> users(2);
    users[0].user = 0;
    users[0].holdout = {Event{0, 3, 10, 1.0, 0}, Event{0, 0, 11, 1.0, 1}};
    users[1].user = 1;
    users[1].input = {Event{1, 2, 1, 1.0, 2}};
    users[1].holdout = {Event{1, 1, 12, 1.0, 3}};
    const std::vector<std::size_t> ks{1, 2};

    // Without filtering every unit sees [2, 0, ...].
    auto top_probe = successive_evaluate_item(model, 2, users, ks, false, true);
    CHECK(top_probe.n_units == 3);
    CHECK(top_probe.hr_star.at(1) == 1.0);
    CHECK(top_probe.ndcg_star.at(2) == 1.0);

    // With filtering, user 1 has seen item 2: lists are [2,0], [2,0], [0,1].
    auto f = successive_evaluate_item(model, 0, users, ks, true, true);
    REQUIRE(f.units.size() == 3);
    CHECK(f.units[1].list == std::vector<ItemId>{2, 0}); // item 0 is appended only after the unit
    CHECK(f.units[2].list == std::vector<ItemId>{0, 1});
    CHECK(f.hr_star.at(1) == doctest::Approx(1.0 / 3));
    CHECK(f.hr_star.at(2) == 1.0);
    CHECK(f.ndcg_star.at(2) == doctest::Approx((2.0 / std::log2(3.0) + 1.0) / 3));
    CHECK(f.ndcg_star.at(2) == doctest::Approx(ndcg_star(0, f.units, 2)));

    std::vector<TestUserRecord> empty(1);
    CHECK_THROWS_AS(successive_evaluate_item(model, 0, empty, ks, true), DataError);
}

TEST_CASE("planted popularity threshold") {
    auto planted = testing::planted_log(3, 25, 9);
    auto split = split_global_timepoint(planted.log, planted.q, 0.001, 1);
    REQUIRE(split.validation.empty());
    auto result = run_item_scan(planted_config(planted.probes), split, testing::popularity_trainer());
    CHECK(result.failures.empty());
    for (const auto& [n, v] : curve_values(result.curve, "hr_star")) CHECK(v == (n >= 10 ? 1.0 : 0.0));
    // Two post-timepoint events per test user, plus p0 unless it is the probe.
    for (const auto& r : result.records) CHECK(r.units == (r.item == planted.probes[0] ? 40 : 60));
}

TEST_CASE("grid values above the pool are skipped per item") {
    auto planted = testing::planted_log(2, 12, 4);
    auto split = split_global_timepoint(planted.log, planted.q, 0.001, 1);
    auto config = planted_config(planted.probes);
    config.n_grid = {5, 12, 15};
    auto result = run_item_scan(config, split, testing::popularity_trainer());
    CHECK(result.skipped_items.at(15) == 2);
    CHECK(curve_values(result.curve, "hr_star").size() == 2);

    config.n_grid = {3};
    auto single = run_item_scan(config, split, testing::popularity_trainer());
    CHECK(curve_values(single.curve, "ndcg_star").size() == 1);
}

TEST_CASE("item scan is deterministic across worker counts") {
    std::mt19937_64 rng(3);
    auto log = testing::random_log(rng, 150, 25, 20);
    auto split = split_global_timepoint(log, 0.85, 0.1, 2);
    ItemScanConfig c;
    c.n_grid = {1, 2, 3, 5};
    c.sample_size = 6;
    c.k_list = {1, 5, 10};
    c.model_name = "ease";
    c.params = {{"lambda", 20.0}};
    c.seed = 77;
    c.bootstrap = 100;
    c.repeats = 2;
    const auto trainer = make_trainer(ModelKind::ease);
    c.workers = 1;
    auto a = run_item_scan(c, split, trainer);
    c.workers = 4;
    auto b = run_item_scan(c, split, trainer);
    CHECK(a.records == b.records);
    REQUIRE(a.curve.size() == b.curve.size());
    for (std::size_t j = 0; j < a.curve.size(); ++j) {
        CHECK(a.curve[j].mean == b.curve[j].mean);
        CHECK(a.curve[j].ci_low == b.curve[j].ci_low);
    }
    for (const auto& r : a.records) CHECK(r.seed == cell_seed(77, r.item, r.n, r.repeat));
    CHECK(cell_seed(77, 3, 2, 0) == derive_seed(77, {3, 2}));
}

TEST_CASE("interrupted scan resumes to the same result") {
    std::mt19937_64 rng(4);
    auto log = testing::random_log(rng, 120, 20, 18);
    auto split = split_global_timepoint(log, 0.85, 0.1, 2);
    ItemScanConfig c;
    c.n_grid = {1, 2, 4};
    c.sample_size = 5;
    c.k_list = {5, 10};
    c.model_name = "itemknn";
    c.params = {{"k", 10.0}};
    c.seed = 9;
    c.bootstrap = 100;
    c.workers = 3;
    const auto trainer = make_trainer(ModelKind::itemknn);
    const auto dir = testing::scratch_dir("resume");

    auto full = run_item_scan(c, split, trainer);

    const auto path = (dir / "run.ndjson").string();
    {
        RunLog first(path);
        run_item_scan(c, split, trainer, &first);
    }
    // Keep a third of the log and tear the last line, as a crash would.
    std::vector<std::string> lines;
    {
        std::ifstream is(path);
        for (std::string l; std::getline(is, l);) lines.push_back(l);
    }
    {
        std::ofstream os(path, std::ios::trunc);
        for (std::size_t j = 0; j < lines.size() / 3; ++j) os << lines[j] << '\n';
        os << lines[lines.size() / 3].substr(0, 20);
    }
    {
        std::ofstream os(path, std::ios::app);
        os << '\n';
    }
    RunLog resumed(path);
    CHECK(resumed.records().size() < full.records.size());
    auto again = run_item_scan(c, split, trainer, &resumed);
    CHECK(again.records == full.records);
    REQUIRE(again.curve.size() == full.curve.size());
    for (std::size_t j = 0; j < full.curve.size(); ++j) CHECK(again.curve[j].mean == full.curve[j].mean);
}

TEST_CASE("too many failed retrains abort the scan") {
    std::mt19937_64 rng(5);
    auto log = testing::random_log(rng, 80, 15, 15);
    auto split = split_global_timepoint(log, 0.85, 0.1, 2);
    ItemScanConfig c;
    c.n_grid = {1, 2};
    c.sample_size = 4;
    c.k_list = {5};
    c.bootstrap = 10;
    Trainer broken = [](const SparseInteractionMatrix&, const HyperParams&, const TrainContext&) -> std::unique_ptr<Recommender> {
        throw RunFailure("solver diverged");
    };
    CHECK_THROWS_AS(run_item_scan(c, split, broken), RunFailure);
    c.k_list = {0};
    CHECK_THROWS_AS(run_item_scan(c, split, broken), ConfigError);
}

TEST_CASE("stability of identical seeds is one") {
    auto planted = testing::planted_log(2, 20, 5);
    auto split = split_global_timepoint(planted.log, planted.q, 0.001, 1);
    auto c = planted_config(planted.probes);
    const auto trainer = make_trainer(ModelKind::itemknn);
    c.params = {{"k", 5.0}};
    CHECK(item_scan_stability(c, split, trainer, planted.probes[0], 10, 3, 3, 2) == 1.0);
    const double s = item_scan_stability(c, split, trainer, planted.probes[0], 10, 3, 4, 2);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
}
