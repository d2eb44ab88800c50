#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "coldwarm/metrics.hpp"

using namespace coldwarm;

namespace {

EvalUnit unit(std::vector<ItemId> list, std::optional<ItemId> gt = std::nullopt) { return {0, 0, std::move(list), gt}; }

} // namespace

TEST_CASE("HR* and NDCG* by hand") {
    std::vector<EvalUnit> four{unit({7, 1}), unit({1, 7}), unit({2, 3}), unit({7})};
    CHECK(hr_star(7, four, 2) == 0.75);
    CHECK(hr_star(7, four, 1) == 0.5);
    std::vector<EvalUnit> one_of_four{unit({7}), unit({1}), unit({2}), unit({3})};
    CHECK(hr_star(7, one_of_four, 10) == 0.25);

    std::vector<EvalUnit> two{unit({5, 1}), unit({1, 2})};
    CHECK(ndcg_star(5, two, 10) == 0.5);
    std::vector<EvalUnit> third{unit({1, 2, 5})};
    CHECK(ndcg_star(5, third, 10) == 0.5);
    CHECK(ndcg_star(5, third, 2) == 0.0);
    CHECK_THROWS_AS(hr_star(5, std::vector<EvalUnit>{}, 10), DataError);
}

TEST_CASE("HR@K and NDCG@K by hand") {
    std::vector<EvalUnit> first{unit({4, 2}, 4), unit({9}, 9)};
    CHECK(hr_at_k(first, 10) == 1.0);
    CHECK(ndcg_at_k(first, 10) == 1.0);
    std::vector<EvalUnit> never{unit({4, 2}, 8)};
    CHECK(hr_at_k(never, 10) == 0.0);
    CHECK(ndcg_at_k(never, 10) == 0.0);
    CHECK_THROWS_AS(hr_at_k(std::vector<EvalUnit>{unit({1})}, 1), DataError);
}

TEST_CASE("metrics match a brute-force recount") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<ItemId> item(0, 30);
    std::uniform_int_distribution<std::size_t> len(0, 20), count(1, 15);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<EvalUnit> units(count(rng));
        for (auto& u : units) {
            std::vector<ItemId> pool(31);
            std::iota(pool.begin(), pool.end(), 0);
            std::shuffle(pool.begin(), pool.end(), rng);
            u.list.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(len(rng)));
            u.ground_truth = item(rng);
        }
        const ItemId probe = item(rng);
        for (std::size_t k : {1, 5, 10, 50}) {
            double hits = 0, gain = 0, gt_hits = 0, gt_gain = 0;
            for (const auto& u : units)
                for (std::size_t r = 0; r < u.list.size() && r < k; ++r) {
                    if (u.list[r] == probe) {
                        hits += 1;
                        gain += 1.0 / std::log2(r + 2.0);
                    }
                    if (u.list[r] == *u.ground_truth) {
                        gt_hits += 1;
                        gt_gain += 1.0 / std::log2(r + 2.0);
                    }
                }
            const double n = static_cast<double>(units.size());
            CHECK(hr_star(probe, units, k) == hits / n);
            CHECK(std::abs(ndcg_star(probe, units, k) - gain / n) <= 1e-12);
            CHECK(hr_at_k(units, k) == gt_hits / n);
            CHECK(std::abs(ndcg_at_k(units, k) - gt_gain / n) <= 1e-12);
        }
    }
}

TEST_CASE("item aggregation over the eligible set") {
    CHECK(aggregate_item_metric({{3, 0.7}}, {3}) == 0.7);
    CHECK(aggregate_item_metric({{1, 0.2}, {2, 0.4}, {3, 9.0}}, {1, 2}) == doctest::Approx(0.3));
    CHECK_THROWS_AS(aggregate_item_metric({{1, 0.2}}, {}), DataError);
    CHECK_THROWS_AS(aggregate_item_metric({{1, 0.2}}, {2}), DataError);
}

TEST_CASE("stability") {
    std::map<UserId, std::vector<ItemId>> a{{1, {1, 2, 3}}, {2, {4, 5, 6}}};
    CHECK(stability_at_k(a, a, 3) == 1.0);
    std::map<UserId, std::vector<ItemId>> b{{1, {7, 8, 9}}, {2, {10, 11, 12}}};
    CHECK(stability_at_k(a, b, 3) == 0.0);
    std::map<UserId, std::vector<ItemId>> c{{1, {3, 2, 9}}, {2, {6, 0, 1}}};
    CHECK(stability_at_k(a, c, 3) == doctest::Approx(0.5));
    std::map<UserId, std::vector<ItemId>> other_users{{5, {1, 2, 3}}, {2, {4, 5, 6}}};
    CHECK_THROWS_AS(stability_at_k(a, other_users, 3), DataError);
}

TEST_CASE("quantile uses linear interpolation") {
    CHECK(quantile({1, 2, 3, 4}, 0.5) == 2.5);
    CHECK(quantile({5}, 0.3) == 5.0);
    CHECK(quantile({0, 10}, 0.25) == 2.5);
}

TEST_CASE("bootstrap interval") {
    std::vector<double> flat(50, 0.4);
    auto ci = confidence_interval(flat, 0.95, 500, 1);
    CHECK(ci.low == ci.high);
    CHECK(ci.low == doctest::Approx(0.4));

    // Width against the normal-theory half-width 1.96 sigma / sqrt(n).
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    std::vector<double> s(200);
    for (auto& v : s) v = normal(rng);
    const double m = mean(s);
    double var = 0;
    for (auto v : s) var += (v - m) * (v - m);
    const double sigma = std::sqrt(var / (s.size() - 1));
    ci = confidence_interval(s, 0.95, 4000, 9);
    const double analytic = 2 * 1.96 * sigma / std::sqrt(200.0);
    CHECK(std::abs((ci.high - ci.low) - analytic) <= 0.15 * analytic);
    CHECK(ci.low <= m);
    CHECK(m <= ci.high);
    CHECK(confidence_interval(s, 0.95, 300, 4).low == confidence_interval(s, 0.95, 300, 4).low);
    CHECK_THROWS_AS(confidence_interval(s, 1.5), ConfigError);
}

TEST_CASE("curves csv round trip") {
    std::vector<MetricPoint> pts{{"item", "ease", "ndcg_star", 10, 3, 0.1 + 0.2, 0.05, 0.4, 17},
                                 {"user", "puresvd", "hr", 5, 1, 1.0 / 3.0, 0.0, 1.0, 2}};
    std::stringstream ss;
    write_curves_csv(ss, pts);
    auto back = read_curves_csv(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[0].mean == pts[0].mean);
    CHECK(back[1].mean == pts[1].mean);
    CHECK(back[1].model == "puresvd");
    CHECK(back[0].n_entities == 17);
    std::stringstream bad("setup,model\n");
    CHECK_THROWS_AS(read_curves_csv(bad), DataError);
}
