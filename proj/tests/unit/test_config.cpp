#include <doctest.h>

#include "coldwarm/config.hpp"

using namespace coldwarm;

TEST_CASE("empty config gives the documented defaults") {
    auto c = parse_config("{}");
    CHECK(c == RunConfig{});
    CHECK(c.split.q == 0.9);
    CHECK(c.item_scan.sample_size == 1000);
    CHECK(c.item_scan.k_list == std::vector<std::size_t>{1, 5, 10, 50, 100});
    CHECK(c.threshold.window == 5);
}

TEST_CASE("parse, serialize, parse is the identity") {
    const std::string text = R"({
      "dataset": {"path": "ratings.dat", "name": "ml-1m", "delimiter": "::", "header": false,
                  "columns": {"user": 0, "item": 1, "timestamp": 3, "weight": 2},
                  "on_malformed": "abort", "pcore": 5},
      "split": {"q": 0.85, "val_fraction": 0.2, "seed": 3},
      "model": {"kind": "puresvd", "matrix_mode": "weighted", "grid": [{"rank": 8}, {"rank": 16}],
                "params": {"rank": 8}, "tuning_budget": 4, "tuning_seed": 1,
                "svd_tolerance": 1e-9, "svd_max_iterations": 50},
      "item_scan": {"n_grid": [1, 3, 9], "S": 100, "k_list": [10], "seed": 5, "repeats": 2,
                    "probe_items": [4, 2], "max_failure_rate": 0.2},
      "user_scan": {"n_grid": [1, 2], "k_list": [5, 10], "seed": 8, "repeats": 3},
      "threshold": {"window": 3, "bootstrap": 10, "level": 0.9, "seed": 2, "flatness_tolerance": 1e-5,
                    "contrast_multiplier": 2.5, "item_metric": "hr_star", "item_k": 10,
                    "user_metric": "hr", "user_k": 5},
      "metrics": {"bootstrap": 20, "level": 0.8},
      "filter_seen": false, "workers": 3, "output_dir": "out"
    })";
    auto a = parse_config(text);
    CHECK(a.dataset.schema.delimiter == "::");
    CHECK(a.dataset.schema.timestamp.index == std::optional<std::size_t>{3});
    CHECK(a.model.kind == ModelKind::puresvd);
    CHECK(a.item_scan.sample_size == 100);
    CHECK(a.model.params->at("rank") == 8.0);
    auto b = parse_config(serialize_config(a));
    CHECK(a == b);
    CHECK(serialize_config(a) == serialize_config(b));
    CHECK(parse_config(serialize_config(RunConfig{})) == RunConfig{});
}

TEST_CASE("column names round trip") {
    auto c = parse_config(R"({"dataset": {"columns": {"user": "uid", "item": "iid", "timestamp": "ts"}}})");
    CHECK(c.dataset.schema.user.name == std::optional<std::string>{"uid"});
    CHECK(parse_config(serialize_config(c)) == c);
}

TEST_CASE("invalid configs are rejected") {
    CHECK_THROWS_AS(parse_config("{"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"unknown": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"split": {"q": 0.9, "qq": 1}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"split": {"q": "high"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"model": {"kind": "bert"}})"), ConfigError);
    CHECK_THROWS_AS(validate(parse_config(R"({"split": {"q": 1.5}})")), ConfigError);
    CHECK_THROWS_AS(validate(parse_config(R"({"item_scan": {"n_grid": [3, 2]}})")), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}
