#pragma once

#include <optional>
#include <string>
#include <vector>

#include "coldwarm/data.hpp"
#include "coldwarm/recommender.hpp"

namespace coldwarm {

struct DatasetConfig {
    std::string path;
    std::string name = "dataset";
    LogSchema schema;
    std::optional<std::size_t> pcore;

    friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

struct SplitConfig {
    double q = 0.9;
    double val_fraction = 0.1;
    std::uint64_t seed = 42;

    friend bool operator==(const SplitConfig&, const SplitConfig&) = default;
};

struct ModelConfig {
    ModelKind kind = ModelKind::ease;
    MatrixMode matrix_mode = MatrixMode::binary;
    std::optional<std::vector<HyperParams>> grid; // overrides the default grid
    std::optional<HyperParams> params;            // skips tuning when set
    std::size_t tuning_budget = 20;
    std::uint64_t tuning_seed = 7;
    double svd_tolerance = 1e-10;
    int svd_max_iterations = 2000;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct ItemScanSettings {
    std::vector<std::size_t> n_grid{1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 30, 50};
    std::size_t sample_size = 1000;
    std::vector<std::size_t> k_list{1, 5, 10, 50, 100};
    std::uint64_t seed = 1234;
    std::size_t repeats = 1;
    std::vector<ItemId> probe_items;
    double max_failure_rate = 0.1;

    friend bool operator==(const ItemScanSettings&, const ItemScanSettings&) = default;
};

struct UserScanSettings {
    std::vector<std::size_t> n_grid{1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 30, 50};
    std::vector<std::size_t> k_list{10};
    std::uint64_t seed = 4321;
    std::size_t repeats = 1;

    friend bool operator==(const UserScanSettings&, const UserScanSettings&) = default;
};

struct ThresholdSettings {
    std::size_t window = 5;
    std::size_t bootstrap = 1000; // 0 skips the threshold interval
    double level = 0.95;
    std::uint64_t seed = 99;
    double flatness_tolerance = 1e-6;
    double contrast_multiplier = 3.0;
    std::string item_metric = "ndcg_star";
    std::size_t item_k = 10;
    std::string user_metric = "ndcg";
    std::size_t user_k = 10;

    friend bool operator==(const ThresholdSettings&, const ThresholdSettings&) = default;
};

struct MetricSettings {
    std::size_t bootstrap = 1000;
    double level = 0.95;

    friend bool operator==(const MetricSettings&, const MetricSettings&) = default;
};

struct RunConfig {
    DatasetConfig dataset;
    SplitConfig split;
    ModelConfig model;
    ItemScanSettings item_scan;
    UserScanSettings user_scan;
    ThresholdSettings threshold;
    MetricSettings metrics;
    bool filter_seen = true;
    std::size_t workers = 0; // 0 = all cores
    std::string output_dir = "coldwarm-out";

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parses JSON text. Unknown keys and out-of-range values raise ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& config);
void validate(const RunConfig& config);

} // namespace coldwarm
