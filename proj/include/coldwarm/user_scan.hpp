#pragma once

#include <map>
#include <string>
#include <vector>

#include "coldwarm/metrics.hpp"
#include "coldwarm/recommender.hpp"
#include "coldwarm/split.hpp"

namespace coldwarm {

struct UserScanConfig {
    std::vector<std::size_t> n_grid{1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 30, 50};
    std::vector<std::size_t> k_list{10};
    std::string model_name;
    std::uint64_t seed = 0;
    bool filter_seen = true;
    std::size_t repeats = 1;
    std::size_t workers = 0;
    std::size_t bootstrap = 1000;
    double level = 0.95;
};

void validate(const UserScanConfig& config, std::size_t n_items);

/// `n` events drawn uniformly without replacement, returned in chronological
/// order (stream position breaks timestamp ties).
std::vector<Event> truncate_history(std::span<const Event> input, std::size_t n, std::uint64_t seed);

struct UserCellRecord {
    UserId user = 0;
    std::size_t n = 0;
    std::size_t repeat = 0;
    std::uint64_t seed = 0;
    std::size_t k = 0;
    double hr = 0.0;
    double ndcg = 0.0;
};

struct UserScanResult {
    std::vector<MetricPoint> curve;
    std::vector<UserCellRecord> records;         // sorted by (user, n, repeat, k)
    std::map<std::size_t, std::size_t> eligible; // users per N
    std::map<std::size_t, std::size_t> excluded; // users with |input| < N
    std::vector<std::size_t> omitted_n;          // N values without any eligible user
};

/// Scores truncated histories with a frozen model against each user's single
/// post-timepoint ground truth. The model is never modified.
UserScanResult run_user_scan(const Recommender& model, const UserScanSplit& uscan, const UserScanConfig& config);

/// Per-N, per-user values of "hr" or "ndcg" at K (averaged over repeats).
std::map<std::size_t, std::vector<double>> user_entity_values(const std::vector<UserCellRecord>& records,
                                                              const std::string& metric, std::size_t k);

void write_user_records(const std::string& path, const std::vector<UserCellRecord>& records);
std::vector<UserCellRecord> read_user_records(const std::string& path);

} // namespace coldwarm
