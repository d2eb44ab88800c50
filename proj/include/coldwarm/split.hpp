#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coldwarm/data.hpp"

namespace coldwarm {

struct ValidationPair {
    UserId user = 0;
    std::vector<Event> input; // chronological
    Event target;             // user's last pre-timepoint event
};

struct TestUserRecord {
    UserId user = 0;
    std::vector<Event> input;   // pre-timepoint, chronological
    std::vector<Event> holdout; // post-timepoint, chronological

    /// Entire history lies after the timepoint.
    bool cold_start() const { return input.empty(); }
};

struct SplitCounters {
    std::size_t n_events = 0;
    std::size_t post_gt_events = 0;
    std::size_t train_users = 0;
    std::size_t validation_users = 0;
    std::size_t validation_dropped = 0; // validation users with < 2 events
    std::size_t test_users = 0;
    std::size_t cold_start_test_users = 0;
};

struct GlobalTimepointSplit {
    Timestamp gt = 0;
    double q = 0.9;
    double val_fraction = 0.1;
    std::uint64_t seed = 0;
    InteractionLog train;
    std::vector<ValidationPair> validation;
    std::vector<TestUserRecord> test;
    SplitCounters counters;
};

/// Timepoint = order statistic at 0-based rank ceil(q*n)-1 of all event
/// timestamps; events tied with it stay on the train side. Users with any
/// later event are test users; the rest are shuffled by `seed` and
/// `round(val_fraction * count)` of them become validation users.
GlobalTimepointSplit split_global_timepoint(const InteractionLog& log, double q, double val_fraction,
                                            std::uint64_t seed);

struct ItemScanSplit {
    ItemId probe_item = 0;
    InteractionLog base_train;                 // train without the probe's events
    std::vector<Event> probe_pool;             // probe's training events, log order
    std::vector<TestUserRecord> eval_users;    // probe scrubbed from input and holdout
    std::vector<ValidationPair> validation;    // probe scrubbed; pairs whose target was the probe are dropped
};

ItemScanSplit build_item_scan_split(const GlobalTimepointSplit& split, ItemId probe_item);

/// base_train plus `n` probe events drawn uniformly without replacement.
/// Output events are in original stream order.
InteractionLog materialize_train(const ItemScanSplit& split, std::size_t n, std::uint64_t seed);

struct UserScanSplit {
    std::vector<TestUserRecord> test_records; // each holdout has exactly one event
    std::size_t discarded_events = 0;
    std::size_t cold_start_users = 0; // kept, but never eligible since N >= 1
};

UserScanSplit build_user_scan_split(const GlobalTimepointSplit& split);

/// Throws DataError if any no-leakage invariant of the split is violated.
void check_split_invariants(const GlobalTimepointSplit& split);
void check_item_scan_invariants(const GlobalTimepointSplit& split, const ItemScanSplit& iscan);
void check_user_scan_invariants(const UserScanSplit& uscan);

/// Writes train.csv, validation.csv, test.csv, users.csv, items.csv and
/// manifest.json into `dir` (created if absent).
void export_split(const GlobalTimepointSplit& split, const std::string& dir);
GlobalTimepointSplit import_split(const std::string& dir);

} // namespace coldwarm
