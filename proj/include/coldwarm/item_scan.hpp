#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coldwarm/metrics.hpp"
#include "coldwarm/recommender.hpp"
#include "coldwarm/split.hpp"

namespace coldwarm {

struct ItemScanConfig {
    std::vector<std::size_t> n_grid{1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 30, 50};
    std::size_t sample_size = 1000; // probe items S
    std::vector<std::size_t> k_list{1, 5, 10, 50, 100};
    std::string model_name;
    HyperParams params; // frozen, tuned once on the unmodified split
    MatrixMode matrix_mode = MatrixMode::binary;
    std::uint64_t seed = 0;
    bool filter_seen = true;
    std::size_t repeats = 1;
    std::size_t workers = 0;
    /// When non-empty, used instead of sampling probe items.
    std::vector<ItemId> probe_items;
    std::size_t bootstrap = 1000;
    double level = 0.95;
    double max_failure_rate = 0.1;
};

void validate(const ItemScanConfig& config, std::size_t n_items);

/// Uniform sample without replacement of items that have training events,
/// in ascending id order. `S` larger than the eligible set is clamped.
std::vector<ItemId> sample_probe_items(const InteractionLog& train, std::size_t sample_size, std::uint64_t seed,
                                       bool* clamped = nullptr);

struct SuccessiveEvaluation {
    std::vector<EvalUnit> units; // empty unless requested
    std::size_t n_units = 0;
    std::size_t skipped_users = 0; // no input and no holdout
    std::map<std::size_t, double> hr_star;   // by K
    std::map<std::size_t, double> ndcg_star; // by K
};

/// For a user with n holdout events, emits n units: unit j scores
/// input + holdout[0..j) and keeps the top-max(K) list.
SuccessiveEvaluation successive_evaluate_item(const Recommender& model, ItemId probe_item,
                                              std::span<const TestUserRecord> eval_users,
                                              std::span<const std::size_t> k_list, bool filter_seen,
                                              bool keep_units = false);

/// One persisted (item, N, repeat, K) measurement.
struct ItemCellRecord {
    ItemId item = 0;
    std::size_t n = 0;
    std::size_t repeat = 0;
    std::uint64_t seed = 0;
    std::size_t k = 0;
    double hr_star = 0.0;
    double ndcg_star = 0.0;
    std::size_t units = 0;
    std::size_t pool = 0; // |M(i)|

    friend bool operator==(const ItemCellRecord&, const ItemCellRecord&) = default;
};

struct TaskFailure {
    ItemId item = 0;
    std::size_t n = 0;
    std::size_t repeat = 0;
    std::string error;
};

struct ItemScanResult {
    std::vector<ItemId> probes;
    std::map<ItemId, std::size_t> pool_sizes;
    std::vector<ItemCellRecord> records; // sorted by (item, n, repeat, k)
    std::vector<MetricPoint> curve;
    std::map<std::size_t, std::size_t> skipped_items; // by N: probes with |M(i)| < N
    std::vector<TaskFailure> failures;
};

/// Seed of the subsample for one (item, N, repeat) cell.
std::uint64_t cell_seed(std::uint64_t base, ItemId item, std::size_t n, std::size_t repeat);

/// Append-only NDJSON log of cell records; lets an interrupted scan resume.
class RunLog {
  public:
    explicit RunLog(std::string path);
    const std::vector<ItemCellRecord>& records() const { return records_; }
    void append(const std::vector<ItemCellRecord>& cells, const std::string& item_key);
    void append_failure(const TaskFailure& failure);

  private:
    std::string path_;
    std::vector<ItemCellRecord> records_;
};

std::vector<ItemCellRecord> read_item_run_log(const std::string& path);

/// Pure fold over records: per-item values are averaged over repeats, then
/// over the items with |M(i)| >= N (the eligible set), with bootstrap CIs.
std::vector<MetricPoint> aggregate_item_scan(const std::vector<ItemCellRecord>& records, const ItemScanConfig& config);

/// Per-N, per-item values of one metric ("hr_star"/"ndcg_star") at K.
std::map<std::size_t, std::vector<double>> item_entity_values(const std::vector<ItemCellRecord>& records,
                                                              const std::string& metric, std::size_t k);

/// Retrains for every (probe, N <= |M(i)|, repeat) cell. `log` (optional)
/// supplies already-finished cells and receives new ones.
ItemScanResult run_item_scan(const ItemScanConfig& config, const GlobalTimepointSplit& split, const Trainer& trainer,
                             RunLog* log = nullptr, const TrainContext& context = {});

/// Mean top-K overlap of every evaluation unit's list between two
/// subsamples of the same probe item drawn with different seeds.
double item_scan_stability(const ItemScanConfig& config, const GlobalTimepointSplit& split, const Trainer& trainer,
                           ItemId probe, std::size_t n, std::uint64_t seed_a, std::uint64_t seed_b, std::size_t k,
                           const TrainContext& context = {});

} // namespace coldwarm
