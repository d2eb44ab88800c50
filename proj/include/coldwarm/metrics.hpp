#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coldwarm/common.hpp"

namespace coldwarm {

/// One recommendation list. In successive evaluation each (user, step)
/// pair is its own unit.
struct EvalUnit {
    UserId user = 0;
    std::size_t step = 0;
    std::vector<ItemId> list; // ranked, no duplicates
    std::optional<ItemId> ground_truth;
};

/// 1-based rank of `item` within the first `k` entries of `list`, 0 if absent.
std::size_t rank_within(std::span<const ItemId> list, ItemId item, std::size_t k);

/// Modified hit rate: share of units whose top-K contains `item`.
double hr_star(ItemId item, std::span<const EvalUnit> units, std::size_t k);

/// Modified NDCG: mean of 1/log2(rank+1) over units, 0 where `item` is absent.
double ndcg_star(ItemId item, std::span<const EvalUnit> units, std::size_t k);

/// Standard single-ground-truth HR@K and NDCG@K (ideal DCG = 1).
double hr_at_k(std::span<const EvalUnit> units, std::size_t k);
double ndcg_at_k(std::span<const EvalUnit> units, std::size_t k);

/// Mean of `per_item` over the eligible set.
double aggregate_item_metric(const std::map<ItemId, double>& per_item, const std::set<ItemId>& eligible);

/// Mean over users of |A intersect B| / K between two runs' top-K lists.
/// Lists are truncated to K; both maps must cover the same users.
double stability_at_k(const std::map<UserId, std::vector<ItemId>>& lists_a,
                      const std::map<UserId, std::vector<ItemId>>& lists_b, std::size_t k);

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

/// Linear-interpolation quantile (type 7) of unsorted values, p in [0,1].
double quantile(std::vector<double> values, double p);

/// Percentile bootstrap interval for the mean. Fewer than 2 samples gives a
/// degenerate interval at the sample value.
Interval confidence_interval(std::span<const double> samples, double level = 0.95, std::size_t resamples = 1000,
                             std::uint64_t seed = 0);

double mean(std::span<const double> values);

/// One aggregated point of a metric curve.
struct MetricPoint {
    std::string setup; // "item" or "user"
    std::string model;
    std::string metric; // hr_star, ndcg_star, hr, ndcg
    std::size_t k = 0;
    std::size_t n = 0;
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t n_entities = 0;
};

/// Curves CSV: setup,model,metric,K,N,mean,ci_low,ci_high,n_entities
void write_curves_csv(std::ostream& os, std::span<const MetricPoint> points);
std::vector<MetricPoint> read_curves_csv(std::istream& is);
void write_curves_file(const std::string& path, std::span<const MetricPoint> points);
std::vector<MetricPoint> read_curves_file(const std::string& path);

} // namespace coldwarm
