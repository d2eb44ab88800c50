#include "coldwarm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "coldwarm/random.hpp"

namespace coldwarm {

namespace {

double discount(std::size_t rank) { return 1.0 / std::log2(static_cast<double>(rank) + 1.0); }

void require_units(std::span<const EvalUnit> units) {
    if (units.empty()) throw DataError("metric over an empty unit list");
}

} // namespace

std::size_t rank_within(std::span<const ItemId> list, ItemId item, std::size_t k) {
    const std::size_t limit = std::min(k, list.size());
    for (std::size_t r = 0; r < limit; ++r)
        if (list[r] == item) return r + 1;
    return 0;
}

double hr_star(ItemId item, std::span<const EvalUnit> units, std::size_t k) {
    require_units(units);
    std::size_t hits = 0;
    for (const auto& u : units) hits += rank_within(u.list, item, k) != 0;
    return static_cast<double>(hits) / static_cast<double>(units.size());
}

double ndcg_star(ItemId item, std::span<const EvalUnit> units, std::size_t k) {
    require_units(units);
    double total = 0.0;
    for (const auto& u : units)
        if (auto r = rank_within(u.list, item, k)) total += discount(r);
    return total / static_cast<double>(units.size());
}

double hr_at_k(std::span<const EvalUnit> units, std::size_t k) {
    require_units(units);
    std::size_t hits = 0;
    for (const auto& u : units) {
        if (!u.ground_truth) throw DataError("evaluation unit without ground truth");
        hits += rank_within(u.list, *u.ground_truth, k) != 0;
    }
    return static_cast<double>(hits) / static_cast<double>(units.size());
}

double ndcg_at_k(std::span<const EvalUnit> units, std::size_t k) {
    require_units(units);
    double total = 0.0;
    for (const auto& u : units) {
        if (!u.ground_truth) throw DataError("evaluation unit without ground truth");
        if (auto r = rank_within(u.list, *u.ground_truth, k)) total += discount(r);
    }
    return total / static_cast<double>(units.size());
}

double aggregate_item_metric(const std::map<ItemId, double>& per_item, const std::set<ItemId>& eligible) {
    if (eligible.empty()) throw DataError("no eligible items to aggregate");
    double total = 0.0;
    for (auto i : eligible) {
        auto it = per_item.find(i);
        if (it == per_item.end()) throw DataError("eligible item " + std::to_string(i) + " has no value");
        total += it->second;
    }
    return total / static_cast<double>(eligible.size());
}

double stability_at_k(const std::map<UserId, std::vector<ItemId>>& lists_a,
                      const std::map<UserId, std::vector<ItemId>>& lists_b, std::size_t k) {
    if (k < 1) throw ConfigError("stability requires K >= 1");
    if (lists_a.size() != lists_b.size()) throw DataError("stability: user sets differ");
    if (lists_a.empty()) throw DataError("stability: no users");
    double total = 0.0;
    auto ib = lists_b.begin();
    for (auto ia = lists_a.begin(); ia != lists_a.end(); ++ia, ++ib) {
        if (ia->first != ib->first) throw DataError("stability: user sets differ");
        std::vector<ItemId> a(ia->second.begin(), ia->second.begin() + std::min(k, ia->second.size()));
        std::vector<ItemId> b(ib->second.begin(), ib->second.begin() + std::min(k, ib->second.size()));
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        std::vector<ItemId> common;
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
        total += static_cast<double>(common.size()) / static_cast<double>(k);
    }
    return total / static_cast<double>(lists_a.size());
}

double mean(std::span<const double> values) {
    if (values.empty()) throw DataError("mean of empty sample");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw DataError("quantile of empty sample");
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

Interval confidence_interval(std::span<const double> samples, double level, std::size_t resamples,
                             std::uint64_t seed) {
    if (samples.empty()) throw DataError("confidence interval of empty sample");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must lie in (0, 1)");
    const double m = mean(samples);
    if (samples.size() < 2 || resamples == 0) return {m, m};
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
    std::vector<double> means(resamples);
    for (auto& out : means) {
        double s = 0.0;
        for (std::size_t j = 0; j < samples.size(); ++j) s += samples[pick(rng)];
        out = s / static_cast<double>(samples.size());
    }
    const double tail = (1.0 - level) / 2.0;
    // The percentile interval can miss the sample mean for skewed data;
    // widen so that low <= mean <= high always holds.
    return {std::min(quantile(means, tail), m), std::max(quantile(means, 1.0 - tail), m)};
}

void write_curves_csv(std::ostream& os, std::span<const MetricPoint> points) {
    const auto prec = os.precision(17);
    os << "setup,model,metric,K,N,mean,ci_low,ci_high,n_entities\n";
    for (const auto& p : points)
        os << p.setup << ',' << p.model << ',' << p.metric << ',' << p.k << ',' << p.n << ',' << p.mean << ','
           << p.ci_low << ',' << p.ci_high << ',' << p.n_entities << '\n';
    os.precision(prec);
}

std::vector<MetricPoint> read_curves_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw DataError("curves file is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // Long-format plot files carry a leading series column; accept both.
    bool series = false;
    if (line == "series,setup,model,metric,K,N,mean,ci_low,ci_high,n_entities")
        series = true;
    else if (line != "setup,model,metric,K,N,mean,ci_low,ci_high,n_entities")
        throw DataError("curves file has an unexpected header");
    std::vector<MetricPoint> out;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (series && !f.empty()) f.erase(f.begin());
        if (f.size() != 9) throw DataError("curves file: wrong field count at line " + std::to_string(line_no));
        try {
            MetricPoint p;
            p.setup = f[0];
            p.model = f[1];
            p.metric = f[2];
            p.k = std::stoul(f[3]);
            p.n = std::stoul(f[4]);
            p.mean = std::stod(f[5]);
            p.ci_low = std::stod(f[6]);
            p.ci_high = std::stod(f[7]);
            p.n_entities = std::stoul(f[8]);
            out.push_back(std::move(p));
        } catch (const std::logic_error&) {
            throw DataError("curves file: unparseable value at line " + std::to_string(line_no));
        }
    }
    return out;
}

void write_curves_file(const std::string& path, std::span<const MetricPoint> points) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write " + path);
    write_curves_csv(os, points);
}

std::vector<MetricPoint> read_curves_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open curves file " + path);
    return read_curves_csv(is);
}

} // namespace coldwarm
