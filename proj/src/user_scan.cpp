#include "coldwarm/user_scan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <tuple>

#include <json.hpp>

#include "coldwarm/parallel.hpp"
#include "coldwarm/random.hpp"

namespace coldwarm {

void validate(const UserScanConfig& c, std::size_t n_items) {
    if (c.n_grid.empty()) throw ConfigError("user scan: N grid is empty");
    if (c.n_grid.front() < 1) throw ConfigError("user scan: N grid must start at >= 1");
    for (std::size_t i = 1; i < c.n_grid.size(); ++i)
        if (c.n_grid[i] <= c.n_grid[i - 1]) throw ConfigError("user scan: N grid must be strictly ascending");
    if (c.k_list.empty()) throw ConfigError("user scan: K list is empty");
    for (auto k : c.k_list)
        if (k < 1 || k > n_items) throw ConfigError("user scan: every K must lie in [1, n_items]");
    if (c.repeats < 1) throw ConfigError("user scan: repeats must be >= 1");
    if (!(c.level > 0.0 && c.level < 1.0)) throw ConfigError("user scan: level must lie in (0, 1)");
}

std::vector<Event> truncate_history(std::span<const Event> input, std::size_t n, std::uint64_t seed) {
    if (n < 1 || n > input.size())
        throw DataError("cannot truncate a history of " + std::to_string(input.size()) + " events to " +
                        std::to_string(n));
    Rng rng(seed);
    auto picks = sample_indices(input.size(), n, rng);
    std::vector<Event> out;
    out.reserve(n);
    for (auto p : picks) out.push_back(input[p]);
    std::sort(out.begin(), out.end(), chronological);
    return out;
}

UserScanResult run_user_scan(const Recommender& model, const UserScanSplit& uscan, const UserScanConfig& config) {
    validate(config, model.n_items());
    check_user_scan_invariants(uscan);
    const std::size_t k_max = *std::max_element(config.k_list.begin(), config.k_list.end());

    struct Task {
        std::size_t record;
        std::size_t n;
        std::size_t repeat;
    };
    UserScanResult result;
    std::vector<Task> tasks;
    for (auto n : config.n_grid) {
        std::size_t eligible = 0;
        for (std::size_t r = 0; r < uscan.test_records.size(); ++r) {
            if (uscan.test_records[r].input.size() < n) continue;
            ++eligible;
            for (std::size_t rep = 0; rep < config.repeats; ++rep) tasks.push_back({r, n, rep});
        }
        result.eligible[n] = eligible;
        result.excluded[n] = uscan.test_records.size() - eligible;
        if (eligible == 0) result.omitted_n.push_back(n);
    }

    std::vector<std::vector<UserCellRecord>> out(tasks.size());
    parallel_for(tasks.size(), config.workers, [&](std::size_t t) {
        const auto& task = tasks[t];
        const auto& rec = uscan.test_records[task.record];
        const auto seed = task.repeat == 0 ? derive_seed(config.seed, {rec.user, task.n})
                                           : derive_seed(config.seed, {rec.user, task.n, task.repeat});
        const auto history = items_of(truncate_history(rec.input, task.n, seed));
        const auto top = recommend_topk(model, history, k_max, config.filter_seen);
        const ItemId truth = rec.holdout.front().item;
        const auto rank = rank_within(top.items, truth, k_max);
        for (auto k : config.k_list) {
            const bool hit = rank && rank <= k;
            out[t].push_back({rec.user, task.n, task.repeat, seed, k, hit ? 1.0 : 0.0,
                              hit ? 1.0 / std::log2(static_cast<double>(rank) + 1.0) : 0.0});
        }
    });
    for (auto& v : out) result.records.insert(result.records.end(), v.begin(), v.end());
    std::sort(result.records.begin(), result.records.end(), [](const auto& a, const auto& b) {
        return std::tie(a.user, a.n, a.repeat, a.k) < std::tie(b.user, b.n, b.repeat, b.k);
    });

    const char* metrics[] = {"hr", "ndcg"};
    for (std::size_t m = 0; m < 2; ++m)
        for (auto k : config.k_list)
            for (const auto& [n, values] : user_entity_values(result.records, metrics[m], k)) {
                MetricPoint p;
                p.setup = "user";
                p.model = config.model_name;
                p.metric = metrics[m];
                p.k = k;
                p.n = n;
                p.mean = mean(values);
                auto ci = confidence_interval(values, config.level, config.bootstrap,
                                              derive_seed(config.seed, {n, k, m, 0xC2}));
                p.ci_low = ci.low;
                p.ci_high = ci.high;
                p.n_entities = values.size();
                result.curve.push_back(std::move(p));
            }
    return result;
}

std::map<std::size_t, std::vector<double>> user_entity_values(const std::vector<UserCellRecord>& records,
                                                              const std::string& metric, std::size_t k) {
    if (metric != "hr" && metric != "ndcg") throw ConfigError("user metric must be hr or ndcg, got '" + metric + "'");
    std::map<std::pair<std::size_t, UserId>, std::pair<double, std::size_t>> acc;
    for (const auto& r : records) {
        if (r.k != k) continue;
        auto& slot = acc[{r.n, r.user}];
        slot.first += metric == "hr" ? r.hr : r.ndcg;
        ++slot.second;
    }
    std::map<std::size_t, std::vector<double>> out;
    for (const auto& [key, v] : acc) out[key.first].push_back(v.first / static_cast<double>(v.second));
    return out;
}

void write_user_records(const std::string& path, const std::vector<UserCellRecord>& records) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write " + path);
    for (const auto& r : records) {
        nlohmann::ordered_json j = {{"type", "user_cell"}, {"user", r.user}, {"N", r.n}, {"repeat", r.repeat},
                                    {"seed", r.seed},      {"K", r.k},       {"hr", r.hr}, {"ndcg", r.ndcg}};
        os << j.dump() << '\n';
    }
}

std::vector<UserCellRecord> read_user_records(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open " + path);
    std::vector<UserCellRecord> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            out.push_back({j.at("user").get<UserId>(), j.at("N").get<std::size_t>(), j.at("repeat").get<std::size_t>(),
                           j.at("seed").get<std::uint64_t>(), j.at("K").get<std::size_t>(), j.at("hr").get<double>(),
                           j.at("ndcg").get<double>()});
        } catch (const nlohmann::json::exception& ex) {
            throw DataError(std::string("malformed user record: ") + ex.what());
        }
    }
    return out;
}

} // namespace coldwarm
