#include "coldwarm/item_scan.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <tuple>

#include <json.hpp>

#include "coldwarm/parallel.hpp"
#include "coldwarm/random.hpp"

namespace coldwarm {

void validate(const ItemScanConfig& c, std::size_t n_items) {
    if (c.n_grid.empty()) throw ConfigError("item scan: N grid is empty");
    if (c.n_grid.front() < 1) throw ConfigError("item scan: N grid must start at >= 1");
    for (std::size_t i = 1; i < c.n_grid.size(); ++i)
        if (c.n_grid[i] <= c.n_grid[i - 1]) throw ConfigError("item scan: N grid must be strictly ascending");
    if (c.sample_size < 1 && c.probe_items.empty()) throw ConfigError("item scan: S must be >= 1");
    if (c.k_list.empty()) throw ConfigError("item scan: K list is empty");
    for (auto k : c.k_list)
        if (k < 1 || k > n_items) throw ConfigError("item scan: every K must lie in [1, n_items]");
    if (c.repeats < 1) throw ConfigError("item scan: repeats must be >= 1");
    if (!(c.level > 0.0 && c.level < 1.0)) throw ConfigError("item scan: level must lie in (0, 1)");
}

std::vector<ItemId> sample_probe_items(const InteractionLog& train, std::size_t sample_size, std::uint64_t seed,
                                       bool* clamped) {
    std::vector<char> has(train.n_items(), 0);
    for (const auto& e : train.events) has[e.item] = 1;
    std::vector<ItemId> eligible;
    for (ItemId i = 0; i < has.size(); ++i)
        if (has[i]) eligible.push_back(i);
    if (clamped) *clamped = sample_size > eligible.size();
    if (sample_size >= eligible.size()) return eligible;
    Rng rng(seed);
    auto picks = sample_indices(eligible.size(), sample_size, rng);
    std::vector<ItemId> out;
    out.reserve(picks.size());
    for (auto p : picks) out.push_back(eligible[p]);
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

/// Calls on_unit(user, step, list) for every successive-evaluation unit.
template <class F>
std::size_t for_each_unit(const Recommender& model, std::span<const TestUserRecord> eval_users, std::size_t k_max,
                          bool filter_seen, F&& on_unit) {
    std::size_t skipped = 0;
    std::vector<ItemId> history;
    for (const auto& rec : eval_users) {
        if (rec.input.empty() && rec.holdout.empty()) {
            ++skipped;
            continue;
        }
        auto session = model.session();
        history.clear();
        for (const auto& e : rec.input) {
            session->add(e.item);
            history.push_back(e.item);
        }
        for (std::size_t j = 0; j < rec.holdout.size(); ++j) {
            auto top = rank_topk(session->scores(), history, k_max, filter_seen);
            on_unit(rec.user, j, std::move(top.items));
            session->add(rec.holdout[j].item);
            history.push_back(rec.holdout[j].item);
        }
    }
    return skipped;
}

} // namespace

SuccessiveEvaluation successive_evaluate_item(const Recommender& model, ItemId probe_item,
                                              std::span<const TestUserRecord> eval_users,
                                              std::span<const std::size_t> k_list, bool filter_seen, bool keep_units) {
    if (k_list.empty()) throw ConfigError("successive evaluation needs at least one K");
    const std::size_t k_max = *std::max_element(k_list.begin(), k_list.end());
    std::vector<std::size_t> hits(k_list.size(), 0);
    std::vector<double> gain(k_list.size(), 0.0);

    SuccessiveEvaluation out;
    out.skipped_users = for_each_unit(model, eval_users, k_max, filter_seen,
                                      [&](UserId user, std::size_t step, std::vector<ItemId> list) {
                                          ++out.n_units;
                                          const auto r = rank_within(list, probe_item, k_max);
                                          for (std::size_t c = 0; c < k_list.size(); ++c)
                                              if (r && r <= k_list[c]) {
                                                  ++hits[c];
                                                  gain[c] += 1.0 / std::log2(static_cast<double>(r) + 1.0);
                                              }
                                          if (keep_units) out.units.push_back({user, step, std::move(list), {}});
                                      });
    if (out.n_units == 0) throw DataError("successive evaluation produced no units");
    const auto units = static_cast<double>(out.n_units);
    for (std::size_t c = 0; c < k_list.size(); ++c) {
        out.hr_star[k_list[c]] = static_cast<double>(hits[c]) / units;
        out.ndcg_star[k_list[c]] = gain[c] / units;
    }
    return out;
}

std::uint64_t cell_seed(std::uint64_t base, ItemId item, std::size_t n, std::size_t repeat) {
    if (repeat == 0) return derive_seed(base, {item, n});
    return derive_seed(base, {item, n, repeat});
}

// ---------------------------------------------------------------------------
// Run log

namespace {

ItemCellRecord record_from_json(const nlohmann::json& j) {
    ItemCellRecord r;
    r.item = j.at("item").get<ItemId>();
    r.n = j.at("N").get<std::size_t>();
    r.repeat = j.at("repeat").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.k = j.at("K").get<std::size_t>();
    r.hr_star = j.at("hr_star").get<double>();
    r.ndcg_star = j.at("ndcg_star").get<double>();
    r.units = j.at("units").get<std::size_t>();
    r.pool = j.at("pool").get<std::size_t>();
    return r;
}

auto cell_key(const ItemCellRecord& r) { return std::tuple(r.item, r.n, r.repeat, r.k); }

} // namespace

std::vector<ItemCellRecord> read_item_run_log(const std::string& path) {
    std::vector<ItemCellRecord> out;
    std::ifstream is(path);
    if (!is) return out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            // A torn final line from an interrupted run is tolerated.
            if (is.peek() == std::char_traits<char>::eof()) break;
            throw DataError("run log: malformed line " + std::to_string(line_no) + " in " + path);
        }
        if (j.value("type", "") == "cell") out.push_back(record_from_json(j));
    }
    return out;
}

RunLog::RunLog(std::string path) : path_(std::move(path)), records_(read_item_run_log(path_)) {}

void RunLog::append(const std::vector<ItemCellRecord>& cells, const std::string& item_key) {
    std::string block;
    for (const auto& r : cells) {
        nlohmann::ordered_json j = {{"type", "cell"},       {"item", r.item},   {"item_key", item_key},
                                    {"N", r.n},             {"repeat", r.repeat}, {"seed", r.seed},
                                    {"K", r.k},             {"hr_star", r.hr_star}, {"ndcg_star", r.ndcg_star},
                                    {"units", r.units},     {"pool", r.pool}};
        block += j.dump() + "\n";
    }
    std::ofstream os(path_, std::ios::app);
    if (!os) throw DataError("cannot append to run log " + path_);
    os << block;
    os.flush();
}

void RunLog::append_failure(const TaskFailure& f) {
    nlohmann::ordered_json j = {{"type", "failure"}, {"item", f.item}, {"N", f.n}, {"repeat", f.repeat},
                                {"error", f.error}};
    std::ofstream os(path_, std::ios::app);
    os << j.dump() << "\n";
}

// ---------------------------------------------------------------------------
// Aggregation

std::map<std::size_t, std::vector<double>> item_entity_values(const std::vector<ItemCellRecord>& records,
                                                              const std::string& metric, std::size_t k) {
    if (metric != "hr_star" && metric != "ndcg_star")
        throw ConfigError("item metric must be hr_star or ndcg_star, got '" + metric + "'");
    // (N, item) -> (sum, count) over repeats.
    std::map<std::pair<std::size_t, ItemId>, std::pair<double, std::size_t>> acc;
    for (const auto& r : records) {
        if (r.k != k) continue;
        auto& slot = acc[{r.n, r.item}];
        slot.first += metric == "hr_star" ? r.hr_star : r.ndcg_star;
        ++slot.second;
    }
    std::map<std::size_t, std::vector<double>> out;
    for (const auto& [key, v] : acc) out[key.first].push_back(v.first / static_cast<double>(v.second));
    return out;
}

std::vector<MetricPoint> aggregate_item_scan(const std::vector<ItemCellRecord>& records, const ItemScanConfig& config) {
    std::vector<MetricPoint> out;
    const char* metrics[] = {"hr_star", "ndcg_star"};
    std::set<std::size_t> ks(config.k_list.begin(), config.k_list.end());
    for (std::size_t m = 0; m < 2; ++m) {
        for (auto k : ks) {
            for (const auto& [n, values] : item_entity_values(records, metrics[m], k)) {
                MetricPoint p;
                p.setup = "item";
                p.model = config.model_name;
                p.metric = metrics[m];
                p.k = k;
                p.n = n;
                p.mean = mean(values);
                auto ci = confidence_interval(values, config.level, config.bootstrap,
                                              derive_seed(config.seed, {n, k, m, 0xC1}));
                p.ci_low = ci.low;
                p.ci_high = ci.high;
                p.n_entities = values.size();
                out.push_back(std::move(p));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scan

ItemScanResult run_item_scan(const ItemScanConfig& config, const GlobalTimepointSplit& split, const Trainer& trainer,
                             RunLog* log, const TrainContext& context) {
    validate(config, split.train.n_items());
    ItemScanResult result;

    std::vector<std::size_t> freq(split.train.n_items(), 0);
    for (const auto& e : split.train.events) ++freq[e.item];
    if (config.probe_items.empty()) {
        result.probes = sample_probe_items(split.train, config.sample_size, config.seed);
    } else {
        result.probes = config.probe_items;
        std::sort(result.probes.begin(), result.probes.end());
        result.probes.erase(std::unique(result.probes.begin(), result.probes.end()), result.probes.end());
        for (auto i : result.probes)
            if (i >= freq.size() || freq[i] == 0)
                throw DataError("probe item " + std::to_string(i) + " has no training interactions");
    }
    for (auto i : result.probes) result.pool_sizes[i] = freq[i];

    std::set<std::tuple<ItemId, std::size_t, std::size_t>> done;
    std::map<std::tuple<ItemId, std::size_t, std::size_t>, std::size_t> k_count;
    std::vector<ItemCellRecord> cells;
    if (log) {
        for (const auto& r : log->records()) ++k_count[{r.item, r.n, r.repeat}];
        for (const auto& [key, cnt] : k_count)
            if (cnt >= config.k_list.size()) done.insert(key);
        for (const auto& r : log->records())
            if (done.count({r.item, r.n, r.repeat}) && result.pool_sizes.count(r.item)) cells.push_back(r);
    }

    struct Task {
        ItemId item;
        std::size_t n;
        std::size_t repeat;
    };
    std::vector<Task> tasks;
    for (auto i : result.probes)
        for (auto n : config.n_grid) {
            if (n > freq[i]) {
                ++result.skipped_items[n];
                continue;
            }
            for (std::size_t r = 0; r < config.repeats; ++r)
                if (!done.count({i, n, r})) tasks.push_back({i, n, r});
        }

    const std::size_t total = tasks.size() + done.size();
    const auto allowed = static_cast<std::size_t>(config.max_failure_rate * static_cast<double>(total));
    std::mutex mu;
    std::atomic<bool> aborted{false};
    parallel_for(tasks.size(), config.workers, [&](std::size_t t) {
        if (aborted) return;
        const auto& task = tasks[t];
        const auto seed = cell_seed(config.seed, task.item, task.n, task.repeat);
        try {
            const auto iscan = build_item_scan_split(split, task.item);
            const auto train = materialize_train(iscan, task.n, seed);
            const auto x = build_matrix(train, config.matrix_mode);
            const auto model = trainer(x, config.params, context);
            const auto eval =
                successive_evaluate_item(*model, task.item, iscan.eval_users, config.k_list, config.filter_seen);
            std::vector<ItemCellRecord> out;
            for (auto k : config.k_list)
                out.push_back({task.item, task.n, task.repeat, seed, k, eval.hr_star.at(k), eval.ndcg_star.at(k),
                               eval.n_units, freq[task.item]});
            std::lock_guard lock(mu);
            if (log) log->append(out, split.train.items->key(task.item));
            cells.insert(cells.end(), out.begin(), out.end());
        } catch (const std::exception& ex) {
            std::lock_guard lock(mu);
            TaskFailure f{task.item, task.n, task.repeat, ex.what()};
            if (log) log->append_failure(f);
            result.failures.push_back(std::move(f));
            if (result.failures.size() > allowed) aborted = true;
        }
    });
    if (result.failures.size() > allowed)
        throw RunFailure("item scan aborted: " + std::to_string(result.failures.size()) + " of " +
                         std::to_string(total) + " retrains failed (first: " + result.failures.front().error + ")");

    std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) { return cell_key(a) < cell_key(b); });
    cells.erase(std::unique(cells.begin(), cells.end(),
                            [](const auto& a, const auto& b) { return cell_key(a) == cell_key(b); }),
                cells.end());
    std::sort(result.failures.begin(), result.failures.end(), [](const auto& a, const auto& b) {
        return std::tie(a.item, a.n, a.repeat) < std::tie(b.item, b.n, b.repeat);
    });
    result.records = std::move(cells);
    result.curve = aggregate_item_scan(result.records, config);
    return result;
}

double item_scan_stability(const ItemScanConfig& config, const GlobalTimepointSplit& split, const Trainer& trainer,
                           ItemId probe, std::size_t n, std::uint64_t seed_a, std::uint64_t seed_b, std::size_t k,
                           const TrainContext& context) {
    const auto iscan = build_item_scan_split(split, probe);
    auto lists_for = [&](std::uint64_t seed) {
        const auto x = build_matrix(materialize_train(iscan, n, seed), config.matrix_mode);
        const auto model = trainer(x, config.params, context);
        std::map<UserId, std::vector<ItemId>> lists;
        UserId unit = 0;
        for_each_unit(*model, iscan.eval_users, k, config.filter_seen,
                      [&](UserId, std::size_t, std::vector<ItemId> list) { lists[unit++] = std::move(list); });
        return lists;
    };
    return stability_at_k(lists_for(seed_a), lists_for(seed_b), k);
}

} // namespace coldwarm
