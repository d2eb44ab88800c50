#include "coldwarm/split.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "coldwarm/random.hpp"

namespace coldwarm {

namespace {

std::vector<std::vector<Event>> events_by_user(const InteractionLog& log) {
    std::vector<std::vector<Event>> per_user(log.n_users());
    for (const auto& e : log.events) per_user[e.user].push_back(e);
    for (auto& v : per_user) std::sort(v.begin(), v.end(), chronological);
    return per_user;
}

std::vector<Event> without_item(const std::vector<Event>& events, ItemId item) {
    std::vector<Event> out;
    out.reserve(events.size());
    for (const auto& e : events)
        if (e.item != item) out.push_back(e);
    return out;
}

} // namespace

GlobalTimepointSplit split_global_timepoint(const InteractionLog& log, double q, double val_fraction,
                                            std::uint64_t seed) {
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("quantile q must lie in (0, 1)");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("val_fraction must lie in (0, 1)");
    const std::size_t n = log.events.size();
    std::vector<Timestamp> ts;
    ts.reserve(n);
    for (const auto& e : log.events) ts.push_back(e.timestamp);
    std::sort(ts.begin(), ts.end());
    if (n == 0 || ts.front() == ts.back()) throw DataError("global timepoint split needs at least 2 distinct timestamps");

    // Guard against q*n landing a hair above an integer through rounding.
    const auto qn = static_cast<long double>(q) * static_cast<long double>(n);
    auto rank = static_cast<std::size_t>(std::ceil(qn - 1e-9L));
    rank = std::clamp<std::size_t>(rank, 1, n) - 1;

    GlobalTimepointSplit split;
    split.gt = ts[rank];
    split.q = q;
    split.val_fraction = val_fraction;
    split.seed = seed;
    if (split.gt == ts.back()) throw DataError("empty test set: global timepoint equals the latest timestamp");

    auto per_user = events_by_user(log);
    std::vector<UserId> non_test;
    for (UserId u = 0; u < per_user.size(); ++u) {
        const auto& hist = per_user[u];
        if (hist.empty()) continue;
        if (hist.back().timestamp > split.gt) {
            TestUserRecord rec;
            rec.user = u;
            for (const auto& e : hist) (e.timestamp > split.gt ? rec.holdout : rec.input).push_back(e);
            split.counters.post_gt_events += rec.holdout.size();
            if (rec.cold_start()) ++split.counters.cold_start_test_users;
            split.test.push_back(std::move(rec));
        } else {
            non_test.push_back(u);
        }
    }

    Rng rng(seed);
    auto perm = sample_indices(non_test.size(), non_test.size(), rng);
    const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(non_test.size())));
    std::vector<char> is_val(per_user.size(), 0);
    for (std::size_t j = 0; j < n_val; ++j) is_val[non_test[perm[j]]] = 1;

    std::vector<Event> train_events;
    for (UserId u : non_test) {
        if (is_val[u]) {
            const auto& hist = per_user[u];
            if (hist.size() < 2) {
                ++split.counters.validation_dropped;
                continue;
            }
            ValidationPair vp;
            vp.user = u;
            vp.input.assign(hist.begin(), hist.end() - 1);
            vp.target = hist.back();
            split.validation.push_back(std::move(vp));
        } else {
            ++split.counters.train_users;
        }
    }
    for (const auto& e : log.events)
        if (!is_val[e.user] && e.timestamp <= split.gt && per_user[e.user].back().timestamp <= split.gt)
            train_events.push_back(e);

    split.train = log.with_events(std::move(train_events));
    split.counters.n_events = n;
    split.counters.validation_users = split.validation.size();
    split.counters.test_users = split.test.size();
    return split;
}

ItemScanSplit build_item_scan_split(const GlobalTimepointSplit& split, ItemId probe_item) {
    ItemScanSplit out;
    out.probe_item = probe_item;
    std::vector<Event> base;
    base.reserve(split.train.events.size());
    for (const auto& e : split.train.events) (e.item == probe_item ? out.probe_pool : base).push_back(e);
    if (out.probe_pool.empty())
        throw DataError("probe item " + std::to_string(probe_item) + " has no training interactions");
    out.base_train = split.train.with_events(std::move(base));
    out.eval_users.reserve(split.test.size());
    for (const auto& rec : split.test)
        out.eval_users.push_back({rec.user, without_item(rec.input, probe_item), without_item(rec.holdout, probe_item)});
    for (const auto& vp : split.validation) {
        if (vp.target.item == probe_item) continue;
        out.validation.push_back({vp.user, without_item(vp.input, probe_item), vp.target});
    }
    return out;
}

InteractionLog materialize_train(const ItemScanSplit& split, std::size_t n, std::uint64_t seed) {
    if (n < 1 || n > split.probe_pool.size())
        throw DataError("requested " + std::to_string(n) + " probe events from a pool of " +
                        std::to_string(split.probe_pool.size()));
    Rng rng(seed);
    auto picks = sample_indices(split.probe_pool.size(), n, rng);
    std::sort(picks.begin(), picks.end());
    std::vector<Event> chosen;
    chosen.reserve(n);
    for (auto k : picks) chosen.push_back(split.probe_pool[k]);

    std::vector<Event> merged;
    merged.reserve(split.base_train.events.size() + n);
    std::merge(split.base_train.events.begin(), split.base_train.events.end(), chosen.begin(), chosen.end(),
               std::back_inserter(merged), [](const Event& a, const Event& b) { return a.position < b.position; });
    return split.base_train.with_events(std::move(merged));
}

UserScanSplit build_user_scan_split(const GlobalTimepointSplit& split) {
    UserScanSplit out;
    out.test_records.reserve(split.test.size());
    for (const auto& rec : split.test) {
        TestUserRecord r{rec.user, rec.input, {}};
        if (!rec.holdout.empty()) {
            r.holdout.push_back(rec.holdout.front());
            out.discarded_events += rec.holdout.size() - 1;
        }
        if (r.cold_start()) ++out.cold_start_users;
        out.test_records.push_back(std::move(r));
    }
    return out;
}

void check_split_invariants(const GlobalTimepointSplit& split) {
    auto fail = [](const std::string& what) { throw DataError("split invariant violated: " + what); };
    std::vector<char> test_user(split.train.n_users(), 0);
    for (const auto& rec : split.test) {
        if (rec.holdout.empty()) fail("test user without post-timepoint events");
        test_user[rec.user] = 1;
        if (!std::is_sorted(rec.input.begin(), rec.input.end(), chronological) ||
            !std::is_sorted(rec.holdout.begin(), rec.holdout.end(), chronological))
            fail("test record not chronological");
        for (const auto& e : rec.input)
            if (e.timestamp > split.gt) fail("test input after timepoint");
        for (const auto& e : rec.holdout)
            if (e.timestamp <= split.gt) fail("holdout at or before timepoint");
    }
    std::vector<char> val_user(split.train.n_users(), 0);
    for (const auto& vp : split.validation) val_user[vp.user] = 1;
    for (const auto& e : split.train.events) {
        if (e.timestamp > split.gt) fail("train event after timepoint");
        if (test_user[e.user]) fail("test user present in train");
        if (val_user[e.user]) fail("validation user present in train");
    }
    for (const auto& vp : split.validation) {
        if (test_user[vp.user]) fail("test user present in validation");
        if (vp.target.timestamp > split.gt) fail("validation target after timepoint");
        for (const auto& e : vp.input) {
            if (e.timestamp > split.gt) fail("validation input after timepoint");
            if (chronological(vp.target, e)) fail("validation input after its target");
        }
    }
}

void check_item_scan_invariants(const GlobalTimepointSplit& split, const ItemScanSplit& iscan) {
    auto fail = [](const std::string& what) { throw DataError("item-scan invariant violated: " + what); };
    std::vector<char> test_user(split.train.n_users(), 0);
    for (const auto& rec : split.test) test_user[rec.user] = 1;
    for (const auto& e : iscan.base_train.events) {
        if (e.item == iscan.probe_item) fail("probe item in base train");
        if (test_user[e.user]) fail("test user in base train");
    }
    std::size_t freq = 0;
    for (const auto& e : split.train.events) freq += e.item == iscan.probe_item;
    if (freq != iscan.probe_pool.size()) fail("probe pool size differs from training frequency");
    for (const auto& e : iscan.probe_pool)
        if (e.item != iscan.probe_item || e.timestamp > split.gt) fail("foreign event in probe pool");
    for (const auto& rec : iscan.eval_users) {
        for (const auto& e : rec.input)
            if (e.item == iscan.probe_item) fail("probe item in evaluation input");
        for (const auto& e : rec.holdout)
            if (e.item == iscan.probe_item) fail("probe item in evaluation holdout");
    }
    for (const auto& vp : iscan.validation) {
        if (vp.target.item == iscan.probe_item) fail("probe item as validation target");
        for (const auto& e : vp.input)
            if (e.item == iscan.probe_item) fail("probe item in validation input");
    }
}

void check_user_scan_invariants(const UserScanSplit& uscan) {
    for (const auto& rec : uscan.test_records)
        if (rec.holdout.size() != 1) throw DataError("user-scan invariant violated: holdout length != 1");
}

// ---------------------------------------------------------------------------
// Export / import

namespace {

void write_event(std::ostream& os, const Event& e) {
    os << e.item << ',' << e.timestamp << ',' << e.weight << ',' << e.position << '\n';
}

Event parse_event_tail(std::istringstream& row, UserId user) {
    Event e;
    e.user = user;
    char c = 0;
    row >> e.item >> c >> e.timestamp >> c >> e.weight >> c >> e.position;
    if (!row) throw DataError("malformed split file row");
    return e;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);
    return lines;
}

void write_map(const std::filesystem::path& path, const IdMap& map) {
    std::ofstream os(path);
    os << "id,key\n";
    for (std::size_t i = 0; i < map.size(); ++i) os << i << ',' << map.key(static_cast<std::uint32_t>(i)) << '\n';
}

std::shared_ptr<IdMap> read_map(const std::filesystem::path& path) {
    auto map = std::make_shared<IdMap>();
    for (const auto& line : read_lines(path)) {
        auto comma = line.find(',');
        if (comma == std::string::npos) throw DataError("malformed id map row in " + path.string());
        auto id = std::stoul(line.substr(0, comma));
        if (map->intern(line.substr(comma + 1)) != id) throw DataError("non-dense id map in " + path.string());
    }
    return map;
}

} // namespace

void export_split(const GlobalTimepointSplit& split, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path root(dir);
    auto open = [&](const char* name) {
        std::ofstream os(root / name);
        if (!os) throw DataError("cannot write " + (root / name).string());
        os.precision(17);
        return os;
    };
    {
        auto os = open("train.csv");
        os << "user,item,timestamp,weight,position\n";
        for (const auto& e : split.train.events) {
            os << e.user << ',';
            write_event(os, e);
        }
    }
    {
        auto os = open("validation.csv");
        os << "user,role,item,timestamp,weight,position\n";
        for (const auto& vp : split.validation) {
            for (const auto& e : vp.input) {
                os << vp.user << ",input,";
                write_event(os, e);
            }
            os << vp.user << ",target,";
            write_event(os, vp.target);
        }
    }
    {
        auto os = open("test.csv");
        os << "user,role,item,timestamp,weight,position\n";
        for (const auto& rec : split.test) {
            for (const auto& e : rec.input) {
                os << rec.user << ",input,";
                write_event(os, e);
            }
            for (const auto& e : rec.holdout) {
                os << rec.user << ",holdout,";
                write_event(os, e);
            }
        }
    }
    write_map(root / "users.csv", *split.train.users);
    write_map(root / "items.csv", *split.train.items);

    const auto& c = split.counters;
    nlohmann::ordered_json manifest = {
        {"format", "coldwarm-split"},
        {"version", 1},
        {"gt", split.gt},
        {"q", split.q},
        {"val_fraction", split.val_fraction},
        {"seed", split.seed},
        {"n_users", split.train.n_users()},
        {"n_items", split.train.n_items()},
        {"counters",
         {{"n_events", c.n_events},
          {"post_gt_events", c.post_gt_events},
          {"train_users", c.train_users},
          {"validation_users", c.validation_users},
          {"validation_dropped", c.validation_dropped},
          {"test_users", c.test_users},
          {"cold_start_test_users", c.cold_start_test_users}}}};
    auto os = open("manifest.json");
    os << manifest.dump(2) << '\n';
}

GlobalTimepointSplit import_split(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    std::ifstream min(root / "manifest.json");
    if (!min) throw DataError("no manifest.json in " + dir);
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(min);
    } catch (const nlohmann::json::exception& ex) {
        throw DataError(std::string("malformed split manifest: ") + ex.what());
    }
    if (manifest.value("format", "") != "coldwarm-split" || manifest.value("version", 0) != 1)
        throw DataError("unsupported split manifest format");

    GlobalTimepointSplit split;
    split.gt = manifest.at("gt").get<Timestamp>();
    split.q = manifest.at("q").get<double>();
    split.val_fraction = manifest.at("val_fraction").get<double>();
    split.seed = manifest.at("seed").get<std::uint64_t>();
    const auto& c = manifest.at("counters");
    split.counters = {c.at("n_events").get<std::size_t>(),      c.at("post_gt_events").get<std::size_t>(),
                      c.at("train_users").get<std::size_t>(),   c.at("validation_users").get<std::size_t>(),
                      c.at("validation_dropped").get<std::size_t>(), c.at("test_users").get<std::size_t>(),
                      c.at("cold_start_test_users").get<std::size_t>()};
    split.train.users = read_map(root / "users.csv");
    split.train.items = read_map(root / "items.csv");

    auto split_head = [](const std::string& line, std::string* role) {
        std::istringstream row(line);
        UserId u = 0;
        char comma = 0;
        row >> u >> comma;
        if (role) {
            std::getline(row, *role, ',');
        }
        return std::pair{u, std::move(row)};
    };
    for (const auto& line : read_lines(root / "train.csv")) {
        auto [u, row] = split_head(line, nullptr);
        split.train.events.push_back(parse_event_tail(row, u));
    }
    std::string role;
    for (const auto& line : read_lines(root / "validation.csv")) {
        auto [u, row] = split_head(line, &role);
        if (split.validation.empty() || split.validation.back().user != u ||
            split.validation.back().target.position != ~std::uint64_t{0}) {
            ValidationPair vp;
            vp.user = u;
            vp.target.position = ~std::uint64_t{0};
            split.validation.push_back(std::move(vp));
        }
        auto ev = parse_event_tail(row, u);
        if (role == "input")
            split.validation.back().input.push_back(ev);
        else if (role == "target")
            split.validation.back().target = ev;
        else
            throw DataError("unknown validation role '" + role + "'");
    }
    for (const auto& line : read_lines(root / "test.csv")) {
        auto [u, row] = split_head(line, &role);
        if (split.test.empty() || split.test.back().user != u) split.test.push_back({u, {}, {}});
        auto ev = parse_event_tail(row, u);
        if (role == "input")
            split.test.back().input.push_back(ev);
        else if (role == "holdout")
            split.test.back().holdout.push_back(ev);
        else
            throw DataError("unknown test role '" + role + "'");
    }
    for (const auto& vp : split.validation)
        if (vp.target.position == ~std::uint64_t{0}) throw DataError("validation pair without target");
    return split;
}

} // namespace coldwarm
