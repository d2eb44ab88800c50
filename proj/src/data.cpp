#include "coldwarm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string_view>

namespace coldwarm {

std::uint32_t IdMap::intern(const std::string& key) {
    auto [it, inserted] = index_.try_emplace(key, static_cast<std::uint32_t>(keys_.size()));
    if (inserted) keys_.push_back(key);
    return it->second;
}

std::optional<std::uint32_t> IdMap::find(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line, std::string_view delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + delim.size();
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
        s.remove_suffix(1);
    return s;
}

std::size_t resolve_column(const ColumnRef& ref, const std::vector<std::string_view>& header, const char* role) {
    if (ref.index) return *ref.index;
    if (!ref.name) throw DataError(std::string("schema error: no column given for ") + role);
    if (header.empty())
        throw DataError(std::string("schema error: column '") + *ref.name + "' named but input has no header");
    for (std::size_t c = 0; c < header.size(); ++c)
        if (trim(header[c]) == *ref.name) return c;
    throw DataError(std::string("schema error: missing column '") + *ref.name + "' for " + role);
}

bool parse_timestamp(std::string_view s, Timestamp& out) {
    s = trim(s);
    if (s.empty()) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size() && out >= 0;
}

bool parse_weight(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size() && std::isfinite(out);
}

} // namespace

InteractionLog ingest_log(std::istream& source, const LogSchema& schema, IngestReport* report) {
    if (schema.delimiter.empty()) throw ConfigError("schema error: empty delimiter");
    auto users = std::make_shared<IdMap>();
    auto items = std::make_shared<IdMap>();
    InteractionLog log;
    IngestReport local;

    std::string line;
    std::size_t line_no = 0;
    std::string header_line;
    std::vector<std::string_view> header;
    if (schema.has_header) {
        while (std::getline(source, line)) {
            ++line_no;
            if (!trim(line).empty()) break;
        }
        header_line = line;
        header = split_fields(header_line, schema.delimiter);
    }
    const std::size_t c_user = resolve_column(schema.user, header, "user");
    const std::size_t c_item = resolve_column(schema.item, header, "item");
    const std::size_t c_time = resolve_column(schema.timestamp, header, "timestamp");
    std::optional<std::size_t> c_weight;
    if (schema.weight) c_weight = resolve_column(*schema.weight, header, "weight");
    std::size_t needed = std::max({c_user, c_item, c_time, c_weight.value_or(0)}) + 1;
    if (!header.empty() && header.size() < needed)
        throw DataError("schema error: header has fewer columns than the mapping requires");

    std::uint64_t position = 0;
    while (std::getline(source, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        ++local.rows_read;
        auto fields = split_fields(line, schema.delimiter);
        Event ev;
        bool ok = fields.size() >= needed;
        std::string_view ukey, ikey;
        if (ok) {
            ukey = trim(fields[c_user]);
            ikey = trim(fields[c_item]);
            ok = !ukey.empty() && !ikey.empty() && parse_timestamp(fields[c_time], ev.timestamp);
        }
        if (ok && c_weight) ok = parse_weight(fields[*c_weight], ev.weight);
        if (!ok) {
            if (schema.on_malformed == MalformedPolicy::abort)
                throw DataError("malformed row at line " + std::to_string(line_no));
            ++local.skipped;
            if (local.skipped_lines.size() < 100) local.skipped_lines.push_back(line_no);
            continue;
        }
        ev.user = users->intern(std::string(ukey));
        ev.item = items->intern(std::string(ikey));
        ev.position = position++;
        log.events.push_back(ev);
    }
    log.users = std::move(users);
    log.items = std::move(items);
    if (report) *report = std::move(local);
    return log;
}

InteractionLog ingest_log_file(const std::string& path, const LogSchema& schema, IngestReport* report) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path);
    return ingest_log(in, schema, report);
}

InteractionLog make_log(const std::vector<RawInteraction>& rows) {
    auto users = std::make_shared<IdMap>();
    auto items = std::make_shared<IdMap>();
    InteractionLog log;
    log.events.reserve(rows.size());
    std::uint64_t pos = 0;
    for (const auto& r : rows) {
        if (r.timestamp < 0) throw DataError("negative timestamp");
        if (!std::isfinite(r.weight)) throw DataError("non-finite weight");
        log.events.push_back({users->intern(r.user_ref), items->intern(r.item_ref), r.timestamp, r.weight, pos++});
    }
    log.users = std::move(users);
    log.items = std::move(items);
    return log;
}

DatasetStats compute_stats(const InteractionLog& log) {
    if (log.events.empty()) throw DataError("cannot compute statistics of an empty log");
    std::vector<char> seen_u(log.n_users(), 0), seen_i(log.n_items(), 0);
    DatasetStats s;
    for (const auto& e : log.events) {
        if (!seen_u[e.user]) {
            seen_u[e.user] = 1;
            ++s.n_users;
        }
        if (!seen_i[e.item]) {
            seen_i[e.item] = 1;
            ++s.n_items;
        }
    }
    s.n_interactions = log.events.size();
    const double nu = static_cast<double>(s.n_users);
    const double ni = static_cast<double>(s.n_items);
    const double n = static_cast<double>(s.n_interactions);
    s.density = n / (nu * ni);
    s.avg_user_interactions = n / nu;
    s.avg_item_interactions = n / ni;
    return s;
}

std::string stats_csv(const DatasetStats& s) {
    std::ostringstream os;
    os.precision(17);
    os << "users,items,interactions,density,avg_user_interactions,avg_item_interactions\n";
    os << s.n_users << ',' << s.n_items << ',' << s.n_interactions << ',' << s.density << ','
       << s.avg_user_interactions << ',' << s.avg_item_interactions << '\n';
    return os.str();
}

InteractionLog pcore_filter(const InteractionLog& log, std::size_t p) {
    if (p == 0) throw ConfigError("p-core filtering requires p >= 1");
    const std::size_t nu = log.n_users(), ni = log.n_items(), ne = log.events.size();

    std::vector<std::vector<std::size_t>> user_events(nu), item_events(ni);
    for (std::size_t e = 0; e < ne; ++e) {
        user_events[log.events[e].user].push_back(e);
        item_events[log.events[e].item].push_back(e);
    }
    // Multiplicity of each (user, item) pair so item degree counts distinct users.
    std::unordered_map<std::uint64_t, std::uint32_t> pair_count;
    auto pair_key = [](UserId u, ItemId i) { return (static_cast<std::uint64_t>(u) << 32) | i; };
    std::vector<std::size_t> user_deg(nu, 0), item_deg(ni, 0);
    for (const auto& ev : log.events) {
        ++user_deg[ev.user];
        if (pair_count[pair_key(ev.user, ev.item)]++ == 0) ++item_deg[ev.item];
    }

    std::vector<char> alive_event(ne, 1), alive_user(nu, 1), alive_item(ni, 1);
    std::deque<std::pair<bool, std::uint32_t>> queue; // (is_user, id)
    for (std::uint32_t u = 0; u < nu; ++u)
        if (user_deg[u] < p) {
            alive_user[u] = 0;
            queue.emplace_back(true, u);
        }
    for (std::uint32_t i = 0; i < ni; ++i)
        if (item_deg[i] < p) {
            alive_item[i] = 0;
            queue.emplace_back(false, i);
        }

    while (!queue.empty()) {
        auto [is_user, id] = queue.front();
        queue.pop_front();
        const auto& incident = is_user ? user_events[id] : item_events[id];
        for (std::size_t e : incident) {
            if (!alive_event[e]) continue;
            alive_event[e] = 0;
            const Event& ev = log.events[e];
            if (is_user) {
                if (--pair_count[pair_key(ev.user, ev.item)] == 0 && --item_deg[ev.item] < p && alive_item[ev.item]) {
                    alive_item[ev.item] = 0;
                    queue.emplace_back(false, ev.item);
                }
            } else {
                --pair_count[pair_key(ev.user, ev.item)];
                if (--user_deg[ev.user] < p && alive_user[ev.user]) {
                    alive_user[ev.user] = 0;
                    queue.emplace_back(true, ev.user);
                }
            }
        }
    }

    auto users = std::make_shared<IdMap>();
    auto items = std::make_shared<IdMap>();
    InteractionLog out;
    for (std::size_t e = 0; e < ne; ++e) {
        if (!alive_event[e]) continue;
        Event ev = log.events[e];
        ev.user = users->intern(log.users->key(ev.user));
        ev.item = items->intern(log.items->key(ev.item));
        out.events.push_back(ev);
    }
    if (out.events.empty()) throw DataError("log is empty after " + std::to_string(p) + "-core filtering");
    out.users = std::move(users);
    out.items = std::move(items);
    return out;
}

SparseInteractionMatrix build_matrix(const InteractionLog& log, MatrixMode mode) {
    std::vector<std::size_t> order(log.events.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const Event& x = log.events[a];
        const Event& y = log.events[b];
        if (x.user != y.user) return x.user < y.user;
        if (x.item != y.item) return x.item < y.item;
        return chronological(x, y);
    });

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        const Event& ev = log.events[order[k]];
        const bool last_of_pair = k + 1 == order.size() || log.events[order[k + 1]].user != ev.user ||
                                  log.events[order[k + 1]].item != ev.item;
        if (!last_of_pair) continue;
        const double v = mode == MatrixMode::binary ? 1.0 : ev.weight;
        if (!std::isfinite(v)) throw DataError("non-finite interaction weight");
        triplets.emplace_back(static_cast<int>(ev.user), static_cast<int>(ev.item), v);
    }

    SparseInteractionMatrix m;
    m.mode = mode;
    m.by_user.resize(static_cast<Eigen::Index>(log.n_users()), static_cast<Eigen::Index>(log.n_items()));
    m.by_user.setFromTriplets(triplets.begin(), triplets.end());
    m.by_user.makeCompressed();
    m.by_item = m.by_user;
    m.by_item.makeCompressed();
    return m;
}

} // namespace coldwarm
