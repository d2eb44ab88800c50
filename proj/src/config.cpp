#include "coldwarm/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace coldwarm {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

/// Reads fields out of one JSON object and rejects keys nobody asked for.
class Section {
  public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError("config: '" + path_ + "' must be an object");
    }
    /// Call once all expected keys were read.
    void finish() const {
        for (const auto& [key, _] : j_.items())
            if (!seen_.count(key)) throw ConfigError("config: unknown key '" + where(key) + "'");
    }

    template <class T> void read(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError("config: wrong type for '" + where(key) + "'");
        }
    }
    template <class T> void read_optional(const char* key, std::optional<T>& out) {
        seen_.insert(key);
        if (!j_.contains(key) || j_.at(key).is_null()) return;
        T v{};
        read(key, v);
        out = std::move(v);
    }
    const json* sub(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }
    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

ColumnRef column_from(const json& j, const std::string& where) {
    if (j.is_string()) return {j.get<std::string>(), std::nullopt};
    if (j.is_number_unsigned()) return {std::nullopt, j.get<std::size_t>()};
    throw ConfigError("config: column '" + where + "' must be a header name or a 0-based index");
}

ordered_json column_to(const ColumnRef& c) {
    if (c.index) return *c.index;
    return c.name.value_or("");
}

HyperParams params_from(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError("config: '" + where + "' must be an object of numbers");
    HyperParams p;
    for (const auto& [k, v] : j.items()) {
        if (k != "lambda" && k != "rank" && k != "k") throw ConfigError("config: unknown hyperparameter '" + k + "'");
        if (!v.is_number()) throw ConfigError("config: hyperparameter '" + k + "' must be a number");
        p[k] = v.get<double>();
    }
    return p;
}

ordered_json params_to(const HyperParams& p) {
    ordered_json j = ordered_json::object();
    for (const auto& [k, v] : p) j[k] = v;
    return j;
}

} // namespace

RunConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("config: invalid JSON: ") + ex.what());
    }
    RunConfig c;
    {
        Section top(root, "");
        top.read("filter_seen", c.filter_seen);
        top.read("workers", c.workers);
        top.read("output_dir", c.output_dir);

        if (const auto* d = top.sub("dataset")) {
            Section s(*d, "dataset");
            s.read("path", c.dataset.path);
            s.read("name", c.dataset.name);
            s.read("delimiter", c.dataset.schema.delimiter);
            s.read("header", c.dataset.schema.has_header);
            s.read_optional("pcore", c.dataset.pcore);
            std::string policy = "skip";
            s.read("on_malformed", policy);
            if (policy == "skip")
                c.dataset.schema.on_malformed = MalformedPolicy::skip;
            else if (policy == "abort")
                c.dataset.schema.on_malformed = MalformedPolicy::abort;
            else
                throw ConfigError("config: dataset.on_malformed must be 'skip' or 'abort'");
            if (const auto* cols = s.sub("columns")) {
                Section cs(*cols, "dataset.columns");
                if (const auto* v = cs.sub("user")) c.dataset.schema.user = column_from(*v, "user");
                if (const auto* v = cs.sub("item")) c.dataset.schema.item = column_from(*v, "item");
                if (const auto* v = cs.sub("timestamp")) c.dataset.schema.timestamp = column_from(*v, "timestamp");
                if (const auto* v = cs.sub("weight"); v && !v->is_null())
                    c.dataset.schema.weight = column_from(*v, "weight");
                cs.finish();
            }
            s.finish();
        }
        if (const auto* d = top.sub("split")) {
            Section s(*d, "split");
            s.read("q", c.split.q);
            s.read("val_fraction", c.split.val_fraction);
            s.read("seed", c.split.seed);
            s.finish();
        }
        if (const auto* d = top.sub("model")) {
            Section s(*d, "model");
            std::string kind = to_string(c.model.kind);
            s.read("kind", kind);
            c.model.kind = parse_model_kind(kind);
            std::string mode = "binary";
            s.read("matrix_mode", mode);
            if (mode == "binary")
                c.model.matrix_mode = MatrixMode::binary;
            else if (mode == "weighted")
                c.model.matrix_mode = MatrixMode::weighted;
            else
                throw ConfigError("config: model.matrix_mode must be 'binary' or 'weighted'");
            if (const auto* g = s.sub("grid"); g && !g->is_null()) {
                if (!g->is_array()) throw ConfigError("config: model.grid must be an array");
                std::vector<HyperParams> grid;
                for (const auto& p : *g) grid.push_back(params_from(p, "model.grid[]"));
                c.model.grid = std::move(grid);
            }
            if (const auto* p = s.sub("params"); p && !p->is_null()) c.model.params = params_from(*p, "model.params");
            s.read("tuning_budget", c.model.tuning_budget);
            s.read("tuning_seed", c.model.tuning_seed);
            s.read("svd_tolerance", c.model.svd_tolerance);
            s.read("svd_max_iterations", c.model.svd_max_iterations);
            s.finish();
        }
        if (const auto* d = top.sub("item_scan")) {
            Section s(*d, "item_scan");
            s.read("n_grid", c.item_scan.n_grid);
            s.read("S", c.item_scan.sample_size);
            s.read("k_list", c.item_scan.k_list);
            s.read("seed", c.item_scan.seed);
            s.read("repeats", c.item_scan.repeats);
            s.read("probe_items", c.item_scan.probe_items);
            s.read("max_failure_rate", c.item_scan.max_failure_rate);
            s.finish();
        }
        if (const auto* d = top.sub("user_scan")) {
            Section s(*d, "user_scan");
            s.read("n_grid", c.user_scan.n_grid);
            s.read("k_list", c.user_scan.k_list);
            s.read("seed", c.user_scan.seed);
            s.read("repeats", c.user_scan.repeats);
            s.finish();
        }
        if (const auto* d = top.sub("threshold")) {
            Section s(*d, "threshold");
            s.read("window", c.threshold.window);
            s.read("bootstrap", c.threshold.bootstrap);
            s.read("level", c.threshold.level);
            s.read("seed", c.threshold.seed);
            s.read("flatness_tolerance", c.threshold.flatness_tolerance);
            s.read("contrast_multiplier", c.threshold.contrast_multiplier);
            s.read("item_metric", c.threshold.item_metric);
            s.read("item_k", c.threshold.item_k);
            s.read("user_metric", c.threshold.user_metric);
            s.read("user_k", c.threshold.user_k);
            s.finish();
        }
        if (const auto* d = top.sub("metrics")) {
            Section s(*d, "metrics");
            s.read("bootstrap", c.metrics.bootstrap);
            s.read("level", c.metrics.level);
            s.finish();
        }
        top.finish();
    }
    validate(c);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
    ordered_json j;
    const auto& sc = c.dataset.schema;
    j["dataset"] = {{"path", c.dataset.path},
                    {"name", c.dataset.name},
                    {"delimiter", sc.delimiter},
                    {"header", sc.has_header},
                    {"columns",
                     {{"user", column_to(sc.user)},
                      {"item", column_to(sc.item)},
                      {"timestamp", column_to(sc.timestamp)},
                      {"weight", sc.weight ? column_to(*sc.weight) : ordered_json(nullptr)}}},
                    {"on_malformed", sc.on_malformed == MalformedPolicy::skip ? "skip" : "abort"},
                    {"pcore", c.dataset.pcore ? ordered_json(*c.dataset.pcore) : ordered_json(nullptr)}};
    j["split"] = {{"q", c.split.q}, {"val_fraction", c.split.val_fraction}, {"seed", c.split.seed}};
    ordered_json grid = nullptr;
    if (c.model.grid) {
        grid = ordered_json::array();
        for (const auto& p : *c.model.grid) grid.push_back(params_to(p));
    }
    j["model"] = {{"kind", to_string(c.model.kind)},
                  {"matrix_mode", c.model.matrix_mode == MatrixMode::binary ? "binary" : "weighted"},
                  {"grid", grid},
                  {"params", c.model.params ? params_to(*c.model.params) : ordered_json(nullptr)},
                  {"tuning_budget", c.model.tuning_budget},
                  {"tuning_seed", c.model.tuning_seed},
                  {"svd_tolerance", c.model.svd_tolerance},
                  {"svd_max_iterations", c.model.svd_max_iterations}};
    j["item_scan"] = {{"n_grid", c.item_scan.n_grid},
                      {"S", c.item_scan.sample_size},
                      {"k_list", c.item_scan.k_list},
                      {"seed", c.item_scan.seed},
                      {"repeats", c.item_scan.repeats},
                      {"probe_items", c.item_scan.probe_items},
                      {"max_failure_rate", c.item_scan.max_failure_rate}};
    j["user_scan"] = {{"n_grid", c.user_scan.n_grid},
                      {"k_list", c.user_scan.k_list},
                      {"seed", c.user_scan.seed},
                      {"repeats", c.user_scan.repeats}};
    j["threshold"] = {{"window", c.threshold.window},
                      {"bootstrap", c.threshold.bootstrap},
                      {"level", c.threshold.level},
                      {"seed", c.threshold.seed},
                      {"flatness_tolerance", c.threshold.flatness_tolerance},
                      {"contrast_multiplier", c.threshold.contrast_multiplier},
                      {"item_metric", c.threshold.item_metric},
                      {"item_k", c.threshold.item_k},
                      {"user_metric", c.threshold.user_metric},
                      {"user_k", c.threshold.user_k}};
    j["metrics"] = {{"bootstrap", c.metrics.bootstrap}, {"level", c.metrics.level}};
    j["filter_seen"] = c.filter_seen;
    j["workers"] = c.workers;
    j["output_dir"] = c.output_dir;
    return j.dump(2) + "\n";
}

void validate(const RunConfig& c) {
    auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
    if (c.dataset.schema.delimiter.empty()) fail("dataset.delimiter must not be empty");
    if (c.dataset.pcore && *c.dataset.pcore < 1) fail("dataset.pcore must be >= 1");
    if (!(c.split.q > 0.0 && c.split.q < 1.0)) fail("split.q must lie in (0, 1)");
    if (!(c.split.val_fraction > 0.0 && c.split.val_fraction < 1.0)) fail("split.val_fraction must lie in (0, 1)");
    if (c.model.tuning_budget < 1) fail("model.tuning_budget must be >= 1");
    if (c.model.grid && c.model.grid->empty()) fail("model.grid must not be empty");
    if (!(c.model.svd_tolerance > 0.0)) fail("model.svd_tolerance must be > 0");
    if (c.model.svd_max_iterations < 1) fail("model.svd_max_iterations must be >= 1");
    auto check_grid = [&](const std::vector<std::size_t>& g, const char* name) {
        if (g.empty() || g.front() < 1) fail(std::string(name) + " must be non-empty with values >= 1");
        for (std::size_t i = 1; i < g.size(); ++i)
            if (g[i] <= g[i - 1]) fail(std::string(name) + " must be strictly ascending");
    };
    check_grid(c.item_scan.n_grid, "item_scan.n_grid");
    check_grid(c.user_scan.n_grid, "user_scan.n_grid");
    auto check_k = [&](const std::vector<std::size_t>& ks, const char* name) {
        if (ks.empty()) fail(std::string(name) + " must not be empty");
        for (auto k : ks)
            if (k < 1) fail(std::string(name) + " values must be >= 1");
    };
    check_k(c.item_scan.k_list, "item_scan.k_list");
    check_k(c.user_scan.k_list, "user_scan.k_list");
    if (c.item_scan.sample_size < 1) fail("item_scan.S must be >= 1");
    if (c.item_scan.repeats < 1 || c.user_scan.repeats < 1) fail("repeats must be >= 1");
    if (!(c.item_scan.max_failure_rate >= 0.0 && c.item_scan.max_failure_rate <= 1.0))
        fail("item_scan.max_failure_rate must lie in [0, 1]");
    if (c.threshold.window < 2) fail("threshold.window must be >= 2");
    if (!(c.threshold.level > 0.0 && c.threshold.level < 1.0)) fail("threshold.level must lie in (0, 1)");
    if (c.threshold.item_metric != "hr_star" && c.threshold.item_metric != "ndcg_star")
        fail("threshold.item_metric must be hr_star or ndcg_star");
    if (c.threshold.user_metric != "hr" && c.threshold.user_metric != "ndcg")
        fail("threshold.user_metric must be hr or ndcg");
    if (!(c.metrics.level > 0.0 && c.metrics.level < 1.0)) fail("metrics.level must lie in (0, 1)");
}

} // namespace coldwarm
