#include "coldwarm/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>

#include <json.hpp>

namespace coldwarm::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string output_dir(const RunConfig& config) {
    if (const char* env = std::getenv("COLDWARM_OUTPUT_DIR"); env && *env) return env;
    return config.output_dir;
}

namespace {

fs::path out_path(const RunConfig& c, const std::string& name) {
    fs::path dir(output_dir(c));
    fs::create_directories(dir);
    return dir / name;
}

std::string model_name(const RunConfig& c) { return to_string(c.model.kind); }

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write " + path.string());
    os << text;
}

SvdOptions svd_options(const RunConfig& c) {
    SvdOptions o;
    o.tolerance = c.model.svd_tolerance;
    o.max_iterations = c.model.svd_max_iterations;
    return o;
}

GlobalTimepointSplit load_split(const RunConfig& c) {
    const auto dir = fs::path(output_dir(c)) / "split";
    if (!fs::exists(dir / "manifest.json"))
        throw DataError("no split found in " + dir.string() + " (run the split command first)");
    return import_split(dir.string());
}

struct Tuned {
    HyperParams params;
    std::unique_ptr<Recommender> model;
};

/// Loads tuned hyperparameters and the trained model, tuning first if needed.
Tuned tuned_model(const RunConfig& c, std::ostream& log) {
    const auto tuning = fs::path(output_dir(c)) / ("tuning_" + model_name(c) + ".json");
    const auto model = fs::path(output_dir(c)) / ("model_" + model_name(c) + ".bin");
    if (!fs::exists(tuning) || !fs::exists(model)) cmd_tune(c, log);
    std::ifstream is(tuning);
    Tuned t;
    try {
        const auto doc = json::parse(is);
        for (const auto& [k, v] : doc.at("chosen").items()) t.params[k] = v.get<double>();
    } catch (const json::exception& ex) {
        throw DataError(std::string("malformed tuning file: ") + ex.what());
    }
    t.model = load_model(model.string());
    return t;
}

} // namespace

InteractionLog load_dataset(const RunConfig& c, std::ostream& log) {
    if (c.dataset.path.empty()) throw ConfigError("config: dataset.path is not set");
    IngestReport report;
    auto data = ingest_log_file(c.dataset.path, c.dataset.schema, &report);
    log << "ingested " << data.events.size() << " events (" << report.skipped << " malformed rows skipped";
    if (!report.skipped_lines.empty()) {
        log << "; first at line";
        for (std::size_t i = 0; i < std::min<std::size_t>(5, report.skipped_lines.size()); ++i)
            log << ' ' << report.skipped_lines[i];
    }
    log << ")\n";
    if (data.events.empty()) throw DataError("dataset " + c.dataset.path + " contains no interactions");
    if (c.dataset.pcore) {
        data = pcore_filter(data, *c.dataset.pcore);
        log << *c.dataset.pcore << "-core filtering kept " << data.events.size() << " events\n";
    }
    return data;
}

DatasetStats cmd_stats(const RunConfig& c, std::ostream& log) {
    const auto stats = compute_stats(load_dataset(c, log));
    write_text(out_path(c, "stats.csv"), stats_csv(stats));
    return stats;
}

GlobalTimepointSplit cmd_split(const RunConfig& c, std::ostream& log) {
    const auto data = load_dataset(c, log);
    auto split = split_global_timepoint(data, c.split.q, c.split.val_fraction, c.split.seed);
    check_split_invariants(split);
    export_split(split, out_path(c, "split").string());
    log << "split: gt=" << split.gt << ", train events " << split.train.events.size() << ", validation users "
        << split.validation.size() << ", test users " << split.test.size() << " ("
        << split.counters.post_gt_events << " post-gt events)\n";
    return split;
}

TuningResult cmd_tune(const RunConfig& c, std::ostream& log) {
    const auto split = load_split(c);
    const auto trainer = make_trainer(c.model.kind, svd_options(c));
    TuningResult result;
    if (c.model.params) {
        result.chosen = *c.model.params;
        result.trials.push_back({*c.model.params, 0.0, false, ""});
        log << "tuning skipped, fixed params " << describe(result.chosen) << "\n";
    } else {
        const auto grid = c.model.grid.value_or(default_grid(c.model.kind));
        result = tune_random_search(trainer, grid, split, c.model.tuning_budget, c.model.tuning_seed,
                                    c.model.matrix_mode, c.filter_seen);
        log << "tuned " << model_name(c) << ": " << describe(result.chosen)
            << " (validation NDCG@10 = " << result.validation_ndcg10 << ")\n";
    }
    const auto model = trainer(build_matrix(split.train, c.model.matrix_mode), result.chosen, {});
    save_model(*model, out_path(c, "model_" + model_name(c) + ".bin").string());

    ordered_json j;
    j["model"] = model_name(c);
    j["chosen"] = json::object();
    for (const auto& [k, v] : result.chosen) j["chosen"][k] = v;
    j["validation_ndcg10"] = result.validation_ndcg10;
    j["trials"] = json::array();
    for (const auto& t : result.trials) {
        ordered_json tj;
        tj["params"] = json::object();
        for (const auto& [k, v] : t.params) tj["params"][k] = v;
        tj["ndcg10"] = t.ndcg10;
        tj["failed"] = t.failed;
        tj["error"] = t.error;
        j["trials"].push_back(tj);
    }
    write_text(out_path(c, "tuning_" + model_name(c) + ".json"), j.dump(2) + "\n");
    return result;
}

ItemScanResult cmd_scan_items(const RunConfig& c, std::ostream& log, std::size_t stability_n) {
    const auto split = load_split(c);
    auto tuned = tuned_model(c, log);

    ItemScanConfig sc;
    sc.n_grid = c.item_scan.n_grid;
    sc.sample_size = c.item_scan.sample_size;
    sc.k_list = c.item_scan.k_list;
    sc.model_name = model_name(c);
    sc.params = tuned.params;
    sc.matrix_mode = c.model.matrix_mode;
    sc.seed = c.item_scan.seed;
    sc.filter_seen = c.filter_seen;
    sc.repeats = c.item_scan.repeats;
    sc.workers = c.workers;
    sc.probe_items = c.item_scan.probe_items;
    sc.bootstrap = c.metrics.bootstrap;
    sc.level = c.metrics.level;
    sc.max_failure_rate = c.item_scan.max_failure_rate;

    bool clamped = false;
    if (sc.probe_items.empty()) sample_probe_items(split.train, sc.sample_size, sc.seed, &clamped);
    if (clamped) log << "warning: S exceeds the number of training items, scanning all of them\n";

    TrainContext ctx;
    Eigen::MatrixXd warm;
    if (const auto* svd = dynamic_cast<const PureSvdModel*>(tuned.model.get())) {
        warm = svd->factors();
        ctx.svd_warm_start = &warm;
    }
    const auto trainer = make_trainer(c.model.kind, svd_options(c));
    RunLog run_log(out_path(c, "items_" + sc.model_name + "_runlog.ndjson").string());
    if (!run_log.records().empty()) log << "resuming: " << run_log.records().size() << " cell records on disk\n";
    auto result = run_item_scan(sc, split, trainer, &run_log, ctx);
    write_curves_file(out_path(c, "items_" + sc.model_name + "_curves.csv").string(), result.curve);
    log << "item scan: " << result.probes.size() << " probes, " << result.records.size() << " cell records, "
        << result.failures.size() << " failed retrains\n";

    if (stability_n > 0) {
        ordered_json j = json::array();
        for (auto item : result.probes) {
            if (result.pool_sizes.at(item) < stability_n) continue;
            const double s = item_scan_stability(sc, split, trainer, item, stability_n, sc.seed,
                                                 sc.seed + 1, 10, ctx);
            j.push_back({{"item", item}, {"N", stability_n}, {"stability_at_10", s}});
        }
        write_text(out_path(c, "items_" + sc.model_name + "_stability.json"), j.dump(2) + "\n");
    }
    return result;
}

UserScanResult cmd_scan_users(const RunConfig& c, std::ostream& log) {
    const auto split = load_split(c);
    const auto tuned = tuned_model(c, log);
    const auto uscan = build_user_scan_split(split);

    UserScanConfig sc;
    sc.n_grid = c.user_scan.n_grid;
    sc.k_list = c.user_scan.k_list;
    sc.model_name = model_name(c);
    sc.seed = c.user_scan.seed;
    sc.filter_seen = c.filter_seen;
    sc.repeats = c.user_scan.repeats;
    sc.workers = c.workers;
    sc.bootstrap = c.metrics.bootstrap;
    sc.level = c.metrics.level;

    auto result = run_user_scan(*tuned.model, uscan, sc);
    for (auto n : result.omitted_n) log << "warning: no eligible users at N=" << n << ", point omitted\n";
    write_user_records(out_path(c, "users_" + sc.model_name + "_records.ndjson").string(), result.records);
    write_curves_file(out_path(c, "users_" + sc.model_name + "_curves.csv").string(), result.curve);
    log << "user scan: " << uscan.test_records.size() << " test users, " << result.records.size() << " records\n";
    return result;
}

std::vector<ThresholdRecord> cmd_detect(const RunConfig& c, const std::vector<std::string>& curves_files,
                                        std::string out, std::ostream& log) {
    if (curves_files.empty()) throw ConfigError("detect: no curves file given");
    std::vector<MetricPoint> points;
    for (const auto& f : curves_files) {
        auto p = read_curves_file(f);
        points.insert(points.end(), p.begin(), p.end());
    }
    std::set<std::pair<std::string, std::string>> series;
    for (const auto& p : points) series.insert({p.setup, p.model});

    DetectOptions opt;
    opt.window = c.threshold.window;
    opt.flatness_tolerance = c.threshold.flatness_tolerance;
    opt.contrast_multiplier = c.threshold.contrast_multiplier;

    std::vector<ThresholdRecord> records;
    for (const auto& [setup, model] : series) {
        const bool items = setup == "item";
        const std::string metric = items ? c.threshold.item_metric : c.threshold.user_metric;
        const std::size_t k = items ? c.threshold.item_k : c.threshold.user_k;
        std::map<std::size_t, double> values;
        for (const auto& p : points)
            if (p.setup == setup && p.model == model && p.metric == metric && p.k == k) values[p.n] = p.mean;
        if (values.size() < opt.window) {
            log << "warning: " << setup << "/" << model << " has " << values.size() << " points of " << metric
                << "@" << k << ", fewer than the window; skipped\n";
            continue;
        }
        ThresholdRecord rec{c.dataset.name, setup, model, metric, k, detect_threshold(Curve::from_map(values), opt)};

        // Bootstrap CI from per-entity records when the scan left them behind.
        std::map<std::size_t, std::vector<double>> entities;
        const auto dir = fs::path(output_dir(c));
        if (items && fs::exists(dir / ("items_" + model + "_runlog.ndjson")))
            entities = item_entity_values(read_item_run_log((dir / ("items_" + model + "_runlog.ndjson")).string()),
                                          metric, k);
        else if (!items && fs::exists(dir / ("users_" + model + "_records.ndjson")))
            entities = user_entity_values(read_user_records((dir / ("users_" + model + "_records.ndjson")).string()),
                                          metric, k);
        std::erase_if(entities, [&](const auto& kv) { return kv.second.size() < 2 || !values.count(kv.first); });
        if (c.threshold.bootstrap > 0 && entities.size() >= opt.window) {
            auto boot = bootstrap_threshold_ci(entities, opt, c.threshold.bootstrap, c.threshold.level,
                                               c.threshold.seed);
            rec.report.ci = boot.ci;
            if (rec.report.ci && rec.report.threshold_n) {
                const auto t = static_cast<double>(*rec.report.threshold_n);
                rec.report.ci->low = std::min(rec.report.ci->low, t);
                rec.report.ci->high = std::max(rec.report.ci->high, t);
            }
            rec.report.bootstrap_sd = boot.sd;
            rec.report.widened_warning = boot.widened_warning;
            if (boot.widened_warning)
                log << "warning: " << setup << "/" << model << ": detection failed in " << boot.failures << " of "
                    << boot.resamples << " bootstrap resamples\n";
        }
        log << setup << "/" << model << ": threshold "
            << (rec.report.threshold_n ? std::to_string(*rec.report.threshold_n) : std::string("none")) << " ("
            << to_string(rec.report.verdict) << ")\n";
        records.push_back(std::move(rec));
    }
    if (out.empty()) out = out_path(c, "thresholds.json").string();
    write_text(out, threshold_records_json(records));
    return records;
}

void cmd_plotdata(const std::string& curves_file, const std::string& out) {
    auto points = read_curves_file(curves_file);
    std::stable_sort(points.begin(), points.end(), [](const MetricPoint& a, const MetricPoint& b) {
        return std::tie(a.setup, a.model, a.metric, a.k, a.n) < std::tie(b.setup, b.model, b.metric, b.k, b.n);
    });
    std::ofstream os(out);
    if (!os) throw DataError("cannot write " + out);
    os.precision(17);
    os << "series,setup,model,metric,K,N,mean,ci_low,ci_high,n_entities\n";
    for (const auto& p : points)
        os << p.metric << '@' << p.k << ',' << p.setup << ',' << p.model << ',' << p.metric << ',' << p.k << ','
           << p.n << ',' << p.mean << ',' << p.ci_low << ',' << p.ci_high << ',' << p.n_entities << '\n';
}

} // namespace coldwarm::pipeline
