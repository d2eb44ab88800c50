#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coldwarm/pipeline.hpp"

using namespace coldwarm;

namespace {

enum Exit { ok = 0, config_error = 1, data_error = 2, run_failure = 3 };

struct Common {
    std::string config_path;
    std::string output_dir;
    int workers = -1;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("-c,--config", c.config_path, "Run configuration (JSON)")->required();
    cmd->add_option("-o,--output-dir", c.output_dir, "Override output_dir from the config");
    cmd->add_option("-w,--workers", c.workers, "Worker threads (0 = all cores)");
}

RunConfig load(const Common& c) {
    auto config = load_config(c.config_path);
    if (!c.output_dir.empty()) config.output_dir = c.output_dir;
    if (c.workers >= 0) config.workers = static_cast<std::size_t>(c.workers);
    validate(config);
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"coldwarm: cold-to-warm interaction thresholds for recommenders"};
    app.require_subcommand(1);

    Common common;
    auto* stats = app.add_subcommand("stats", "Dataset statistics (stats.csv)");
    auto* split = app.add_subcommand("split", "Global-timepoint split (split/)");
    auto* tune = app.add_subcommand("tune", "Tune and train the configured model");
    auto* items = app.add_subcommand("scan-items", "Item-level scan over the N grid (resumable)");
    auto* users = app.add_subcommand("scan-users", "User-level scan over the N grid");
    auto* detect = app.add_subcommand("detect", "Detect thresholds from curves files");
    auto* plot = app.add_subcommand("plot-data", "Convert a curves file to long-format plot data");
    for (auto* cmd : {stats, split, tune, items, users, detect}) add_common(cmd, common);

    std::size_t stability_n = 0;
    items->add_option("--stability-n", stability_n, "Also compute stability@10 between two seeds at this N");

    std::vector<std::string> curves;
    std::string detect_out;
    detect->add_option("curves", curves, "Curves CSV files")->required()->check(CLI::ExistingFile);
    detect->add_option("--out", detect_out, "Output JSON (default <output_dir>/thresholds.json)");

    std::string plot_in, plot_out;
    plot->add_option("curves", plot_in, "Curves CSV file")->required()->check(CLI::ExistingFile);
    plot->add_option("--out", plot_out, "Output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? ok : config_error;
    }

    auto& log = std::cerr;
    try {
        if (*plot) {
            pipeline::cmd_plotdata(plot_in, plot_out);
            return ok;
        }
        const auto config = load(common);
        if (*stats) {
            const auto s = pipeline::cmd_stats(config, log);
            std::cout << stats_csv(s);
        } else if (*split) {
            pipeline::cmd_split(config, log);
        } else if (*tune) {
            pipeline::cmd_tune(config, log);
        } else if (*items) {
            pipeline::cmd_scan_items(config, log, stability_n);
        } else if (*users) {
            pipeline::cmd_scan_users(config, log);
        } else if (*detect) {
            const auto records = pipeline::cmd_detect(config, curves, detect_out, log);
            std::cout << threshold_records_json(records);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return data_error;
    } catch (const RunFailure& e) {
        std::cerr << "run failure: " << e.what() << "\n";
        return run_failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return run_failure;
    }
    return ok;
}
