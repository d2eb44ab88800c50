#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "coldwarm/config.hpp"
#include "coldwarm/item_scan.hpp"
#include "coldwarm/split.hpp"
#include "coldwarm/threshold.hpp"
#include "coldwarm/user_scan.hpp"

// End-to-end commands behind the CLI. Every command reads its inputs from
// and writes its outputs to the run's output directory.
namespace coldwarm::pipeline {

/// COLDWARM_OUTPUT_DIR, when set, overrides the configured directory.
std::string output_dir(const RunConfig& config);

InteractionLog load_dataset(const RunConfig& config, std::ostream& log);

/// stats.csv
DatasetStats cmd_stats(const RunConfig& config, std::ostream& log);

/// split/{train,validation,test,users,items}.csv + split/manifest.json
GlobalTimepointSplit cmd_split(const RunConfig& config, std::ostream& log);

/// tuning_<model>.json and model_<model>.bin (trained on the split's train set).
TuningResult cmd_tune(const RunConfig& config, std::ostream& log);

/// items_<model>_runlog.ndjson (resumable) and items_<model>_curves.csv.
/// With `stability_n` > 0 also items_<model>_stability.json.
ItemScanResult cmd_scan_items(const RunConfig& config, std::ostream& log, std::size_t stability_n = 0);

/// users_<model>_records.ndjson and users_<model>_curves.csv.
UserScanResult cmd_scan_users(const RunConfig& config, std::ostream& log);

/// Detects one threshold per (setup, model) in the curves files and writes
/// them to `out_path` (default thresholds.json in the output directory).
std::vector<ThresholdRecord> cmd_detect(const RunConfig& config, const std::vector<std::string>& curves_files,
                                        std::string out_path, std::ostream& log);

/// Long-format rows: series,setup,model,metric,K,N,mean,ci_low,ci_high,n_entities
void cmd_plotdata(const std::string& curves_file, const std::string& out_path);

} // namespace coldwarm::pipeline
