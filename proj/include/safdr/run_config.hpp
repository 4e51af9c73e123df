#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "safdr/annealer.hpp"
#include "safdr/model_selection.hpp"

namespace safdr {

/// Fully resolved invocation: every knob the three commands accept, with
/// the same defaults the CLI applies. Embedded verbatim in every result
/// file so a run can be reproduced from its own output.
struct RunConfig {
    std::string command;  // select | cv | bench
    std::string data_path;
    std::string target_column;
    std::vector<Method> methods = {Method::sa_fdr};
    int k = 0;  // select only; 0 means unset
    int k_max = 30;
    std::uint64_t seed = 0;
    int repetitions = 20;  // bench only
    AnnealConfig anneal;
    StandardiseOn standardise_on = StandardiseOn::train;
    int threads = 1;
    std::vector<double> c_grid;  // lasso axis; empty means the default grid
    bool drop_missing = false;
    double correlation_cutoff = 0.0;  // 0 disables the drop_correlated pass
    std::string out_path;
    std::string trajectory_path;  // select only; empty skips the TSV
    int verbosity = 1;

    bool operator==(const RunConfig& other) const = default;
};

/// Range and consistency checks shared by the CLI and config-file paths.
void validate(const RunConfig& config);

std::string to_json_string(const RunConfig& config);

/// Strict parse: unknown keys, wrong types and out-of-range values all
/// throw ValidationError. parse_config(to_json_string(c)) == c.
RunConfig parse_config(const std::string& json_text);

RunConfig load_config_file(const std::string& path);

struct SelectOutcome {
    AnnealResult result;
    double train_auc = 0.0;
    double mean_train_cross_entropy = 0.0;
    std::vector<std::string> feature_names;  // of the best subset, in index order
    SplitPlan split;
};

/// Result-file writers. Payloads contain no timestamps or wall times
/// except the bench report, whose per-fold seconds are part of the
/// contract; select and cv output is byte-identical across reruns.
void write_select_result(const RunConfig& config, const SelectOutcome& outcome,
                         const std::string& path);
void write_cv_result(const RunConfig& config, const CvRunResult& run, const Dataset& data,
                     const std::string& path);
void write_bench_result(const RunConfig& config, const BenchmarkReport& report,
                        const std::string& path);

}  // namespace safdr
