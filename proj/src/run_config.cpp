#include "safdr/run_config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

#include "json.hpp"

#include "safdr/errors.hpp"

namespace safdr {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed,
                    const char* where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (std::string_view key : allowed) {
            if (it.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ValidationError("config: unknown key \"" + it.key() + "\" in " + where);
        }
    }
}

template <typename T>
void read_field(const json& obj, const char* key, T* out) {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
        *out = it->get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("config: wrong type for key \"") + key + "\"");
    }
}

json anneal_to_json(const AnnealConfig& cfg) {
    return json{{"replicas", cfg.n_replicas},
                {"sweeps", cfg.sweeps_per_temp},
                {"epsilon", cfg.step_epsilon},
                {"max_steps", cfg.max_temp_steps},
                {"batches", cfg.n_batches},
                {"window", cfg.convergence_window},
                {"tol", cfg.convergence_rel_tol},
                {"batch_draw", to_string(cfg.batch_draw)}};
}

AnnealConfig anneal_from_json(const json& obj) {
    reject_unknown(obj,
                   {"replicas", "sweeps", "epsilon", "max_steps", "batches", "window", "tol",
                    "batch_draw"},
                   "anneal");
    AnnealConfig cfg;
    read_field(obj, "replicas", &cfg.n_replicas);
    read_field(obj, "sweeps", &cfg.sweeps_per_temp);
    read_field(obj, "epsilon", &cfg.step_epsilon);
    read_field(obj, "max_steps", &cfg.max_temp_steps);
    read_field(obj, "batches", &cfg.n_batches);
    read_field(obj, "window", &cfg.convergence_window);
    read_field(obj, "tol", &cfg.convergence_rel_tol);
    std::string draw = to_string(cfg.batch_draw);
    read_field(obj, "batch_draw", &draw);
    cfg.batch_draw = parse_batch_draw(draw);
    return cfg;
}

json config_to_json(const RunConfig& config) {
    json methods = json::array();
    for (Method m : config.methods) methods.push_back(to_string(m));
    return json{{"command", config.command},
                {"data", config.data_path},
                {"target", config.target_column},
                {"methods", methods},
                {"k", config.k},
                {"k_max", config.k_max},
                {"seed", config.seed},
                {"repetitions", config.repetitions},
                {"anneal", anneal_to_json(config.anneal)},
                {"standardise_on", to_string(config.standardise_on)},
                {"threads", config.threads},
                {"c_grid", config.c_grid},
                {"drop_missing", config.drop_missing},
                {"correlation_cutoff", config.correlation_cutoff},
                {"out", config.out_path},
                {"trajectory", config.trajectory_path},
                {"verbosity", config.verbosity}};
}

void write_json_file(const json& payload, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open output file: " + path);
    out << payload.dump(2) << '\n';
    if (!out) throw IoError("failed writing output file: " + path);
}

json split_summary(const SplitPlan& plan) {
    json folds = json::array();
    for (const FoldPair& fold : plan.folds) {
        folds.push_back(json{{"train_rows", fold.train.size()}, {"val_rows", fold.val.size()}});
    }
    return json{{"seed", plan.seed},
                {"train_rows", plan.train_idx.size()},
                {"test_rows", plan.test_idx.size()},
                {"folds", folds}};
}

json scan_to_json(const CvScan& scan) {
    json cells = json::array();
    for (std::size_t i = 0; i < scan.axis.size(); ++i) {
        for (int f = 0; f < kFoldCount; ++f) {
            const CvCell& cell = scan.cells[i][static_cast<std::size_t>(f)];
            cells.push_back(json{{"axis_value", scan.axis[i]},
                                 {"fold", f},
                                 {"validation_auc", cell.validation_auc},
                                 {"support_size", cell.support_size},
                                 {"failed", cell.failed}});
        }
    }
    json out{{"method", to_string(scan.method)},
             {"axis_label", scan.method == Method::lasso ? "C" : "k"},
             {"axis", scan.axis},
             {"cells", cells},
             {"mean_auc", scan.mean_auc},
             {"std_auc", scan.std_auc},
             {"selected_index", scan.selected_index},
             {"k_star", scan.k_star}};
    if (scan.method == Method::lasso) out["selected_c"] = scan.selected_c;
    return out;
}

}  // namespace

void validate(const RunConfig& config) {
    if (config.command != "select" && config.command != "cv" && config.command != "bench") {
        throw ValidationError("command must be select, cv or bench");
    }
    if (config.data_path.empty()) throw ValidationError("data path is required");
    if (config.target_column.empty()) throw ValidationError("target column is required");
    if (config.methods.empty()) throw ValidationError("at least one method is required");
    for (std::size_t i = 0; i < config.methods.size(); ++i) {
        for (std::size_t j = i + 1; j < config.methods.size(); ++j) {
            if (config.methods[i] == config.methods[j]) {
                throw ValidationError("duplicate method in list");
            }
        }
    }
    if (config.command == "select") {
        if (config.k < 1) throw ValidationError("select requires --k of at least 1");
        if (config.methods != std::vector<Method>{Method::sa_fdr}) {
            throw ValidationError("select supports only the sa-fdr method");
        }
    } else if (config.k != 0) {
        throw ValidationError("--k applies to select only; use --k-max with cv and bench");
    }
    if (config.command == "cv" && config.methods.size() != 1) {
        throw ValidationError("cv takes exactly one method");
    }
    if (config.k_max < 1) throw ValidationError("k_max must be at least 1");
    if (config.repetitions < 1 || config.repetitions > 20) {
        throw ValidationError("repetitions must be between 1 and 20");
    }
    if (config.threads < 1) throw ValidationError("threads must be at least 1");
    if (config.verbosity < 0) throw ValidationError("verbosity must be non-negative");

    const AnnealConfig& a = config.anneal;
    if (a.n_replicas < 2) throw ValidationError("replicas must be at least 2");
    if (!(a.sweeps_per_temp > 0.0)) throw ValidationError("sweeps must be positive");
    if (!(a.step_epsilon > 0.0)) throw ValidationError("epsilon must be positive");
    if (a.max_temp_steps < 1) throw ValidationError("max_steps must be at least 1");
    if (a.n_batches < 1) throw ValidationError("batches must be at least 1");
    if (a.convergence_window < 1) throw ValidationError("window must be at least 1");
    if (!(a.convergence_rel_tol > 0.0)) throw ValidationError("tol must be positive");

    for (std::size_t i = 0; i < config.c_grid.size(); ++i) {
        if (!(config.c_grid[i] > 0.0)) throw ValidationError("c_grid values must be positive");
        if (i > 0 && config.c_grid[i] <= config.c_grid[i - 1]) {
            throw ValidationError("c_grid must be strictly increasing");
        }
    }
    if (config.correlation_cutoff != 0.0 &&
        !(config.correlation_cutoff > 0.0 && config.correlation_cutoff <= 1.0)) {
        throw ValidationError("correlation cutoff must lie in (0, 1]");
    }
}

std::string to_json_string(const RunConfig& config) { return config_to_json(config).dump(2); }

RunConfig parse_config(const std::string& json_text) {
    json obj;
    try {
        obj = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ValidationError("config: top level must be an object");
    reject_unknown(obj,
                   {"command", "data", "target", "methods", "k", "k_max", "seed", "repetitions",
                    "anneal", "standardise_on", "threads", "c_grid", "drop_missing",
                    "correlation_cutoff", "out", "trajectory", "verbosity"},
                   "config");

    RunConfig config;
    read_field(obj, "command", &config.command);
    read_field(obj, "data", &config.data_path);
    read_field(obj, "target", &config.target_column);
    if (const auto it = obj.find("methods"); it != obj.end()) {
        std::vector<std::string> names;
        try {
            names = it->get<std::vector<std::string>>();
        } catch (const json::exception&) {
            throw ValidationError("config: methods must be an array of strings");
        }
        config.methods.clear();
        for (const std::string& name : names) config.methods.push_back(parse_method(name));
    }
    read_field(obj, "k", &config.k);
    read_field(obj, "k_max", &config.k_max);
    read_field(obj, "seed", &config.seed);
    read_field(obj, "repetitions", &config.repetitions);
    if (const auto it = obj.find("anneal"); it != obj.end()) {
        if (!it->is_object()) throw ValidationError("config: anneal must be an object");
        config.anneal = anneal_from_json(*it);
    }
    std::string standardise = to_string(config.standardise_on);
    read_field(obj, "standardise_on", &standardise);
    config.standardise_on = parse_standardise_on(standardise);
    read_field(obj, "threads", &config.threads);
    read_field(obj, "c_grid", &config.c_grid);
    read_field(obj, "drop_missing", &config.drop_missing);
    read_field(obj, "correlation_cutoff", &config.correlation_cutoff);
    read_field(obj, "out", &config.out_path);
    read_field(obj, "trajectory", &config.trajectory_path);
    read_field(obj, "verbosity", &config.verbosity);
    return config;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

void write_select_result(const RunConfig& config, const SelectOutcome& outcome,
                         const std::string& path) {
    const AnnealResult& r = outcome.result;
    json replicas = json::array();
    for (const ReplicaFinal& rep : r.per_replica_final) {
        replicas.push_back(json{{"subset", rep.subset.indices()},
                                {"fdr", rep.fdr_value},
                                {"cross_entropy", rep.cross_entropy}});
    }
    const std::vector<double> rates = acceptance_rates(r);
    json trajectory = json::array();
    for (std::size_t i = 0; i < r.trajectory.size(); ++i) {
        const TemperatureStats& t = r.trajectory[i];
        trajectory.push_back(json{{"step", t.step},
                                  {"beta", t.beta},
                                  {"mean_fdr", t.mean_fdr},
                                  {"std_fdr", t.std_fdr},
                                  {"acceptance_rate", rates[i]}});
    }
    std::vector<double> coefficients(static_cast<std::size_t>(r.best_model.coefficients.size()));
    for (Eigen::Index i = 0; i < r.best_model.coefficients.size(); ++i) {
        coefficients[static_cast<std::size_t>(i)] = r.best_model.coefficients[i];
    }
    const json payload{
        {"schema_version", 1},
        {"config", config_to_json(config)},
        {"split", split_summary(outcome.split)},
        {"result",
         json{{"best_subset", r.best_subset.indices()},
              {"feature_names", outcome.feature_names},
              {"intercept", r.best_model.intercept},
              {"coefficients", coefficients},
              {"train_cross_entropy", r.best_model.final_cross_entropy},
              {"mean_train_cross_entropy", outcome.mean_train_cross_entropy},
              {"train_auc", outcome.train_auc},
              {"stop_reason", to_string(r.stop_reason)},
              {"initial_mean_fdr", r.initial_mean_fdr},
              {"sigma0", r.schedule.sigma0},
              {"temperature_steps", r.trajectory.size()},
              {"replicas", replicas}}},
        {"trajectory", trajectory}};
    write_json_file(payload, path);
}

void write_cv_result(const RunConfig& config, const CvRunResult& run, const Dataset& data,
                     const std::string& path) {
    std::vector<std::string> names;
    for (int idx : run.final_subset.indices()) {
        names.push_back(data.feature_names[static_cast<std::size_t>(idx)]);
    }
    const json payload{{"schema_version", 1},
                       {"config", config_to_json(config)},
                       {"split", split_summary(run.scan.split)},
                       {"scan", scan_to_json(run.scan)},
                       {"final", json{{"subset", run.final_subset.indices()},
                                      {"feature_names", names},
                                      {"k_star", run.row.k_star},
                                      {"test_auc", run.row.test_auc}}}};
    write_json_file(payload, path);
}

void write_bench_result(const RunConfig& config, const BenchmarkReport& report,
                        const std::string& path) {
    const auto n_methods = config.methods.size();
    json rows = json::array();
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const BenchmarkRow& row = report.rows[i];
        json entry{{"repetition", i / n_methods},
                   {"method", to_string(row.method)},
                   {"seed", row.seed},
                   {"k_star", row.k_star},
                   {"test_auc", row.test_auc},
                   {"seconds_per_fold", row.seconds_per_fold}};
        if (row.method == Method::lasso) entry["selected_c"] = row.selected_c;
        rows.push_back(std::move(entry));
    }
    json aggregates = json::array();
    for (const BenchmarkReport::Aggregate& agg : report.aggregates) {
        aggregates.push_back(json{{"method", to_string(agg.method)},
                                  {"mean_k_star", agg.mean_k_star},
                                  {"mean_test_auc", agg.mean_test_auc},
                                  {"mean_seconds_per_fold", agg.mean_seconds_per_fold}});
    }
    json scans = json::array();
    for (std::size_t i = 0; i < report.scans.size(); ++i) {
        json entry = scan_to_json(report.scans[i]);
        entry["repetition"] = i / n_methods;
        scans.push_back(std::move(entry));
    }
    const json payload{{"schema_version", 1},
                       {"config", config_to_json(config)},
                       {"master_seed", report.master_seed},
                       {"repetitions", report.repetitions},
                       {"rows", rows},
                       {"aggregates", aggregates},
                       {"scans", scans}};
    write_json_file(payload, path);
}

}  // namespace safdr
