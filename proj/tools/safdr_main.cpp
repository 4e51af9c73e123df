#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "safdr/annealer.hpp"
#include "safdr/baselines.hpp"
#include "safdr/dataset.hpp"
#include "safdr/errors.hpp"
#include "safdr/logistic.hpp"
#include "safdr/model_selection.hpp"
#include "safdr/run_config.hpp"

namespace {

using namespace safdr;

const char* category(ExitCode code) {
    switch (code) {
        case ExitCode::ok: return "ok";
        case ExitCode::internal: return "internal error";
        case ExitCode::usage: return "usage error";
        case ExitCode::validation: return "validation error";
        case ExitCode::io: return "i/o error";
        case ExitCode::numerical: return "numerical error";
    }
    return "error";
}

std::vector<Method> parse_method_list(const std::string& joined) {
    std::vector<Method> methods;
    std::stringstream stream(joined);
    std::string item;
    while (std::getline(stream, item, ',')) methods.push_back(parse_method(item));
    if (methods.empty()) throw ValidationError("empty method list");
    return methods;
}

std::uint64_t parse_seed(const std::string& text) {
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ValidationError("seed must be an unsigned integer, got: " + text);
    }
    return value;
}

std::vector<int> standardise_reference(const RunConfig& config, const SplitPlan& plan,
                                       int n_rows) {
    switch (config.standardise_on) {
        case StandardiseOn::train: return plan.train_idx;
        case StandardiseOn::test: return plan.test_idx;
        case StandardiseOn::all: break;
    }
    std::vector<int> rows(static_cast<std::size_t>(n_rows));
    for (int i = 0; i < n_rows; ++i) rows[static_cast<std::size_t>(i)] = i;
    return rows;
}

void cmd_select(const RunConfig& config, const Dataset& data) {
    const SplitPlan plan = stratified_split(data, config.seed);
    const Dataset standardised = apply_standardiser(
        data, fit_standardiser(data, standardise_reference(config, plan, data.rows())));

    AnnealConfig anneal_cfg = config.anneal;
    anneal_cfg.seed = config.seed;
    anneal_cfg.threads = config.threads;

    SelectOutcome outcome;
    outcome.result = anneal(standardised, plan.train_idx, config.k, anneal_cfg);
    outcome.split = plan;
    outcome.train_auc =
        auc(score(outcome.result.best_model, standardised, plan.train_idx));
    outcome.mean_train_cross_entropy =
        mean_cross_entropy(outcome.result.best_model, standardised, plan.train_idx);
    for (int idx : outcome.result.best_subset.indices()) {
        outcome.feature_names.push_back(data.feature_names[static_cast<std::size_t>(idx)]);
    }

    write_select_result(config, outcome, config.out_path);
    if (!config.trajectory_path.empty()) {
        std::ofstream trajectory(config.trajectory_path);
        if (!trajectory) {
            throw IoError("cannot open trajectory file: " + config.trajectory_path);
        }
        write_trajectory(outcome.result, trajectory);
    }
    if (config.verbosity >= 1) {
        std::cout << "select: k=" << config.k << " train_auc=" << outcome.train_auc
                  << " stop=" << to_string(outcome.result.stop_reason) << " features=[";
        for (std::size_t i = 0; i < outcome.feature_names.size(); ++i) {
            std::cout << (i ? ", " : "") << outcome.feature_names[i];
        }
        std::cout << "]\n  wrote " << config.out_path << '\n';
    }
}

CvOptions cv_options(const RunConfig& config) {
    CvOptions opts;
    opts.k_max = config.k_max;
    opts.c_grid = config.c_grid;
    opts.anneal = config.anneal;
    opts.standardise_on = config.standardise_on;
    opts.threads = config.threads;
    return opts;
}

void cmd_cv(const RunConfig& config, const Dataset& data) {
    const CvRunResult run = run_cv(data, config.methods.front(), config.seed, cv_options(config));
    write_cv_result(config, run, data, config.out_path);
    if (config.verbosity >= 1) {
        std::cout << "cv: method=" << to_string(config.methods.front())
                  << " k_star=" << run.row.k_star << " test_auc=" << run.row.test_auc
                  << "\n  wrote " << config.out_path << '\n';
    }
}

void cmd_bench(const RunConfig& config, const Dataset& data) {
    CvOptions opts = cv_options(config);
    if (config.verbosity >= 2) {
        // Progress goes to stderr so the result payload stays clean.
        opts.audit_hook = [](std::string_view stage, std::span<const int> rows) {
            if (stage == "fit.final") std::cerr << "  refit on " << rows.size() << " rows\n";
        };
    }
    const BenchmarkReport report =
        run_benchmark(data, config.methods, config.repetitions, config.seed, opts);
    write_bench_result(config, report, config.out_path);
    if (config.verbosity >= 1) {
        for (const BenchmarkReport::Aggregate& agg : report.aggregates) {
            std::cout << "bench: method=" << to_string(agg.method)
                      << " mean_k_star=" << agg.mean_k_star
                      << " mean_test_auc=" << agg.mean_test_auc
                      << " seconds_per_fold=" << agg.mean_seconds_per_fold << '\n';
        }
        std::cout << "  wrote " << config.out_path << '\n';
    }
}

int run(const RunConfig& config) {
    validate(config);
    Dataset data = load_csv(config.data_path, config.target_column, config.drop_missing);
    if (config.correlation_cutoff > 0.0) {
        data = drop_correlated(data, config.correlation_cutoff);
    }
    if (config.command == "select") {
        cmd_select(config, data);
    } else if (config.command == "cv") {
        cmd_cv(config, data);
    } else {
        cmd_bench(config, data);
    }
    return static_cast<int>(ExitCode::ok);
}

struct FlagValues {
    std::string data;
    std::string target;
    std::string methods = "sa-fdr";
    int k = 0;
    int k_max = 30;
    std::string seed;
    int repetitions = 20;
    int replicas = 50;
    double sweeps = 0.5;
    double epsilon = 0.7;
    int max_steps = 100;
    int batches = 8;
    int window = 5;
    double tol = 1e-4;
    std::string batch_draw = "per-proposal";
    std::string standardise_on = "train";
    int threads = 1;
    std::vector<double> c_grid;
    bool drop_missing = false;
    double correlation_cutoff = 0.0;
    std::string out;
    std::string trajectory;
    std::string config_path;
    int verbosity = 1;
};

void add_common_options(CLI::App* sub, FlagValues* f, bool is_select, bool is_bench) {
    sub->add_option("--data", f->data, "CSV dataset path");
    sub->add_option("--target", f->target, "name of the label column");
    sub->add_option("--method", f->methods,
                    is_bench ? "comma-separated list from sa-fdr, rfe, lasso"
                             : "one of sa-fdr, rfe, lasso");
    sub->add_option("--k", f->k, "subset size to select (select only)");
    sub->add_option("--k-max", f->k_max, "scan subset sizes 1..k-max (cv and bench only)");
    if (is_select) {
        sub->add_option("--trajectory", f->trajectory, "also write the annealing trajectory TSV");
    } else {
        sub->add_option("--c-grid", f->c_grid, "explicit lasso C grid (ascending)")
            ->delimiter(',');
    }
    if (is_bench) {
        sub->add_option("--repetitions", f->repetitions, "independent repetitions, at most 20");
    }
    sub->add_option("--seed", f->seed, "master seed (SAFDR_SEED env is the fallback)");
    sub->add_option("--replicas", f->replicas, "annealing replicas");
    sub->add_option("--sweeps", f->sweeps, "proposals per feature per temperature step");
    sub->add_option("--epsilon", f->epsilon, "inverse-temperature increment scale");
    sub->add_option("--steps", f->max_steps, "maximum temperature steps");
    sub->add_option("--batches", f->batches, "scatter-matrix batches");
    sub->add_option("--window", f->window, "consecutive converged steps required to stop");
    sub->add_option("--tol", f->tol, "relative mean-FDR change treated as converged");
    sub->add_option("--batch-draw", f->batch_draw, "per-proposal or per-sweep");
    sub->add_option("--standardise-on", f->standardise_on,
                    "rows the standardiser is fit on: train, test or all");
    sub->add_option("--threads", f->threads, "worker threads (results are thread-count invariant)");
    sub->add_flag("--drop-missing", f->drop_missing,
                  "drop rows with missing values instead of failing");
    sub->add_option("--drop-correlated", f->correlation_cutoff,
                    "drop the later feature of any pair correlated above this cutoff");
    sub->add_option("--out", f->out, "result file path");
    sub->add_option("--config", f->config_path, "JSON config file; explicit flags win");
    sub->add_option("--verbosity", f->verbosity, "0 silent, 1 summary, 2 chatty");
}

RunConfig resolve_config(const CLI::App* sub, const FlagValues& f, const std::string& command) {
    RunConfig config;
    if (sub->count("--config") > 0) config = load_config_file(f.config_path);
    config.command = command;

    const auto given = [&](const char* flag) { return sub->count(flag) > 0; };
    if (given("--data")) config.data_path = f.data;
    if (given("--target")) config.target_column = f.target;
    if (given("--method")) config.methods = parse_method_list(f.methods);
    if (given("--k")) config.k = f.k;
    if (given("--k-max")) {
        if (command == "select") {
            throw ValidationError("select fixes the subset size with --k; --k-max conflicts");
        }
        config.k_max = f.k_max;
    }
    if (command == "select") {
        if (given("--trajectory")) config.trajectory_path = f.trajectory;
    } else if (given("--c-grid")) {
        config.c_grid = f.c_grid;
    }
    if (command == "bench" && given("--repetitions")) config.repetitions = f.repetitions;

    if (given("--seed")) {
        config.seed = parse_seed(f.seed);
    } else if (const char* env = std::getenv("SAFDR_SEED")) {
        config.seed = parse_seed(env);
    }

    if (given("--replicas")) config.anneal.n_replicas = f.replicas;
    if (given("--sweeps")) config.anneal.sweeps_per_temp = f.sweeps;
    if (given("--epsilon")) config.anneal.step_epsilon = f.epsilon;
    if (given("--steps")) config.anneal.max_temp_steps = f.max_steps;
    if (given("--batches")) config.anneal.n_batches = f.batches;
    if (given("--window")) config.anneal.convergence_window = f.window;
    if (given("--tol")) config.anneal.convergence_rel_tol = f.tol;
    if (given("--batch-draw")) config.anneal.batch_draw = parse_batch_draw(f.batch_draw);
    if (given("--standardise-on")) {
        config.standardise_on = parse_standardise_on(f.standardise_on);
    }
    if (given("--threads")) config.threads = f.threads;
    if (given("--drop-missing")) config.drop_missing = true;
    if (given("--drop-correlated")) config.correlation_cutoff = f.correlation_cutoff;
    if (given("--out")) config.out_path = f.out;
    if (given("--verbosity")) config.verbosity = f.verbosity;
    if (config.out_path.empty()) config.out_path = "safdr-" + command + ".json";
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"feature selection by replica simulated annealing over FDR-scored subsets"};
    app.require_subcommand(1);

    FlagValues flags;
    CLI::App* select = app.add_subcommand("select", "pick one subset of a fixed size k");
    CLI::App* cv = app.add_subcommand("cv", "scan k (or C) with the validation protocol");
    CLI::App* bench = app.add_subcommand("bench", "repeated cv runs with paired seeds");
    add_common_options(select, &flags, true, false);
    add_common_options(cv, &flags, false, false);
    add_common_options(bench, &flags, false, true);

    try {
        app.parse(argc, argv);
        const CLI::App* sub = app.get_subcommands().front();
        return run(resolve_config(sub, flags, sub->get_name()));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::usage);
    } catch (const Error& e) {
        std::cerr << category(e.code()) << ": " << e.what() << '\n';
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::internal);
    }
}
