#include "safdr/model_selection.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "safdr/baselines.hpp"
#include "safdr/errors.hpp"
#include "safdr/logistic.hpp"
#include "safdr/parallel.hpp"
#include "safdr/rng.hpp"

namespace safdr {

std::string to_string(Method method) {
    switch (method) {
        case Method::sa_fdr: return "sa-fdr";
        case Method::rfe: return "rfe";
        case Method::lasso: return "lasso";
    }
    throw Error(ExitCode::internal, "unknown method tag");
}

Method parse_method(std::string_view name) {
    if (name == "sa-fdr") return Method::sa_fdr;
    if (name == "rfe") return Method::rfe;
    if (name == "lasso") return Method::lasso;
    throw ValidationError("unknown method: " + std::string(name) +
                          " (expected sa-fdr, rfe or lasso)");
}

std::string to_string(StandardiseOn mode) {
    switch (mode) {
        case StandardiseOn::train: return "train";
        case StandardiseOn::test: return "test";
        case StandardiseOn::all: return "all";
    }
    throw Error(ExitCode::internal, "unknown standardise mode");
}

StandardiseOn parse_standardise_on(std::string_view name) {
    if (name == "train") return StandardiseOn::train;
    if (name == "test") return StandardiseOn::test;
    if (name == "all") return StandardiseOn::all;
    throw ValidationError("unknown standardise-on value: " + std::string(name) +
                          " (expected train, test or all)");
}

int select_axis_index(std::span<const double> means, std::span<const double> stds) {
    if (means.empty() || means.size() != stds.size()) {
        throw ValidationError("select_axis_index: empty or mismatched scan");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < means.size(); ++i) {
        if (means[i] > means[best]) best = i;  // strict keeps ties at the sparser end
    }
    const double threshold = means[best] - stds[best];
    for (std::size_t i = 0; i < means.size(); ++i) {
        if (means[i] >= threshold) return static_cast<int>(i);
    }
    return static_cast<int>(best);  // unreachable: best itself clears the threshold
}

int select_k_star(const CvScan& scan) {
    if (scan.method == Method::lasso) {
        throw ValidationError("select_k_star expects a k scan; lasso scans the C axis");
    }
    const int idx = select_axis_index(scan.mean_auc, scan.std_auc);
    return static_cast<int>(scan.axis[static_cast<std::size_t>(idx)]);
}

namespace {

// Stable tags folded into per-cell seeds so the three methods never share
// RNG streams.
std::uint64_t method_tag(Method method) {
    switch (method) {
        case Method::sa_fdr: return 1;
        case Method::rfe: return 2;
        case Method::lasso: return 3;
    }
    return 0;
}

void audit(const CvOptions& opts, std::string_view stage, std::span<const int> rows) {
    if (opts.audit_hook) opts.audit_hook(stage, rows);
}

std::vector<int> all_rows(const Dataset& data) {
    std::vector<int> rows(static_cast<std::size_t>(data.rows()));
    std::iota(rows.begin(), rows.end(), 0);
    return rows;
}

Dataset standardised_copy(const Dataset& data, const SplitPlan& plan, const CvOptions& opts) {
    std::vector<int> reference;
    switch (opts.standardise_on) {
        case StandardiseOn::train: reference = plan.train_idx; break;
        case StandardiseOn::test: reference = plan.test_idx; break;
        case StandardiseOn::all: reference = all_rows(data); break;
    }
    audit(opts, "standardise.fit", reference);
    return apply_standardiser(data, fit_standardiser(data, reference));
}

double validation_auc(const Dataset& data, const FoldPair& fold, const FeatureSubset& subset,
                      const CvOptions& opts) {
    audit(opts, "fit.validation", fold.train);
    const LogisticModel model = fit_logistic(data, fold.train, subset);
    return auc(score(model, data, fold.val));
}

void fill_axis_stats(CvScan* scan) {
    const auto n_axis = scan->axis.size();
    scan->mean_auc.assign(n_axis, 0.0);
    scan->std_auc.assign(n_axis, 0.0);
    for (std::size_t i = 0; i < n_axis; ++i) {
        double mean = 0.0;
        for (const CvCell& cell : scan->cells[i]) mean += cell.validation_auc;
        mean /= kFoldCount;
        double var = 0.0;
        for (const CvCell& cell : scan->cells[i]) {
            const double d = cell.validation_auc - mean;
            var += d * d;
        }
        scan->mean_auc[i] = mean;
        scan->std_auc[i] = var > 0.0 ? std::sqrt(var / kFoldCount) : 0.0;
    }
}

void scan_sa_fdr(const Dataset& data, std::uint64_t seed, const CvOptions& opts, CvScan* scan) {
    const int n_axis = static_cast<int>(scan->axis.size());
    const int n_jobs = n_axis * kFoldCount;
    parallel_for(n_jobs, opts.threads, [&](int job) {
        const int axis_idx = job / kFoldCount;
        const int fold_idx = job % kFoldCount;
        const int k = static_cast<int>(scan->axis[static_cast<std::size_t>(axis_idx)]);
        const FoldPair& fold = scan->split.folds[static_cast<std::size_t>(fold_idx)];
        CvCell& cell = scan->cells[static_cast<std::size_t>(axis_idx)]
                                  [static_cast<std::size_t>(fold_idx)];
        try {
            AnnealConfig cfg = opts.anneal;
            cfg.seed = seed_combine(seed, static_cast<std::uint64_t>(fold_idx),
                                    static_cast<std::uint64_t>(k), method_tag(Method::sa_fdr));
            cfg.threads = 1;  // parallelism lives at the cell level here
            audit(opts, "selector.sa-fdr", fold.train);
            const AnnealResult result = anneal(data, fold.train, k, cfg);
            cell.validation_auc = validation_auc(data, fold, result.best_subset, opts);
            cell.support_size = k;
        } catch (const std::exception&) {
            cell = CvCell{0.5, 0, true};
        }
    });
}

void scan_rfe(const Dataset& data, const CvOptions& opts, CvScan* scan) {
    parallel_for(kFoldCount, opts.threads, [&](int fold_idx) {
        const FoldPair& fold = scan->split.folds[static_cast<std::size_t>(fold_idx)];
        RfeResult ranking;
        bool fold_failed = false;
        try {
            audit(opts, "selector.rfe", fold.train);
            ranking = rfe(data, fold.train);
        } catch (const std::exception&) {
            fold_failed = true;
        }
        for (std::size_t i = 0; i < scan->axis.size(); ++i) {
            CvCell& cell = scan->cells[i][static_cast<std::size_t>(fold_idx)];
            if (fold_failed) {
                cell = CvCell{0.5, 0, true};
                continue;
            }
            const int k = static_cast<int>(scan->axis[i]);
            try {
                cell.validation_auc =
                    validation_auc(data, fold, ranking.subset_for(k), opts);
                cell.support_size = k;
            } catch (const std::exception&) {
                cell = CvCell{0.5, 0, true};
            }
        }
    });
}

void scan_lasso(const Dataset& data, const CvOptions& opts, CvScan* scan) {
    parallel_for(kFoldCount, opts.threads, [&](int fold_idx) {
        const FoldPair& fold = scan->split.folds[static_cast<std::size_t>(fold_idx)];
        L1PathResult path;
        bool fold_failed = false;
        try {
            audit(opts, "selector.lasso", fold.train);
            path = l1_path(data, fold.train, scan->axis);
        } catch (const std::exception&) {
            fold_failed = true;
        }
        for (std::size_t i = 0; i < scan->axis.size(); ++i) {
            CvCell& cell = scan->cells[i][static_cast<std::size_t>(fold_idx)];
            if (fold_failed) {
                cell = CvCell{0.5, 0, true};
                continue;
            }
            try {
                const FeatureSubset& support = path.points[i].support;
                cell.validation_auc = validation_auc(data, fold, support, opts);
                cell.support_size = support.size();
            } catch (const std::exception&) {
                cell = CvCell{0.5, 0, true};
            }
        }
    });
}

FeatureSubset final_subset_for(const Dataset& data, Method method, std::uint64_t seed,
                               const CvOptions& opts, CvScan* scan) {
    const auto idx = static_cast<std::size_t>(scan->selected_index);
    const std::vector<int>& train = scan->split.train_idx;
    switch (method) {
        case Method::sa_fdr: {
            const int k = static_cast<int>(scan->axis[idx]);
            AnnealConfig cfg = opts.anneal;
            // Fold slot kFoldCount marks the final refit; scan folds use 0..4.
            cfg.seed = seed_combine(seed, static_cast<std::uint64_t>(kFoldCount),
                                    static_cast<std::uint64_t>(k), method_tag(method));
            cfg.threads = opts.threads;
            scan->k_star = k;
            audit(opts, "selector.sa-fdr", train);
            return anneal(data, train, k, cfg).best_subset;
        }
        case Method::rfe: {
            const int k = static_cast<int>(scan->axis[idx]);
            scan->k_star = k;
            audit(opts, "selector.rfe", train);
            return rfe(data, train).subset_for(k);
        }
        case Method::lasso: {
            scan->selected_c = scan->axis[idx];
            double mean_support = 0.0;
            for (const CvCell& cell : scan->cells[idx]) mean_support += cell.support_size;
            scan->k_star = mean_support / kFoldCount;
            audit(opts, "selector.lasso", train);
            const L1PathResult path = l1_path(data, train, scan->axis);
            return path.points[idx].support;
        }
    }
    throw Error(ExitCode::internal, "unknown method tag");
}

}  // namespace

CvRunResult run_cv(const Dataset& data, Method method, std::uint64_t seed,
                   const CvOptions& opts) {
    if (opts.k_max < 1) throw ValidationError("k_max must be at least 1");
    if (opts.threads < 1) throw ValidationError("threads must be at least 1");

    CvRunResult result;
    CvScan& scan = result.scan;
    scan.method = method;
    scan.split = stratified_split(data, seed);

    if (method == Method::lasso) {
        scan.axis = opts.c_grid.empty() ? default_c_grid() : opts.c_grid;
        for (std::size_t i = 0; i < scan.axis.size(); ++i) {
            if (!(scan.axis[i] > 0.0) || (i > 0 && scan.axis[i] <= scan.axis[i - 1])) {
                throw ValidationError("c grid must be positive and strictly ascending");
            }
        }
    } else {
        const int k_top = std::min(opts.k_max, data.features());
        scan.axis.resize(static_cast<std::size_t>(k_top));
        for (int k = 1; k <= k_top; ++k) scan.axis[static_cast<std::size_t>(k - 1)] = k;
    }
    scan.cells.assign(scan.axis.size(), {});

    const Dataset standardised = standardised_copy(data, scan.split, opts);

    const auto scan_start = std::chrono::steady_clock::now();
    switch (method) {
        case Method::sa_fdr: scan_sa_fdr(standardised, seed, opts, &scan); break;
        case Method::rfe: scan_rfe(standardised, opts, &scan); break;
        case Method::lasso: scan_lasso(standardised, opts, &scan); break;
    }
    const std::chrono::duration<double> scan_elapsed =
        std::chrono::steady_clock::now() - scan_start;

    fill_axis_stats(&scan);
    scan.selected_index = select_axis_index(scan.mean_auc, scan.std_auc);

    result.final_subset = final_subset_for(standardised, method, seed, opts, &scan);
    audit(opts, "fit.final", scan.split.train_idx);
    const LogisticModel final_model =
        fit_logistic(standardised, scan.split.train_idx, result.final_subset);
    audit(opts, "evaluate.test", scan.split.test_idx);

    result.row.method = method;
    result.row.seed = seed;
    result.row.k_star = scan.k_star;
    result.row.selected_c = scan.selected_c;
    result.row.test_auc = auc(score(final_model, standardised, scan.split.test_idx));
    result.row.seconds_per_fold = scan_elapsed.count() / kFoldCount;
    return result;
}

BenchmarkReport run_benchmark(const Dataset& data, std::span<const Method> methods,
                              int repetitions, std::uint64_t seed, const CvOptions& opts) {
    if (methods.empty()) throw ValidationError("no methods requested");
    if (repetitions < 1 || repetitions > 20) {
        throw ValidationError("repetitions must be between 1 and 20");
    }
    for (std::size_t i = 0; i < methods.size(); ++i) {
        for (std::size_t j = i + 1; j < methods.size(); ++j) {
            if (methods[i] == methods[j]) throw ValidationError("duplicate method in list");
        }
    }

    BenchmarkReport report;
    report.master_seed = seed;
    report.repetitions = repetitions;
    report.rows.reserve(static_cast<std::size_t>(repetitions) * methods.size());
    report.scans.reserve(report.rows.capacity());

    for (int rep = 0; rep < repetitions; ++rep) {
        const std::uint64_t rep_seed = seed_combine(seed, static_cast<std::uint64_t>(rep));
        for (Method method : methods) {
            CvRunResult run = run_cv(data, method, rep_seed, opts);
            report.rows.push_back(run.row);
            report.scans.push_back(std::move(run.scan));
        }
    }

    for (Method method : methods) {
        BenchmarkReport::Aggregate agg;
        agg.method = method;
        int count = 0;
        for (const BenchmarkRow& row : report.rows) {
            if (row.method != method) continue;
            agg.mean_k_star += row.k_star;
            agg.mean_test_auc += row.test_auc;
            agg.mean_seconds_per_fold += row.seconds_per_fold;
            ++count;
        }
        agg.mean_k_star /= count;
        agg.mean_test_auc /= count;
        agg.mean_seconds_per_fold /= count;
        report.aggregates.push_back(agg);
    }
    return report;
}

}  // namespace safdr
