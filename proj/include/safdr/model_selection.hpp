#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "safdr/annealer.hpp"
#include "safdr/dataset.hpp"

namespace safdr {

enum class Method { sa_fdr, rfe, lasso };

std::string to_string(Method method);
Method parse_method(std::string_view name);

enum class StandardiseOn { train, test, all };

std::string to_string(StandardiseOn mode);
StandardiseOn parse_standardise_on(std::string_view name);

/// Instrumentation hook: invoked with a stage label and the row indices a
/// fit-type call is about to consume. May run on worker threads when
/// threads > 1; pass threads = 1 if the hook keeps unsynchronised state.
using AuditHook = std::function<void(std::string_view stage, std::span<const int> rows)>;

struct CvOptions {
    int k_max = 30;
    std::vector<double> c_grid;  // lasso scan axis; empty means default_c_grid()
    AnnealConfig anneal;         // seed and threads fields are overridden per cell
    StandardiseOn standardise_on = StandardiseOn::train;
    int threads = 1;
    AuditHook audit_hook;
};

inline constexpr int kFoldCount = 5;

struct CvCell {
    double validation_auc = 0.5;
    int support_size = 0;
    bool failed = false;  // the selector threw; the 0.5 above is a placeholder
};

/// Validation scan over the method's axis: subset sizes 1..k_max for
/// sa-fdr and rfe, the C grid for lasso.
struct CvScan {
    Method method = Method::sa_fdr;
    std::vector<double> axis;
    std::vector<std::array<CvCell, kFoldCount>> cells;  // indexed [axis][fold]
    std::vector<double> mean_auc;
    std::vector<double> std_auc;  // population std across the five folds
    int selected_index = -1;      // into axis
    double k_star = 0.0;          // lasso reports the mean fold support size at C*
    double selected_c = 0.0;      // lasso only
    SplitPlan split;
};

struct BenchmarkRow {
    Method method = Method::sa_fdr;
    std::uint64_t seed = 0;  // repetition seed, shared across methods
    double k_star = 0.0;
    double selected_c = 0.0;  // lasso only
    double test_auc = 0.0;
    double seconds_per_fold = 0.0;
};

struct CvRunResult {
    CvScan scan;
    BenchmarkRow row;
    FeatureSubset final_subset;  // refit target on the full train split
};

/// One-standard-deviation rule on a completed scan: take the axis index of
/// the best mean AUC (ties toward the sparser end, i.e. the smaller
/// index), subtract that index's fold std, and return the smallest index
/// whose mean still clears the threshold.
int select_axis_index(std::span<const double> means, std::span<const double> stds);

/// select_axis_index applied to a k scan; returns the chosen subset size.
int select_k_star(const CvScan& scan);

/// Full validation protocol for one repetition: stratified 80:20 split,
/// standardise, scan the method's axis over the five folds, pick the
/// operating point by the one-std rule, refit on the whole train split and
/// evaluate on test. Deterministic for fixed (data, method, seed) at any
/// thread count.
CvRunResult run_cv(const Dataset& data, Method method, std::uint64_t seed,
                   const CvOptions& opts);

struct BenchmarkReport {
    std::uint64_t master_seed = 0;
    int repetitions = 0;
    std::vector<BenchmarkRow> rows;  // repetition-major, then method order
    std::vector<CvScan> scans;       // aligned with rows
    struct Aggregate {
        Method method = Method::sa_fdr;
        double mean_k_star = 0.0;
        double mean_test_auc = 0.0;
        double mean_seconds_per_fold = 0.0;
    };
    std::vector<Aggregate> aggregates;  // one per requested method
};

/// Repeats run_cv with derived per-repetition seeds. Every method sees the
/// same repetition seed, so the split plans are paired.
BenchmarkReport run_benchmark(const Dataset& data, std::span<const Method> methods,
                              int repetitions, std::uint64_t seed, const CvOptions& opts);

}  // namespace safdr
