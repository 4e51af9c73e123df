#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace safdr {

/// How the two raw target values were mapped onto {0, 1}.
struct LabelMapping {
    std::string class0;
    std::string class1;
};

/// Immutable tabular dataset: N samples by K real features plus a binary
/// label per sample. Construct through make_dataset or load_csv, which
/// enforce the invariants (finite values, unique feature names, at least
/// two samples per class).
struct Dataset {
    Eigen::MatrixXd samples;  // N x K
    std::vector<int> labels;  // values in {0, 1}
    std::vector<std::string> feature_names;
    LabelMapping label_mapping;
    int count_class0 = 0;
    int count_class1 = 0;

    int rows() const { return static_cast<int>(samples.rows()); }
    int features() const { return static_cast<int>(samples.cols()); }
};

Dataset make_dataset(Eigen::MatrixXd samples, std::vector<int> labels,
                     std::vector<std::string> feature_names, LabelMapping mapping = {});

/// Parses a comma-separated file with a header row. The target column must
/// hold exactly two distinct values; they are mapped to {0, 1} in
/// lexicographic order and the mapping is recorded on the Dataset. Rows
/// with missing or non-finite cells are dropped when drop_missing is set,
/// otherwise they are an error.
Dataset load_csv(const std::string& path, const std::string& target_column, bool drop_missing);

/// Per-feature affine normalisation fitted on a reference row set.
struct StandardisationParams {
    Eigen::VectorXd means;
    Eigen::VectorXd std_devs;              // 1.0 for constant features
    std::vector<bool> constant_features;   // sigma below resolution on the reference rows
};

/// Means and population standard deviations over the reference rows only.
StandardisationParams fit_standardiser(const Dataset& data, std::span<const int> reference_idx);

/// x -> (x - mean_j) / sigma_j applied to every row.
Dataset apply_standardiser(const Dataset& data, const StandardisationParams& params);

/// Inverse of apply_standardiser (affine bijection on non-constant features).
Dataset invert_standardiser(const Dataset& data, const StandardisationParams& params);

struct FoldPair {
    std::vector<int> train;
    std::vector<int> val;
};

/// An 80:20 stratified train/test split plus five independent stratified
/// 75:25 splits of the train rows.
struct SplitPlan {
    std::vector<int> train_idx;
    std::vector<int> test_idx;
    std::array<FoldPair, 5> folds;
    std::uint64_t seed = 0;
};

/// Deterministic for a fixed (data, seed); class proportions in every
/// partition match the full dataset within one sample per class.
SplitPlan stratified_split(const Dataset& data, std::uint64_t seed);

void save_split_plan(const SplitPlan& plan, const std::string& path);

/// Generic cleaning knob: greedily drops the later feature of any pair
/// whose absolute Pearson correlation exceeds the cutoff.
Dataset drop_correlated(const Dataset& data, double cutoff);

}  // namespace safdr
