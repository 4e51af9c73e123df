#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "safdr/dataset.hpp"
#include "safdr/stats.hpp"

namespace safdr {

/// Binary logistic model over a feature subset. Immutable after fit.
struct LogisticModel {
    double intercept = 0.0;
    Eigen::VectorXd coefficients;  // aligned with subset.indices()
    FeatureSubset subset;
    bool converged = false;
    int iterations = 0;
    double final_cross_entropy = 0.0;  // summed over the training rows
};

struct ScoredPredictions {
    Eigen::VectorXd probabilities;
    std::vector<int> labels;
};

/// Unpenalised cross-entropy minimisation by BFGS with backtracking line
/// search, from a zero start. Converged means the gradient max-norm
/// reached 1e-6 within 500 iterations; separable data typically stops at
/// the cap with a near-zero loss.
LogisticModel fit_logistic(const Dataset& data, std::span<const int> rows,
                           const FeatureSubset& subset);

/// Summed negative log-likelihood over the given rows. Probabilities are
/// clamped to [1e-12, 1 - 1e-12] inside the logs.
double cross_entropy(const LogisticModel& model, const Dataset& data, std::span<const int> rows);

/// Mean of the same quantity, reported separately so the two never get
/// conflated.
double mean_cross_entropy(const LogisticModel& model, const Dataset& data,
                          std::span<const int> rows);

Eigen::VectorXd predict_proba(const LogisticModel& model, const Dataset& data,
                              std::span<const int> rows);

ScoredPredictions score(const LogisticModel& model, const Dataset& data,
                        std::span<const int> rows);

/// Mann-Whitney statistic: the fraction of (class1, class0) pairs ranked
/// correctly, ties counted half. Equal to the trapezoidal ROC area.
double auc(const ScoredPredictions& preds);

namespace logistic_detail {

/// Clamped summed cross-entropy and (exact, unclamped) gradient at beta
/// for a design matrix whose first column is the intercept. Exposed for
/// the finite-difference checks.
double value_and_gradient(const Eigen::MatrixXd& design, const std::vector<int>& labels,
                          const Eigen::VectorXd& beta, Eigen::VectorXd* gradient);

Eigen::MatrixXd build_design(const Dataset& data, std::span<const int> rows,
                             const FeatureSubset& subset);

}  // namespace logistic_detail

}  // namespace safdr
