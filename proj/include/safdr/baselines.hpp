#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "safdr/dataset.hpp"
#include "safdr/stats.hpp"

namespace safdr {

/// Greedy backward elimination on logistic coefficient magnitudes.
/// elimination_order lists features first-eliminated first and is a
/// permutation of [0, K); the k-subsets it induces are nested.
struct RfeResult {
    std::vector<int> elimination_order;

    /// The last k survivors, sorted.
    FeatureSubset subset_for(int k) const;
};

/// Repeatedly fits the full logistic model and drops the feature with the
/// smallest absolute coefficient (ties to the lower index). Features are
/// assumed standardised so magnitudes are comparable.
RfeResult rfe(const Dataset& data, std::span<const int> rows);

struct L1PathPoint {
    double c = 0.0;  // inverse regularisation strength
    double intercept = 0.0;
    Eigen::VectorXd coefficients;  // length K
    FeatureSubset support;         // |beta_j| > 1e-8
    bool converged = false;
    int iterations = 0;
    double validation_auc = -1.0;  // filled by callers holding a validation set
};

struct L1PathResult {
    std::vector<double> c_grid;
    std::vector<L1PathPoint> points;
};

/// Minimises cross-entropy + (1/C) * sum |beta_j| (intercept unpenalised)
/// by proximal gradient with backtracking, warm-starting along the
/// ascending grid. KKT residual at exit <= 1e-6 unless the 2000-iteration
/// cap hits first.
L1PathResult l1_path(const Dataset& data, std::span<const int> rows,
                     std::span<const double> c_grid);

/// 30 logarithmic points from 1e-3 to 1e3.
std::vector<double> default_c_grid();

double soft_threshold(double x, double threshold);

namespace l1_detail {

/// Max-norm KKT residual of the penalised objective at beta.
double kkt_residual(const Eigen::MatrixXd& design, const std::vector<int>& labels,
                    const Eigen::VectorXd& beta, double c);

double kkt_residual_from_gradient(const Eigen::VectorXd& grad, const Eigen::VectorXd& beta,
                                  double c);

}  // namespace l1_detail

}  // namespace safdr
