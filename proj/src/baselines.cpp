#include "safdr/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "safdr/errors.hpp"
#include "safdr/logistic.hpp"

namespace safdr {

namespace {

constexpr double kSupportTol = 1e-8;
constexpr double kKktTol = 1e-6;
constexpr int kMaxProxIterations = 2000;

}  // namespace

FeatureSubset RfeResult::subset_for(int k) const {
    const int total = static_cast<int>(elimination_order.size());
    if (k < 1 || k > total) throw ValidationError("subset_for: k out of range");
    std::vector<int> survivors(elimination_order.end() - k, elimination_order.end());
    return FeatureSubset(std::move(survivors));
}

RfeResult rfe(const Dataset& data, std::span<const int> rows) {
    const int total = data.features();
    std::vector<int> remaining(static_cast<std::size_t>(total));
    for (int j = 0; j < total; ++j) remaining[static_cast<std::size_t>(j)] = j;

    RfeResult result;
    result.elimination_order.reserve(static_cast<std::size_t>(total));
    while (remaining.size() > 1) {
        const LogisticModel model = fit_logistic(data, rows, FeatureSubset(remaining));
        int weakest = 0;
        for (int j = 1; j < static_cast<int>(remaining.size()); ++j) {
            if (std::abs(model.coefficients[j]) < std::abs(model.coefficients[weakest])) {
                weakest = j;  // strict comparison keeps the lower index on ties
            }
        }
        result.elimination_order.push_back(remaining[static_cast<std::size_t>(weakest)]);
        remaining.erase(remaining.begin() + weakest);
    }
    result.elimination_order.push_back(remaining.front());
    return result;
}

double soft_threshold(double x, double threshold) {
    if (x > threshold) return x - threshold;
    if (x < -threshold) return x + threshold;
    return 0.0;
}

namespace l1_detail {

double kkt_residual_from_gradient(const Eigen::VectorXd& grad, const Eigen::VectorXd& beta,
                                  double c) {
    const double lambda = 1.0 / c;
    double worst = std::abs(grad[0]);  // intercept is unpenalised
    for (Eigen::Index j = 1; j < beta.size(); ++j) {
        double r = 0.0;
        if (beta[j] > kSupportTol) {
            r = std::abs(grad[j] + lambda);
        } else if (beta[j] < -kSupportTol) {
            r = std::abs(grad[j] - lambda);
        } else {
            r = std::max(0.0, std::abs(grad[j]) - lambda);
        }
        worst = std::max(worst, r);
    }
    return worst;
}

double kkt_residual(const Eigen::MatrixXd& design, const std::vector<int>& labels,
                    const Eigen::VectorXd& beta, double c) {
    Eigen::VectorXd grad;
    logistic_detail::value_and_gradient(design, labels, beta, &grad);
    return kkt_residual_from_gradient(grad, beta, c);
}

}  // namespace l1_detail

namespace {

// Largest eigenvalue of design' * design by power iteration, padded so it
// upper-bounds the true value for step-size purposes.
double gram_spectral_bound(const Eigen::MatrixXd& design) {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(design.cols()).normalized();
    double estimate = 0.0;
    for (int i = 0; i < 30; ++i) {
        Eigen::VectorXd w = design.transpose() * (design * v);
        estimate = w.norm();
        if (estimate <= 0.0) break;
        v = w / estimate;
    }
    return 1.05 * std::max(estimate, 1e-12);
}

// FISTA with function-value restart, warm started from `beta`. The step
// comes from the logistic curvature bound Hessian <= design'*design / 4;
// backtracking below is a safety net only.
void l1_fit(const Eigen::MatrixXd& design, const std::vector<int>& labels, double c,
            double spectral_bound, Eigen::VectorXd* beta, bool* converged, int* iterations) {
    const double lambda = 1.0 / c;
    const auto d = design.cols();

    double step = 4.0 / spectral_bound;
    Eigen::VectorXd x = *beta;
    Eigen::VectorXd z = x;
    Eigen::VectorXd grad(d), trial(d);
    double momentum = 1.0;
    double objective_x = logistic_detail::value_and_gradient(design, labels, x, nullptr) +
                         lambda * x.tail(d - 1).lpNorm<1>();

    *converged = false;
    int iter = 0;
    for (; iter < kMaxProxIterations; ++iter) {
        // Check the current iterate first so a converged warm start (or a
        // restart that keeps landing on the optimum) exits immediately.
        if (iter % 5 == 0) {
            Eigen::VectorXd grad_x;
            logistic_detail::value_and_gradient(design, labels, x, &grad_x);
            if (l1_detail::kkt_residual_from_gradient(grad_x, x, c) <= kKktTol) {
                *converged = true;
                break;
            }
        }

        const double value_z = logistic_detail::value_and_gradient(design, labels, z, &grad);

        double trial_value = 0.0;
        while (true) {
            trial[0] = z[0] - step * grad[0];
            for (Eigen::Index j = 1; j < d; ++j) {
                trial[j] = soft_threshold(z[j] - step * grad[j], step * lambda);
            }
            trial_value = logistic_detail::value_and_gradient(design, labels, trial, nullptr);
            const Eigen::VectorXd diff = trial - z;
            const double bound = value_z + grad.dot(diff) + diff.squaredNorm() / (2.0 * step);
            if (trial_value <= bound + 1e-12 * std::abs(bound) || step < 1e-18) break;
            step *= 0.5;
        }

        const double objective_trial = trial_value + lambda * trial.tail(d - 1).lpNorm<1>();
        if (objective_trial > objective_x && momentum > 1.0) {
            // Momentum overshot; restart from the last good iterate. A
            // plain step (momentum 1) is majoriser-bounded and is always
            // taken, so the restart cannot loop without progress.
            z = x;
            momentum = 1.0;
            continue;
        }

        const double momentum_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        z = trial + ((momentum - 1.0) / momentum_next) * (trial - x);
        x.swap(trial);
        objective_x = objective_trial;
        momentum = momentum_next;
    }
    *iterations = iter;
    *beta = x;
}

}  // namespace

std::vector<double> default_c_grid() {
    std::vector<double> grid(30);
    for (int i = 0; i < 30; ++i) {
        grid[static_cast<std::size_t>(i)] =
            std::pow(10.0, -3.0 + 6.0 * static_cast<double>(i) / 29.0);
    }
    return grid;
}

L1PathResult l1_path(const Dataset& data, std::span<const int> rows,
                     std::span<const double> c_grid) {
    if (c_grid.empty()) throw ValidationError("empty C grid");
    for (std::size_t i = 0; i < c_grid.size(); ++i) {
        if (!(c_grid[i] > 0.0)) throw ValidationError("C values must be positive");
        if (i > 0 && c_grid[i] <= c_grid[i - 1]) {
            throw ValidationError("C grid must be strictly increasing");
        }
    }

    const FeatureSubset all = FeatureSubset::full(data.features());
    const Eigen::MatrixXd design = logistic_detail::build_design(data, rows, all);
    std::vector<int> labels;
    labels.reserve(rows.size());
    for (int r : rows) labels.push_back(data.labels[static_cast<std::size_t>(r)]);

    L1PathResult result;
    result.c_grid.assign(c_grid.begin(), c_grid.end());
    result.points.reserve(c_grid.size());

    const double spectral_bound = gram_spectral_bound(design);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(design.cols());
    for (double c : c_grid) {
        L1PathPoint point;
        point.c = c;
        l1_fit(design, labels, c, spectral_bound, &beta, &point.converged, &point.iterations);
        point.intercept = beta[0];
        point.coefficients = beta.tail(design.cols() - 1);
        std::vector<int> support;
        for (Eigen::Index j = 0; j < point.coefficients.size(); ++j) {
            if (std::abs(point.coefficients[j]) > kSupportTol) {
                support.push_back(static_cast<int>(j));
            }
        }
        point.support = FeatureSubset(std::move(support));
        result.points.push_back(std::move(point));
    }
    return result;
}

}  // namespace safdr
