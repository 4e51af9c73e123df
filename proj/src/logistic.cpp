#include "safdr/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "safdr/errors.hpp"

namespace safdr {

namespace {

constexpr double kGradientTol = 1e-6;
constexpr int kMaxIterations = 500;
constexpr double kProbClamp = 1e-12;
constexpr double kArmijo = 1e-4;

double log1p_exp(double z) {
    // log(1 + e^z) without overflow.
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

}  // namespace

namespace logistic_detail {

Eigen::MatrixXd build_design(const Dataset& data, std::span<const int> rows,
                             const FeatureSubset& subset) {
    for (int f : subset.indices()) {
        if (f >= data.features()) throw ValidationError("subset index out of range");
    }
    const auto m = static_cast<Eigen::Index>(rows.size());
    const auto k = static_cast<Eigen::Index>(subset.size());
    Eigen::MatrixXd design(m, k + 1);
    design.col(0).setOnes();
    for (Eigen::Index i = 0; i < m; ++i) {
        const int r = rows[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < k; ++j) {
            design(i, j + 1) = data.samples(r, subset.indices()[static_cast<std::size_t>(j)]);
        }
    }
    return design;
}

double value_and_gradient(const Eigen::MatrixXd& design, const std::vector<int>& labels,
                          const Eigen::VectorXd& beta, Eigen::VectorXd* gradient) {
    const auto m = design.rows();
    const Eigen::VectorXd z = design * beta;

    const double floor_log = std::log(kProbClamp);
    const double ceil_log = std::log1p(-kProbClamp);
    double value = 0.0;
    Eigen::VectorXd residual(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double log_p1 = std::clamp(-log1p_exp(-z[i]), floor_log, ceil_log);
        const double log_p0 = std::clamp(-log1p_exp(z[i]), floor_log, ceil_log);
        const int y = labels[static_cast<std::size_t>(i)];
        value -= y == 1 ? log_p1 : log_p0;
        residual[i] = 1.0 / (1.0 + std::exp(-z[i])) - static_cast<double>(y);
    }
    if (gradient != nullptr) *gradient = design.transpose() * residual;
    return value;
}

}  // namespace logistic_detail

LogisticModel fit_logistic(const Dataset& data, std::span<const int> rows,
                           const FeatureSubset& subset) {
    bool has0 = false;
    bool has1 = false;
    std::vector<int> y;
    y.reserve(rows.size());
    for (int r : rows) {
        const int label = data.labels[static_cast<std::size_t>(r)];
        (label == 0 ? has0 : has1) = true;
        y.push_back(label);
    }
    if (!has0 || !has1) throw ValidationError("logistic fit needs both classes present");

    const Eigen::MatrixXd design = logistic_detail::build_design(data, rows, subset);
    const auto d = design.cols();

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd grad(d);
    double value = logistic_detail::value_and_gradient(design, y, beta, &grad);

    Eigen::MatrixXd inv_hessian = Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd direction(d), beta_next(d), grad_next(d), step(d), grad_delta(d);

    LogisticModel model;
    int iter = 0;
    for (; iter < kMaxIterations; ++iter) {
        if (grad.lpNorm<Eigen::Infinity>() <= kGradientTol) {
            model.converged = true;
            break;
        }

        direction = -(inv_hessian * grad);
        double slope = grad.dot(direction);
        if (slope >= 0.0) {  // curvature information went bad; fall back to steepest descent
            inv_hessian.setIdentity();
            direction = -grad;
            slope = grad.dot(direction);
        }

        double alpha = 1.0;
        double value_next = 0.0;
        bool stepped = false;
        while (alpha >= 1e-20) {
            beta_next = beta + alpha * direction;
            value_next = logistic_detail::value_and_gradient(design, y, beta_next, &grad_next);
            if (value_next <= value + kArmijo * alpha * slope) {
                stepped = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!stepped) break;  // line search exhausted; gradient too flat to make progress

        step = beta_next - beta;
        grad_delta = grad_next - grad;
        const double curvature = step.dot(grad_delta);
        if (curvature > 1e-12 * step.norm() * grad_delta.norm()) {
            const double rho = 1.0 / curvature;
            const Eigen::VectorXd hy = inv_hessian * grad_delta;
            const double yhy = grad_delta.dot(hy);
            inv_hessian += (rho * rho * yhy + rho) * (step * step.transpose()) -
                           rho * (hy * step.transpose() + step * hy.transpose());
        }

        beta.swap(beta_next);
        grad.swap(grad_next);
        value = value_next;
    }

    model.intercept = beta[0];
    model.coefficients = beta.tail(d - 1);
    model.subset = subset;
    model.iterations = iter;
    model.final_cross_entropy = logistic_detail::value_and_gradient(design, y, beta, nullptr);
    return model;
}

double cross_entropy(const LogisticModel& model, const Dataset& data, std::span<const int> rows) {
    const Eigen::MatrixXd design = logistic_detail::build_design(data, rows, model.subset);
    std::vector<int> y;
    y.reserve(rows.size());
    for (int r : rows) y.push_back(data.labels[static_cast<std::size_t>(r)]);
    Eigen::VectorXd beta(design.cols());
    beta[0] = model.intercept;
    beta.tail(design.cols() - 1) = model.coefficients;
    return logistic_detail::value_and_gradient(design, y, beta, nullptr);
}

double mean_cross_entropy(const LogisticModel& model, const Dataset& data,
                          std::span<const int> rows) {
    if (rows.empty()) throw ValidationError("mean cross-entropy over zero rows");
    return cross_entropy(model, data, rows) / static_cast<double>(rows.size());
}

Eigen::VectorXd predict_proba(const LogisticModel& model, const Dataset& data,
                              std::span<const int> rows) {
    const Eigen::MatrixXd design = logistic_detail::build_design(data, rows, model.subset);
    Eigen::VectorXd beta(design.cols());
    beta[0] = model.intercept;
    beta.tail(design.cols() - 1) = model.coefficients;
    Eigen::VectorXd p = design * beta;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        p[i] = std::clamp(1.0 / (1.0 + std::exp(-p[i])), kProbClamp, 1.0 - kProbClamp);
    }
    return p;
}

ScoredPredictions score(const LogisticModel& model, const Dataset& data,
                        std::span<const int> rows) {
    ScoredPredictions preds;
    preds.probabilities = predict_proba(model, data, rows);
    preds.labels.reserve(rows.size());
    for (int r : rows) preds.labels.push_back(data.labels[static_cast<std::size_t>(r)]);
    return preds;
}

double auc(const ScoredPredictions& preds) {
    const auto m = preds.probabilities.size();
    if (static_cast<std::size_t>(m) != preds.labels.size()) {
        throw ValidationError("scores and labels differ in length");
    }

    std::vector<int> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return preds.probabilities[a] < preds.probabilities[b];
    });

    // Rank-sum with midranks for ties.
    double rank_sum_pos = 0.0;
    std::size_t n1 = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() &&
               preds.probabilities[order[j + 1]] == preds.probabilities[order[i]]) {
            ++j;
        }
        const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) {
            if (preds.labels[static_cast<std::size_t>(order[t])] == 1) {
                rank_sum_pos += midrank;
                ++n1;
            }
        }
        i = j + 1;
    }
    const std::size_t n0 = order.size() - n1;
    if (n0 == 0 || n1 == 0) throw ValidationError("auc needs both classes present");
    const auto dn1 = static_cast<double>(n1);
    return (rank_sum_pos - dn1 * (dn1 + 1.0) / 2.0) / (dn1 * static_cast<double>(n0));
}

}  // namespace safdr
