#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "safdr/errors.hpp"
#include "safdr/logistic.hpp"
#include "safdr/rng.hpp"
#include "test_support.hpp"

using namespace safdr;

namespace {

std::vector<int> iota_rows(int n) {
    std::vector<int> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), 0);
    return rows;
}

Dataset one_feature(const std::vector<double>& x, const std::vector<int>& y) {
    Eigen::MatrixXd samples(static_cast<Eigen::Index>(x.size()), 1);
    for (std::size_t i = 0; i < x.size(); ++i) samples(static_cast<Eigen::Index>(i), 0) = x[i];
    return make_dataset(std::move(samples), y, {"x"});
}

// O(n^2) Mann-Whitney count, the independent oracle for auc().
double pairwise_auc(const ScoredPredictions& preds) {
    double wins = 0.0;
    long pairs = 0;
    for (Eigen::Index i = 0; i < preds.probabilities.size(); ++i) {
        if (preds.labels[static_cast<std::size_t>(i)] != 1) continue;
        for (Eigen::Index j = 0; j < preds.probabilities.size(); ++j) {
            if (preds.labels[static_cast<std::size_t>(j)] != 0) continue;
            ++pairs;
            if (preds.probabilities[i] > preds.probabilities[j]) wins += 1.0;
            else if (preds.probabilities[i] == preds.probabilities[j]) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

// Trapezoidal ROC area over the thresholds induced by the scores.
double trapezoid_auc(const ScoredPredictions& preds) {
    std::vector<double> cuts(preds.probabilities.data(),
                             preds.probabilities.data() + preds.probabilities.size());
    std::sort(cuts.begin(), cuts.end(), std::greater<>());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    const double n1 = static_cast<double>(std::count(preds.labels.begin(), preds.labels.end(), 1));
    const double n0 = static_cast<double>(preds.labels.size()) - n1;
    double area = 0.0;
    double prev_fpr = 0.0;
    double prev_tpr = 0.0;
    for (double cut : cuts) {
        double tp = 0.0;
        double fp = 0.0;
        for (Eigen::Index i = 0; i < preds.probabilities.size(); ++i) {
            if (preds.probabilities[i] < cut) continue;
            if (preds.labels[static_cast<std::size_t>(i)] == 1) tp += 1.0;
            else fp += 1.0;
        }
        const double tpr = tp / n1;
        const double fpr = fp / n0;
        area += 0.5 * (fpr - prev_fpr) * (tpr + prev_tpr);
        prev_fpr = fpr;
        prev_tpr = tpr;
    }
    area += 0.5 * (1.0 - prev_fpr) * (1.0 + prev_tpr);
    return area;
}

ScoredPredictions preds_from(const std::vector<double>& scores, const std::vector<int>& labels) {
    ScoredPredictions p;
    p.probabilities = Eigen::Map<const Eigen::VectorXd>(scores.data(),
                                                        static_cast<Eigen::Index>(scores.size()));
    p.labels = labels;
    return p;
}

}  // namespace

TEST_CASE("symmetric data has the zero vector as optimum") {
    // x = -1 and x = +1 each see one label of every class, so any nonzero
    // coefficient only raises the loss; at beta = 0 every p is 1/2.
    const auto data = one_feature({-1.0, 1.0, -1.0, 1.0}, {0, 1, 1, 0});
    const auto rows = iota_rows(4);
    const auto model = fit_logistic(data, rows, FeatureSubset{{0}});

    CHECK(model.converged);
    CHECK(std::abs(model.intercept) < 1e-6);
    CHECK(std::abs(model.coefficients[0]) < 1e-6);
    CHECK(model.final_cross_entropy == doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-10));
    CHECK(mean_cross_entropy(model, data, rows) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-10));
}

TEST_CASE("intercept-only fit on balanced labels lands at log 2") {
    const auto data = one_feature({3.0, -2.0, 5.0, 0.5}, {0, 1, 1, 0});
    const auto rows = iota_rows(4);
    const auto model = fit_logistic(data, rows, FeatureSubset{});

    CHECK(model.converged);
    CHECK(model.coefficients.size() == 0);
    CHECK(std::abs(model.intercept) < 1e-6);
    CHECK(model.final_cross_entropy == doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-10));
}

TEST_CASE("intercept-only fit matches the log-odds of the class balance") {
    // Two positives among six: the optimum intercept is the empirical
    // log-odds log(1/2) and the summed loss is the entropy of that rate.
    const auto data = one_feature({1.0, 1.0, 1.0, 1.0, 1.0, 1.0}, {0, 0, 0, 0, 1, 1});
    const auto rows = iota_rows(6);
    const auto model = fit_logistic(data, rows, FeatureSubset{});

    CHECK(model.converged);
    CHECK(model.intercept == doctest::Approx(std::log(0.5)).epsilon(1e-6));
    const double expected = -(4.0 * std::log(2.0 / 3.0) + 2.0 * std::log(1.0 / 3.0));
    CHECK(model.final_cross_entropy == doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("hand-built model evaluates the frozen probability and loss") {
    const auto data = one_feature({5.0, -5.0, 0.0, 0.0}, {0, 0, 1, 1});
    LogisticModel model;
    model.intercept = std::log(1.0 / 3.0);
    model.coefficients = Eigen::VectorXd::Zero(1);
    model.subset = FeatureSubset{{0}};

    // Evaluated on the single x = 0, y = 1 row: p = 1/4 and loss log 4.
    const std::vector<int> rows = {2};
    const auto p = predict_proba(model, data, rows);
    CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(cross_entropy(model, data, rows) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("final_cross_entropy is bit-identical to a cross_entropy call") {
    const auto data = test::gaussian_classes(40, 3, {0}, 1.5, 91u);
    const auto rows = test::all_rows(data);
    const auto model = fit_logistic(data, rows, FeatureSubset{{0, 2}});
    CHECK(model.final_cross_entropy == cross_entropy(model, data, rows));
    CHECK(mean_cross_entropy(model, data, rows) ==
          model.final_cross_entropy / static_cast<double>(rows.size()));
}

TEST_CASE("auc matches the frozen midrank example") {
    // class 1 scores {0.4, 0.8} vs class 0 scores {0.1, 0.4}: three clear
    // wins and one tie -> 3.5 / 4.
    const auto preds = preds_from({0.1, 0.4, 0.4, 0.8}, {0, 0, 1, 1});
    CHECK(auc(preds) == doctest::Approx(0.875).epsilon(1e-14));
}

TEST_CASE("auc equals the pairwise count and the trapezoidal ROC area") {
    Rng rng(2024u);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 8 + static_cast<int>(rng.next_u64() % 40u);
        std::vector<double> scores;
        std::vector<int> labels;
        int ones = 0;
        for (int i = 0; i < n; ++i) {
            // Coarse grid so ties actually occur.
            scores.push_back(std::floor(rng.uniform() * 8.0) / 8.0);
            const int y = rng.uniform() < 0.5 ? 0 : 1;
            ones += y;
            labels.push_back(y);
        }
        if (ones == 0 || ones == n) continue;
        const auto preds = preds_from(scores, labels);
        const double fast = auc(preds);
        CHECK(fast == doctest::Approx(pairwise_auc(preds)).epsilon(1e-12));
        CHECK(fast == doctest::Approx(trapezoid_auc(preds)).epsilon(1e-12));
    }
}

TEST_CASE("auc is invariant under strictly increasing transforms") {
    const std::vector<int> labels = {0, 1, 0, 1, 1, 0, 1, 0, 0, 1};
    std::vector<double> scores = {0.1, 0.7, 0.3, 0.3, 0.9, 0.2, 0.5, 0.5, 0.4, 0.6};
    const double base = auc(preds_from(scores, labels));

    std::vector<double> affine(scores.size());
    std::vector<double> curved(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        affine[i] = 3.0 * scores[i] - 7.0;
        curved[i] = std::atan(scores[i]);
    }
    CHECK(auc(preds_from(affine, labels)) == base);
    CHECK(auc(preds_from(curved, labels)) == base);
}

TEST_CASE("auc requires both classes") {
    CHECK_THROWS_AS(auc(preds_from({0.2, 0.4}, {1, 1})), ValidationError);
    CHECK_THROWS_AS(auc(preds_from({0.2, 0.4}, {0, 0})), ValidationError);
}

TEST_CASE("analytic gradient matches central finite differences") {
    Rng rng(555u);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 12 + static_cast<int>(rng.next_u64() % 20u);
        const int k = 1 + static_cast<int>(rng.next_u64() % 4u);
        Eigen::MatrixXd design(n, k + 1);
        std::vector<int> labels;
        for (int i = 0; i < n; ++i) {
            design(i, 0) = 1.0;
            for (int j = 1; j <= k; ++j) design(i, j) = test::normal(rng);
            labels.push_back(rng.uniform() < 0.5 ? 0 : 1);
        }
        Eigen::VectorXd beta(k + 1);
        for (int j = 0; j <= k; ++j) beta[j] = 0.8 * test::normal(rng);

        Eigen::VectorXd grad;
        logistic_detail::value_and_gradient(design, labels, beta, &grad);

        const double h = 1e-5;
        double max_abs = grad.cwiseAbs().maxCoeff();
        for (int j = 0; j <= k; ++j) {
            Eigen::VectorXd up = beta;
            Eigen::VectorXd down = beta;
            up[j] += h;
            down[j] -= h;
            const double fu = logistic_detail::value_and_gradient(design, labels, up, nullptr);
            const double fd = logistic_detail::value_and_gradient(design, labels, down, nullptr);
            const double numeric = (fu - fd) / (2.0 * h);
            CHECK(std::abs(numeric - grad[j]) <= 1e-6 * std::max(1.0, max_abs));
        }
    }
}

TEST_CASE("fitted coefficients sit at a local minimum of the loss") {
    const auto data = test::gaussian_classes(100, 2, {0}, 1.0, 7u);
    const auto rows = test::all_rows(data);
    const FeatureSubset subset{{0, 1}};
    const auto model = fit_logistic(data, rows, subset);
    REQUIRE(model.converged);

    const auto design = logistic_detail::build_design(data, rows, subset);
    std::vector<int> labels;
    for (int r : rows) labels.push_back(data.labels[static_cast<std::size_t>(r)]);
    Eigen::VectorXd beta(3);
    beta << model.intercept, model.coefficients[0], model.coefficients[1];
    const double at_opt = logistic_detail::value_and_gradient(design, labels, beta, nullptr);

    // Coordinate perturbations must not find a lower loss (up to the
    // tolerance implied by the 1e-6 gradient stop).
    for (int j = 0; j < 3; ++j) {
        for (double step : {1e-3, -1e-3}) {
            Eigen::VectorXd moved = beta;
            moved[j] += step;
            const double value = logistic_detail::value_and_gradient(design, labels, moved, nullptr);
            CHECK(value >= at_opt - 1e-6);
        }
    }
}

TEST_CASE("fit recovers planted coefficients on well-posed data") {
    // Logistic data generated from a known linear model; with n = 4000 the
    // MLE should land within a few standard errors.
    Rng rng(31337u);
    const int n = 4000;
    Eigen::MatrixXd samples(n, 2);
    std::vector<int> labels;
    const double b0 = -0.4;
    const double b1 = 1.2;
    const double b2 = -0.7;
    for (int i = 0; i < n; ++i) {
        samples(i, 0) = test::normal(rng);
        samples(i, 1) = test::normal(rng);
        const double z = b0 + b1 * samples(i, 0) + b2 * samples(i, 1);
        const double p = 1.0 / (1.0 + std::exp(-z));
        labels.push_back(rng.uniform() < p ? 1 : 0);
    }
    const auto data = make_dataset(std::move(samples), std::move(labels), {"a", "b"});
    const auto rows = test::all_rows(data);
    const auto model = fit_logistic(data, rows, FeatureSubset{{0, 1}});

    REQUIRE(model.converged);
    CHECK(model.intercept == doctest::Approx(b0).epsilon(0.25));
    CHECK(model.coefficients[0] == doctest::Approx(b1).epsilon(0.15));
    CHECK(model.coefficients[1] == doctest::Approx(b2).epsilon(0.25));
    CHECK(model.iterations <= 500);
}

TEST_CASE("separable data drives the loss toward zero without blowing up") {
    const auto data = one_feature({-3.0, -2.0, -1.0, 1.0, 2.0, 3.0}, {0, 0, 0, 1, 1, 1});
    const auto rows = iota_rows(6);
    const auto model = fit_logistic(data, rows, FeatureSubset{{0}});

    // No finite optimum exists; the fit stops at the iteration cap with a
    // small loss and finite, clamp-protected probabilities.
    CHECK(model.final_cross_entropy < 0.2);
    CHECK(std::isfinite(model.final_cross_entropy));
    const auto p = predict_proba(model, data, rows);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        CHECK(p[i] >= 0.0);
        CHECK(p[i] <= 1.0);
        CHECK(std::isfinite(p[i]));
    }
    const double big = cross_entropy(model, data, rows);
    CHECK(std::isfinite(big));
}

TEST_CASE("predict_proba keeps extreme scores inside the open unit interval") {
    const auto data = one_feature({1000.0, 500.0, -1000.0, -500.0}, {1, 1, 0, 0});
    LogisticModel model;
    model.intercept = 0.0;
    model.coefficients = Eigen::VectorXd::Constant(1, 50.0);
    model.subset = FeatureSubset{{0}};
    const auto rows = iota_rows(4);

    // The loss stays finite because of the clamp even when sigma saturates.
    CHECK(std::isfinite(cross_entropy(model, data, rows)));
    const double worst = -4.0 * std::log(1e-12);
    LogisticModel wrong = model;
    wrong.coefficients[0] = -50.0;  // confidently wrong on every row
    CHECK(cross_entropy(wrong, data, rows) <= worst + 1e-6);
}

TEST_CASE("score pairs probabilities with the fold labels in row order") {
    const auto data = test::gaussian_classes(15, 2, {1}, 2.0, 11u);
    const auto rows = test::all_rows(data);
    const auto model = fit_logistic(data, rows, FeatureSubset{{1}});
    const auto scored = score(model, data, rows);

    REQUIRE(scored.labels.size() == rows.size());
    REQUIRE(scored.probabilities.size() == static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(scored.labels[i] == data.labels[static_cast<std::size_t>(rows[i])]);
    }
    const auto direct = predict_proba(model, data, rows);
    CHECK((scored.probabilities - direct).cwiseAbs().maxCoeff() == 0.0);
    CHECK(auc(scored) > 0.85);
}

TEST_CASE("fit is deterministic") {
    const auto data = test::gaussian_classes(60, 4, {0, 2}, 1.0, 17u);
    const auto rows = test::all_rows(data);
    const auto a = fit_logistic(data, rows, FeatureSubset{{0, 2, 3}});
    const auto b = fit_logistic(data, rows, FeatureSubset{{0, 2, 3}});
    CHECK(a.intercept == b.intercept);
    CHECK((a.coefficients - b.coefficients).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.final_cross_entropy == b.final_cross_entropy);
    CHECK(a.iterations == b.iterations);
}
