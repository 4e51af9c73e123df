#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "safdr/dataset.hpp"

namespace safdr {

/// Sorted, duplicate-free feature indices. Size zero is allowed to
/// represent an intercept-only model; the discriminant operations below
/// require at least one feature.
class FeatureSubset {
public:
    FeatureSubset() = default;
    explicit FeatureSubset(std::vector<int> indices);

    static FeatureSubset full(int n_features);

    const std::vector<int>& indices() const { return indices_; }
    int size() const { return static_cast<int>(indices_.size()); }
    bool empty() const { return indices_.empty(); }
    bool contains(int feature) const;

    bool operator==(const FeatureSubset& other) const = default;
    bool operator<(const FeatureSubset& other) const { return indices_ < other.indices_; }

private:
    std::vector<int> indices_;
};

/// Class means and within-class scatter of one row set (one batch).
/// sw = Sigma_0 + Sigma_1 with population covariances; the between-class
/// scatter is the rank-1 outer product of (mu1 - mu0) and is kept implicit.
struct ScatterSet {
    Eigen::VectorXd mu0;
    Eigen::VectorXd mu1;
    Eigen::MatrixXd sw;
    int batch_id = 0;
    int n0 = 0;
    int n1 = 0;

    Eigen::VectorXd mean_gap() const { return mu1 - mu0; }
};

ScatterSet compute_scatter(const Dataset& data, std::span<const int> row_idx);

/// Partitions rows into stratified random batches and computes one
/// ScatterSet per batch. Deterministic for a fixed seed; each batch keeps
/// at least two samples per class or the call fails.
std::vector<ScatterSet> make_batches(const Dataset& data, std::span<const int> row_idx,
                                     int n_batches, std::uint64_t seed);

/// Reusable workspace for discriminant-ratio solves at a fixed subset
/// size. Extracts the subset submatrix of sw, factorises it (Cholesky),
/// and solves against the mean gap. A ridge of 1e-8 * trace/k is added
/// only if the plain factorisation fails.
class FdrSolver {
public:
    explicit FdrSolver(int max_subset_size);

    /// nullopt when the submatrix is numerically singular even after ridge.
    std::optional<double> try_fdr(const ScatterSet& scatter, std::span<const int> subset);

    /// Singular submatrices count as 0 (annealer policy).
    double fdr_or_zero(const ScatterSet& scatter, std::span<const int> subset);

    std::optional<Eigen::VectorXd> try_direction(const ScatterSet& scatter,
                                                 std::span<const int> subset);

private:
    bool factorise(const ScatterSet& scatter, std::span<const int> subset);

    Eigen::MatrixXd submatrix_;
    Eigen::VectorXd gap_;
    Eigen::VectorXd solution_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// Maximised Fisher discriminant ratio of the subset:
/// gap' * (sw|subset)^-1 * gap. Always >= 0. Throws NumericalError when
/// the subset scatter is singular even after ridge.
double fdr(const ScatterSet& scatter, const FeatureSubset& subset);

/// Unit-norm direction w solving (sw|subset) w = gap; the Rayleigh
/// quotient at w equals fdr(scatter, subset).
Eigen::VectorXd fisher_direction(const ScatterSet& scatter, const FeatureSubset& subset);

}  // namespace safdr
