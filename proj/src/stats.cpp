#include "safdr/stats.hpp"

#include <algorithm>
#include <cmath>

#include "safdr/errors.hpp"
#include "safdr/rng.hpp"

namespace safdr {

namespace {

constexpr double kRidgeScale = 1e-8;

void validate_subset_indices(const std::vector<int>& indices) {
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] < 0) throw ValidationError("negative feature index in subset");
        if (i > 0 && indices[i] <= indices[i - 1]) {
            throw ValidationError("subset indices must be strictly increasing");
        }
    }
}

}  // namespace

FeatureSubset::FeatureSubset(std::vector<int> indices) : indices_(std::move(indices)) {
    if (!std::is_sorted(indices_.begin(), indices_.end())) {
        std::sort(indices_.begin(), indices_.end());
    }
    validate_subset_indices(indices_);
}

FeatureSubset FeatureSubset::full(int n_features) {
    std::vector<int> all(static_cast<std::size_t>(n_features));
    for (int j = 0; j < n_features; ++j) all[static_cast<std::size_t>(j)] = j;
    return FeatureSubset(std::move(all));
}

bool FeatureSubset::contains(int feature) const {
    return std::binary_search(indices_.begin(), indices_.end(), feature);
}

ScatterSet compute_scatter(const Dataset& data, std::span<const int> row_idx) {
    const int k = data.features();
    ScatterSet s;
    s.mu0 = Eigen::VectorXd::Zero(k);
    s.mu1 = Eigen::VectorXd::Zero(k);

    for (int r : row_idx) {
        if (data.labels[static_cast<std::size_t>(r)] == 0) {
            s.mu0 += data.samples.row(r).transpose();
            ++s.n0;
        } else {
            s.mu1 += data.samples.row(r).transpose();
            ++s.n1;
        }
    }
    if (s.n0 < 2 || s.n1 < 2) {
        throw ValidationError("scatter needs at least 2 samples per class (got " +
                              std::to_string(s.n0) + " and " + std::to_string(s.n1) + ")");
    }
    s.mu0 /= static_cast<double>(s.n0);
    s.mu1 /= static_cast<double>(s.n1);

    Eigen::MatrixXd c0(s.n0, k);
    Eigen::MatrixXd c1(s.n1, k);
    int i0 = 0;
    int i1 = 0;
    for (int r : row_idx) {
        if (data.labels[static_cast<std::size_t>(r)] == 0) {
            c0.row(i0++) = data.samples.row(r) - s.mu0.transpose();
        } else {
            c1.row(i1++) = data.samples.row(r) - s.mu1.transpose();
        }
    }

    // Population covariances, accumulated on the lower triangle and mirrored
    // so sw is symmetric to the bit.
    Eigen::MatrixXd sw = Eigen::MatrixXd::Zero(k, k);
    sw.selfadjointView<Eigen::Lower>().rankUpdate(c0.transpose(), 1.0 / static_cast<double>(s.n0));
    sw.selfadjointView<Eigen::Lower>().rankUpdate(c1.transpose(), 1.0 / static_cast<double>(s.n1));
    s.sw = sw.selfadjointView<Eigen::Lower>();
    return s;
}

std::vector<ScatterSet> make_batches(const Dataset& data, std::span<const int> row_idx,
                                     int n_batches, std::uint64_t seed) {
    if (n_batches < 1) throw ValidationError("n_batches must be >= 1");

    std::vector<std::vector<int>> pools(2);
    for (int r : row_idx) {
        pools[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(r)])].push_back(r);
    }
    for (const auto& pool : pools) {
        if (static_cast<int>(pool.size()) / n_batches < 2) {
            throw ValidationError("n_batches=" + std::to_string(n_batches) +
                                  " too large: a class with " + std::to_string(pool.size()) +
                                  " samples cannot keep 2 per batch");
        }
    }

    Rng rng(seed_combine(seed, 0xba7c4ULL));
    for (auto& pool : pools) rng.shuffle(pool);

    std::vector<std::vector<int>> batch_rows(static_cast<std::size_t>(n_batches));
    for (const auto& pool : pools) {
        for (std::size_t i = 0; i < pool.size(); ++i) {
            batch_rows[i % static_cast<std::size_t>(n_batches)].push_back(pool[i]);
        }
    }

    std::vector<ScatterSet> batches;
    batches.reserve(static_cast<std::size_t>(n_batches));
    for (int b = 0; b < n_batches; ++b) {
        auto& rows = batch_rows[static_cast<std::size_t>(b)];
        std::sort(rows.begin(), rows.end());  // canonical summation order
        ScatterSet s = compute_scatter(data, rows);
        s.batch_id = b;
        batches.push_back(std::move(s));
    }
    return batches;
}

FdrSolver::FdrSolver(int max_subset_size)
    : submatrix_(max_subset_size, max_subset_size),
      gap_(max_subset_size),
      solution_(max_subset_size),
      llt_(max_subset_size) {}

bool FdrSolver::factorise(const ScatterSet& scatter, std::span<const int> subset) {
    const auto k = static_cast<Eigen::Index>(subset.size());
    for (Eigen::Index j = 0; j < k; ++j) {
        const int fj = subset[static_cast<std::size_t>(j)];
        gap_[j] = scatter.mu1[fj] - scatter.mu0[fj];
        for (Eigen::Index i = j; i < k; ++i) {
            submatrix_(i, j) = scatter.sw(subset[static_cast<std::size_t>(i)], fj);
        }
    }

    auto block = submatrix_.topLeftCorner(k, k);
    llt_.compute(block.selfadjointView<Eigen::Lower>());
    if (llt_.info() == Eigen::Success) return true;

    // Plain factorisation failed (collinear or constant features); retry
    // with a trace-scaled ridge.
    const double ridge = kRidgeScale * block.diagonal().sum() / static_cast<double>(k);
    if (ridge <= 0.0) return false;
    block.diagonal().array() += ridge;
    llt_.compute(block.selfadjointView<Eigen::Lower>());
    return llt_.info() == Eigen::Success;
}

std::optional<double> FdrSolver::try_fdr(const ScatterSet& scatter, std::span<const int> subset) {
    if (subset.empty()) throw ValidationError("fdr requires a non-empty subset");
    if (!factorise(scatter, subset)) return std::nullopt;
    const auto k = static_cast<Eigen::Index>(subset.size());
    solution_.head(k) = gap_.head(k);
    llt_.solveInPlace(solution_.head(k));
    const double value = gap_.head(k).dot(solution_.head(k));
    return value > 0.0 ? value : 0.0;
}

double FdrSolver::fdr_or_zero(const ScatterSet& scatter, std::span<const int> subset) {
    return try_fdr(scatter, subset).value_or(0.0);
}

std::optional<Eigen::VectorXd> FdrSolver::try_direction(const ScatterSet& scatter,
                                                        std::span<const int> subset) {
    if (subset.empty()) throw ValidationError("fisher direction requires a non-empty subset");
    if (!factorise(scatter, subset)) return std::nullopt;
    const auto k = static_cast<Eigen::Index>(subset.size());
    solution_.head(k) = gap_.head(k);
    llt_.solveInPlace(solution_.head(k));
    Eigen::VectorXd w = solution_.head(k);
    const double norm = w.norm();
    if (norm > 0.0) w /= norm;
    return w;
}

double fdr(const ScatterSet& scatter, const FeatureSubset& subset) {
    FdrSolver solver(subset.size());
    const auto value = solver.try_fdr(scatter, subset.indices());
    if (!value) throw NumericalError("subset scatter is numerically singular");
    return *value;
}

Eigen::VectorXd fisher_direction(const ScatterSet& scatter, const FeatureSubset& subset) {
    FdrSolver solver(subset.size());
    auto w = solver.try_direction(scatter, subset.indices());
    if (!w) throw NumericalError("subset scatter is numerically singular");
    return *w;
}

}  // namespace safdr
