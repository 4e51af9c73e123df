#include "safdr/annealer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "safdr/errors.hpp"
#include "safdr/parallel.hpp"

namespace safdr {

namespace {

constexpr std::uint64_t kReplicaTag = 0x5af3a11c;
constexpr std::uint64_t kBatchTag = 0xba7c4e55;

struct Replica {
    std::vector<int> indices;          // sorted current subset
    std::vector<int> candidate;        // scratch for proposals
    std::vector<double> batch_fdr;     // lazily filled for the current subset
    std::vector<bool> batch_valid;
    double current_fdr = 0.0;
    int current_batch = -1;            // -1: full-row scatter (initialisation)
    long proposals = 0;
    long accepted = 0;
    Rng rng{0};
};

void validate_config(const AnnealConfig& cfg) {
    if (cfg.n_replicas < 2) throw ValidationError("n_replicas must be >= 2");
    if (!(cfg.sweeps_per_temp > 0.0)) throw ValidationError("sweeps_per_temp must be > 0");
    if (!(cfg.step_epsilon > 0.0)) throw ValidationError("step_epsilon must be > 0");
    if (cfg.max_temp_steps < 1) throw ValidationError("max_temp_steps must be >= 1");
    if (cfg.n_batches < 1) throw ValidationError("n_batches must be >= 1");
    if (cfg.convergence_window < 1) throw ValidationError("convergence_window must be >= 1");
    if (!(cfg.convergence_rel_tol > 0.0)) throw ValidationError("convergence_rel_tol must be > 0");
    if (cfg.threads < 1) throw ValidationError("threads must be >= 1");
}

// rank-th non-member (ascending) of the sorted index list.
int nth_non_member(const std::vector<int>& sorted, int rank) {
    int feature = rank;
    for (int member : sorted) {
        if (member <= feature) {
            ++feature;
        } else {
            break;
        }
    }
    return feature;
}

// Shared by propose_swap and the annealing hot loop so both consume the
// stream identically.
void swap_into(const std::vector<int>& current, int n_features, Rng& rng,
               std::vector<int>* candidate) {
    const int k = static_cast<int>(current.size());
    const int remove_pos = rng.uniform_int(k);
    const int add_rank = rng.uniform_int(n_features - k);
    const int added = nth_non_member(current, add_rank);

    candidate->clear();
    for (int pos = 0; pos < k; ++pos) {
        if (pos != remove_pos) candidate->push_back(current[static_cast<std::size_t>(pos)]);
    }
    candidate->insert(std::lower_bound(candidate->begin(), candidate->end(), added), added);
}

std::vector<int> random_subset(int n_features, int k, Rng& rng) {
    std::vector<int> all(static_cast<std::size_t>(n_features));
    for (int j = 0; j < n_features; ++j) all[static_cast<std::size_t>(j)] = j;
    // Partial Fisher-Yates: the first k slots end up a uniform k-subset.
    for (int i = 0; i < k; ++i) {
        const int j = i + rng.uniform_int(n_features - i);
        std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
    }
    all.resize(static_cast<std::size_t>(k));
    std::sort(all.begin(), all.end());
    return all;
}

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;
};

MeanStd replica_fdr_stats(const std::vector<Replica>& replicas) {
    MeanStd out;
    for (const auto& r : replicas) out.mean += r.current_fdr;
    out.mean /= static_cast<double>(replicas.size());
    double sq = 0.0;
    for (const auto& r : replicas) {
        const double d = r.current_fdr - out.mean;
        sq += d * d;
    }
    out.stddev = std::sqrt(sq / static_cast<double>(replicas.size()));
    return out;
}

}  // namespace

std::string to_string(StopReason reason) {
    switch (reason) {
        case StopReason::converged: return "converged";
        case StopReason::max_steps: return "max_steps";
        case StopReason::degenerate_zero_fdr: return "degenerate_zero_fdr";
    }
    return "unknown";
}

std::string to_string(BatchDraw draw) {
    return draw == BatchDraw::per_proposal ? "per-proposal" : "per-sweep";
}

BatchDraw parse_batch_draw(std::string_view name) {
    if (name == "per-proposal") return BatchDraw::per_proposal;
    if (name == "per-sweep") return BatchDraw::per_sweep;
    throw ValidationError("unknown batch draw mode: " + std::string(name) +
                          " (expected per-proposal or per-sweep)");
}

bool metropolis_accept(double delta, double beta, double u) {
    if (beta < 0.0) throw ValidationError("beta must be >= 0");
    if (delta < 0.0) return true;
    return u < std::exp(-beta * delta);
}

FeatureSubset propose_swap(const FeatureSubset& subset, int n_features, Rng& rng) {
    if (subset.empty()) throw ValidationError("cannot swap in an empty subset");
    if (subset.size() >= n_features) {
        throw ValidationError("no non-member to swap in (k == K)");
    }
    std::vector<int> candidate;
    candidate.reserve(subset.indices().size());
    swap_into(subset.indices(), n_features, rng, &candidate);
    return FeatureSubset(std::move(candidate));
}

std::uint64_t replica_stream_seed(std::uint64_t config_seed, int replica) {
    return seed_combine(config_seed, kReplicaTag, static_cast<std::uint64_t>(replica));
}

std::uint64_t batch_partition_seed(std::uint64_t config_seed) {
    return seed_combine(config_seed, kBatchTag);
}

AnnealResult anneal(const Dataset& data, std::span<const int> rows, int k,
                    const AnnealConfig& cfg) {
    validate_config(cfg);
    const int n_features = data.features();
    if (k < 1 || k > n_features) {
        throw ValidationError("k must be in [1, " + std::to_string(n_features) + "]");
    }

    const ScatterSet full_scatter = compute_scatter(data, rows);

    // Initialise replicas at infinite temperature; their FDR spread fixes
    // the ladder step.
    std::vector<Replica> replicas(static_cast<std::size_t>(cfg.n_replicas));
    std::vector<FdrSolver> solvers;
    solvers.reserve(replicas.size());
    for (int r = 0; r < cfg.n_replicas; ++r) {
        auto& rep = replicas[static_cast<std::size_t>(r)];
        rep.rng = Rng(replica_stream_seed(cfg.seed, r));
        rep.indices = random_subset(n_features, k, rep.rng);
        rep.candidate.reserve(static_cast<std::size_t>(k));
        rep.batch_fdr.assign(static_cast<std::size_t>(cfg.n_batches), 0.0);
        rep.batch_valid.assign(static_cast<std::size_t>(cfg.n_batches), false);
        solvers.emplace_back(k);
        rep.current_fdr = solvers.back().fdr_or_zero(full_scatter, rep.indices);
    }

    AnnealResult result;
    const MeanStd initial = replica_fdr_stats(replicas);
    result.initial_mean_fdr = initial.mean;
    result.schedule.sigma0 = initial.stddev;
    result.schedule.betas.push_back(0.0);

    const bool degenerate =
        std::all_of(replicas.begin(), replicas.end(),
                    [](const Replica& r) { return r.current_fdr == 0.0; });

    if (degenerate) {
        result.stop_reason = StopReason::degenerate_zero_fdr;
    } else if (k == n_features) {
        result.stop_reason = StopReason::converged;  // single state, nothing to explore
    } else {
        const std::vector<ScatterSet> batches =
            make_batches(data, rows, cfg.n_batches, batch_partition_seed(cfg.seed));
        const double beta_step =
            result.schedule.sigma0 > 0.0 ? cfg.step_epsilon / result.schedule.sigma0
                                         : cfg.step_epsilon;
        const int proposals_per_temp =
            static_cast<int>(std::ceil(cfg.sweeps_per_temp * static_cast<double>(n_features)));

        double prev_mean = initial.mean;
        int below_tol_streak = 0;
        result.stop_reason = StopReason::max_steps;

        for (int t = 0; t < cfg.max_temp_steps; ++t) {
            const double beta = static_cast<double>(t) * beta_step;
            if (t > 0) result.schedule.betas.push_back(beta);

            parallel_for(cfg.n_replicas, cfg.threads, [&](int r) {
                auto& rep = replicas[static_cast<std::size_t>(r)];
                auto& solver = solvers[static_cast<std::size_t>(r)];
                int sweep_batch = -1;
                if (cfg.batch_draw == BatchDraw::per_sweep) {
                    sweep_batch = rep.rng.uniform_int(cfg.n_batches);
                }
                for (int p = 0; p < proposals_per_temp; ++p) {
                    swap_into(rep.indices, n_features, rep.rng, &rep.candidate);
                    const int b = cfg.batch_draw == BatchDraw::per_proposal
                                      ? rep.rng.uniform_int(cfg.n_batches)
                                      : sweep_batch;
                    const double u = rep.rng.uniform();

                    const auto bi = static_cast<std::size_t>(b);
                    if (!rep.batch_valid[bi]) {
                        rep.batch_fdr[bi] = solver.fdr_or_zero(batches[bi], rep.indices);
                        rep.batch_valid[bi] = true;
                    }
                    const double fdr_old = rep.batch_fdr[bi];
                    const double fdr_new = solver.fdr_or_zero(batches[bi], rep.candidate);
                    ++rep.proposals;
                    if (metropolis_accept(fdr_old - fdr_new, beta, u)) {
                        rep.indices.swap(rep.candidate);
                        std::fill(rep.batch_valid.begin(), rep.batch_valid.end(), false);
                        rep.batch_fdr[bi] = fdr_new;
                        rep.batch_valid[bi] = true;
                        rep.current_fdr = fdr_new;
                        ++rep.accepted;
                    } else {
                        rep.current_fdr = fdr_old;
                    }
                    rep.current_batch = b;
                }
            });

            const MeanStd stats = replica_fdr_stats(replicas);
            long proposals = 0;
            long accepted = 0;
            for (auto& rep : replicas) {
                proposals += rep.proposals;
                accepted += rep.accepted;
                rep.proposals = 0;
                rep.accepted = 0;
            }
            result.trajectory.push_back(
                {t, beta, stats.mean, stats.stddev, proposals, accepted});

            const double rel_change =
                std::abs(stats.mean - prev_mean) / std::max(std::abs(prev_mean), 1e-300);
            below_tol_streak = rel_change < cfg.convergence_rel_tol ? below_tol_streak + 1 : 0;
            prev_mean = stats.mean;
            if (below_tol_streak >= cfg.convergence_window) {
                result.stop_reason = StopReason::converged;
                break;
            }
        }
    }

    // Re-rank the survivors by training cross-entropy; each distinct
    // subset is fitted once.
    std::map<std::vector<int>, int> unique_subsets;
    for (const auto& rep : replicas) unique_subsets.emplace(rep.indices, -1);
    std::vector<const std::vector<int>*> ordered;
    ordered.reserve(unique_subsets.size());
    for (auto& [indices, slot] : unique_subsets) {
        slot = static_cast<int>(ordered.size());
        ordered.push_back(&indices);
    }

    std::vector<LogisticModel> models(ordered.size());
    std::vector<int> row_copy(rows.begin(), rows.end());
    parallel_for(static_cast<int>(ordered.size()), cfg.threads, [&](int i) {
        models[static_cast<std::size_t>(i)] =
            fit_logistic(data, row_copy, FeatureSubset(*ordered[static_cast<std::size_t>(i)]));
    });

    result.per_replica_final.reserve(replicas.size());
    for (const auto& rep : replicas) {
        const int slot = unique_subsets.at(rep.indices);
        result.per_replica_final.push_back(
            {FeatureSubset(rep.indices), rep.current_fdr,
             models[static_cast<std::size_t>(slot)].final_cross_entropy});
    }

    int best = 0;
    for (int i = 1; i < static_cast<int>(models.size()); ++i) {
        if (models[static_cast<std::size_t>(i)].final_cross_entropy <
            models[static_cast<std::size_t>(best)].final_cross_entropy) {
            best = i;
        }
    }
    result.best_model = models[static_cast<std::size_t>(best)];
    result.best_subset = result.best_model.subset;
    return result;
}

std::vector<double> acceptance_rates(const AnnealResult& result) {
    std::vector<double> rates;
    rates.reserve(result.trajectory.size());
    for (const auto& step : result.trajectory) {
        rates.push_back(step.proposals > 0
                            ? static_cast<double>(step.accepted) /
                                  static_cast<double>(step.proposals)
                            : 1.0);
    }
    return rates;
}

void write_trajectory(const AnnealResult& result, std::ostream& out) {
    out << "step\tbeta\tmean_fdr\tstd_fdr\tacceptance_rate\n";
    const auto rates = acceptance_rates(result);
    for (std::size_t i = 0; i < result.trajectory.size(); ++i) {
        const auto& s = result.trajectory[i];
        out << s.step << '\t' << s.beta << '\t' << s.mean_fdr << '\t' << s.std_fdr << '\t'
            << rates[i] << '\n';
    }
}

}  // namespace safdr
