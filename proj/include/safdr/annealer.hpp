#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "safdr/dataset.hpp"
#include "safdr/logistic.hpp"
#include "safdr/rng.hpp"
#include "safdr/stats.hpp"

namespace safdr {

enum class BatchDraw {
    per_proposal,  // fresh batch for every proposed swap
    per_sweep,     // one batch per replica per temperature step
};

std::string to_string(BatchDraw draw);
BatchDraw parse_batch_draw(std::string_view name);

struct AnnealConfig {
    int n_replicas = 50;
    double sweeps_per_temp = 0.5;  // N_S; each temperature runs ceil(N_S * K) proposals per replica
    double step_epsilon = 0.7;
    int max_temp_steps = 100;
    int n_batches = 8;
    int convergence_window = 5;
    double convergence_rel_tol = 1e-4;
    std::uint64_t seed = 0;
    int threads = 1;
    BatchDraw batch_draw = BatchDraw::per_proposal;

    bool operator==(const AnnealConfig& other) const = default;
};

enum class StopReason {
    converged,
    max_steps,
    degenerate_zero_fdr,
};

std::string to_string(StopReason reason);

/// Inverse-temperature ladder: beta_0 = 0 and each step advances by
/// epsilon / sigma0, where sigma0 is the replica-FDR standard deviation at
/// infinite temperature (fixed once; epsilon alone if sigma0 is zero).
struct AnnealSchedule {
    std::vector<double> betas;
    double sigma0 = 0.0;
};

struct TemperatureStats {
    int step = 0;
    double beta = 0.0;
    double mean_fdr = 0.0;
    double std_fdr = 0.0;
    long proposals = 0;
    long accepted = 0;
};

struct ReplicaFinal {
    FeatureSubset subset;
    double fdr_value = 0.0;     // on the replica's last evaluated batch
    double cross_entropy = 0.0; // of the re-ranking fit on the full row set
};

struct AnnealResult {
    FeatureSubset best_subset;
    LogisticModel best_model;
    std::vector<ReplicaFinal> per_replica_final;
    std::vector<TemperatureStats> trajectory;
    AnnealSchedule schedule;
    double initial_mean_fdr = 0.0;
    StopReason stop_reason = StopReason::max_steps;
};

/// Metropolis rule for a minimised objective: accept when delta < 0 or
/// u < exp(-beta * delta). delta is old minus new FDR, so improvements are
/// always taken.
bool metropolis_accept(double delta, double beta, double u);

/// One uniformly chosen member swapped for one uniformly chosen
/// non-member; symmetric proposal, Hamming distance exactly 2. Consumes
/// two draws from rng: uniform_int(k) then uniform_int(n_features - k).
FeatureSubset propose_swap(const FeatureSubset& subset, int n_features, Rng& rng);

/// Per-replica stream seeds; exposed so tests can replay the exact draw
/// sequence (per proposal: member position, non-member rank, batch index
/// when drawn per proposal, then the acceptance uniform).
std::uint64_t replica_stream_seed(std::uint64_t config_seed, int replica);
std::uint64_t batch_partition_seed(std::uint64_t config_seed);

/// Replica simulated annealing over k-subsets guided by batched FDR, with
/// a final cross-entropy re-ranking of the surviving subsets. Output is a
/// pure function of (data, rows, k, cfg); thread count only affects speed.
AnnealResult anneal(const Dataset& data, std::span<const int> rows, int k,
                    const AnnealConfig& cfg);

/// Per-temperature fraction of accepted proposals (1.0 where a step made
/// no proposals).
std::vector<double> acceptance_rates(const AnnealResult& result);

/// Tab-separated trajectory table: step, beta, mean FDR, FDR std,
/// acceptance rate.
void write_trajectory(const AnnealResult& result, std::ostream& out);

}  // namespace safdr
