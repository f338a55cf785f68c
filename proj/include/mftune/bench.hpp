#ifndef MFTUNE_BENCH_HPP
#define MFTUNE_BENCH_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mftune/bayes_opt.hpp"
#include "mftune/bounds.hpp"
#include "mftune/config.hpp"
#include "mftune/gp.hpp"
#include "mftune/hri.hpp"
#include "mftune/rng.hpp"

namespace mftune {

struct OperatorHistory {
    OperatorGains gains;
    std::vector<std::size_t> indices;
    Dataset data;
};

HriPlant build_experiment_plant(const ExperimentConfig& config, const OperatorGains& gains,
                                const Eigen::VectorXd& disturbance);

/// m previous operators, each evaluated with measurement noise at
/// points_per_operator grid points (distinct points unless sampling with
/// replacement is configured).
std::vector<OperatorHistory> generate_history(const ExperimentConfig& config, const DesignGrid& grid,
                                              CounterRng& rng);

/// Noise-free performance and divergence flag at every grid point.
struct GridEvaluation {
    Eigen::VectorXd performance;
    std::vector<bool> diverged;
    std::size_t best_index = 0;
    double best() const { return performance[static_cast<Eigen::Index>(best_index)]; }
};

GridEvaluation evaluate_grid(const HriPlant& plant, const DesignGrid& grid, const IntegrationSettings& settings);

/// Surrogate hyperparameters for one trial, in standardized units.
struct SurrogateFit {
    Standardizer standardizer;
    KernelSpec kernel_low;
    double noise_low = 0.0;
    bool noise_low_from_repeats = false;
    KernelSpec kernel_delta;
    KernelSpec single_fidelity_kernel;
};

/// Fits the shared hyperparameters from the previous operators' data only.
SurrogateFit fit_surrogates(const ExperimentConfig& config, const std::vector<OperatorHistory>& history,
                            const DesignGrid& grid, std::uint64_t seed);

SurrogateSettings surrogate_settings(const ExperimentConfig& config, const SurrogateFit& fit,
                                     const DesignGrid& grid);

struct FormulationResult {
    Formulation kind = Formulation::MFF;
    RegretTrace trace;
};

struct TrialBounds {
    BoundReport report;
    /// Standardizer scale: model-unit regret times this is original units.
    double scale = 1.0;
    double rho = 1.0;
    double noise_low = 0.0;
    double noise_high = 0.0;
};

struct TrialResult {
    int trial = 0;
    OperatorGains gains;
    double f_star = 0.0;
    std::size_t best_index = 0;
    /// Regret on the disturbed plant of the controller that is optimal without
    /// the disturbance (disturbed campaigns only).
    std::optional<double> baseline_regret;
    SurrogateFit surrogate;
    std::vector<FormulationResult> runs;
    std::optional<TrialBounds> bounds;
    bool complete = true;
    std::string failure;
};

struct AggregateRow {
    Formulation kind = Formulation::MFF;
    int iter = 0;
    std::size_t count = 0;
    double mean_cumulative = 0.0;
    double std_cumulative = 0.0;
    double mean_best = 0.0;
    double std_best = 0.0;
    double mean_instantaneous = 0.0;
    double std_instantaneous = 0.0;
};

struct CampaignResult {
    ExperimentConfig config;
    std::vector<TrialResult> trials;
    std::vector<AggregateRow> aggregates;

    bool all_complete() const;
};

/// Runs one Monte Carlo trial. Randomness comes only from streams derived
/// from (config.seed, trial), so the result does not depend on scheduling.
TrialResult run_trial(const ExperimentConfig& config, const DesignGrid& grid, int trial);

/// Mean and sample standard deviation (n - 1; zero for a single trial) per
/// formulation and iteration over the trials that reached that iteration.
std::vector<AggregateRow> aggregate(const std::vector<TrialResult>& trials,
                                    const std::vector<Formulation>& formulations, int horizon);

CampaignResult run_campaign(const ExperimentConfig& config);

} // namespace mftune

#endif // MFTUNE_BENCH_HPP
