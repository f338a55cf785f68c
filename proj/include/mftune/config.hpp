#ifndef MFTUNE_CONFIG_HPP
#define MFTUNE_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mftune/bayes_opt.hpp"
#include "mftune/bounds.hpp"
#include "mftune/hri.hpp"
#include "mftune/kernel.hpp"

namespace mftune {

inline constexpr int kConfigSchemaVersion = 1;

enum class StandardizeMode {
    History,   // mean / sample std of the pooled previous-operator outputs
    Adaptive,  // recomputed every iteration from the data each model conditions on
};

enum class LowNoiseSource {
    Repeats,             // half mean squared difference at repeated inputs, ML fallback
    MarginalLikelihood,  // fit jointly with the low kernel
    Fixed,               // surrogate.noise_low
};

enum class SingleFidelitySource {
    LowKernel,  // reuse the fitted low-fidelity kernel
    Fit,        // ML on the pooled history with the measurement noise held fixed
    Fixed,      // surrogate.single_fidelity_kernel
};

struct SurrogateConfig {
    StandardizeMode standardize = StandardizeMode::History;
    /// When false, kernel_low / kernel_delta / single_fidelity_kernel / noise_low
    /// below are used as given (standardized units).
    bool auto_fit = true;
    LowNoiseSource low_noise = LowNoiseSource::Repeats;
    SingleFidelitySource single_fidelity = SingleFidelitySource::LowKernel;
    /// Fit the delta kernel on per-operator residuals of the history.
    bool fit_delta = true;
    KernelSpec kernel_low;
    KernelSpec kernel_delta;
    KernelSpec single_fidelity_kernel;
    double noise_low = 1e-2;
    double rho_default = 1.0;
    double rho_min = 0.0;
    double rho_max = 5.0;
    /// Refit the delta kernel on the new operator's residuals once this many
    /// points exist; 0 disables.
    int delta_refit_min_points = 0;
    int search_starts = 4;
    double lengthscale_min_fraction = 0.05;
    double lengthscale_max_fraction = 10.0;
    double min_signal_variance = 1e-2;
    double max_signal_variance = 1e2;
};

struct BoundsConfig {
    bool enabled = false;
    LowNoiseTerm low_noise_term = LowNoiseTerm::Unweighted;
};

struct ExperimentConfig {
    std::string profile = "paper-default";
    std::vector<GridAxis> grid;
    int dof = 2;
    Eigen::VectorXd q_diagonal;
    Eigen::VectorXd r_diagonal;
    IntegrationSettings integration;
    int previous_operators = 9;
    int points_per_operator = 20;
    bool history_without_replacement = true;
    double noise_variance = 1e-4;
    OperatorDistribution operators;
    double delta = 0.1;
    int horizon = 20;
    std::optional<double> beta_override;
    int trials = 20;
    std::uint64_t seed = 20240611;
    /// Applied to every plant when `disturbed` is set.
    Eigen::VectorXd disturbance;
    bool disturbed = false;
    /// Also disturb the previous operators' plants.
    bool disturb_history = true;
    SurrogateConfig surrogate;
    std::vector<Formulation> formulations{Formulation::MFF, Formulation::CSF, Formulation::LSF};
    BoundsConfig bounds;
    /// Worker threads for trials; 0 picks the hardware concurrency.
    int threads = 0;

    static ExperimentConfig paper_default();

    DesignGrid design_grid() const;
    Eigen::VectorXd active_disturbance() const;
    void validate() const;
};

/// Parses a JSON document. Keys not given keep the value of the profile named
/// by "profile" (only "paper-default" exists). Unknown keys are rejected.
ExperimentConfig config_from_json(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& config);

/// Value of MFTUNE_SEED when set. Throws InvalidInput if it is not a u64.
std::optional<std::uint64_t> seed_from_environment();

std::string_view to_string(StandardizeMode mode);
std::string_view to_string(LowNoiseSource source);
std::string_view to_string(SingleFidelitySource source);
std::string_view to_string(LowNoiseTerm term);

} // namespace mftune

#endif // MFTUNE_CONFIG_HPP
