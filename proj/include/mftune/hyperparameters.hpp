#ifndef MFTUNE_HYPERPARAMETERS_HPP
#define MFTUNE_HYPERPARAMETERS_HPP

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "mftune/gp.hpp"
#include "mftune/kernel.hpp"

namespace mftune {

/// Box constraints for the marginal-likelihood search. All bounds are on the
/// natural (not log) scale.
struct HyperparameterBounds {
    double min_signal_variance = 1e-2;
    double max_signal_variance = 1e2;
    Eigen::VectorXd min_lengthscales;
    Eigen::VectorXd max_lengthscales;
    double min_noise_variance = 1e-6;
    double max_noise_variance = 10.0;
};

struct HyperparameterSearch {
    KernelSpec initial;
    HyperparameterBounds bounds;
    /// When false each dataset keeps its own noise_variance.
    bool fit_noise = false;
    double initial_noise_variance = 0.1;
    int starts = 4;
    double initial_step = 1.0;
    double tolerance = 1e-3;
    int max_evaluations_per_start = 600;
    std::uint64_t seed = 0;
};

struct HyperparameterFit {
    KernelSpec kernel;
    double noise_variance = 0.0;
    double log_likelihood = 0.0;
    int evaluations = 0;
};

/// Maximises the summed log marginal likelihood of independent datasets that
/// share one kernel (and, with fit_noise, one noise variance). Multi-start
/// coordinate search over log-parameters; the first start is `initial`, the
/// rest are drawn uniformly in log-space from the seeded generator, so the
/// result is deterministic for a given seed.
HyperparameterFit fit_hyperparameters(std::span<const Dataset> datasets, const HyperparameterSearch& search);

/// Same search where dataset k has covariance k(X_k, X_k) + base[k] + noise I,
/// e.g. to fit a deviation kernel on top of a known posterior covariance.
HyperparameterFit fit_hyperparameters(std::span<const Dataset> datasets, std::span<const Eigen::MatrixXd> base,
                                      const HyperparameterSearch& search);

/// Bounds scaled to the extent of a design box: lengthscales between
/// `min_fraction` and `max_fraction` of each side length.
HyperparameterBounds bounds_for_box(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                    double min_fraction = 0.05, double max_fraction = 10.0);

} // namespace mftune

#endif // MFTUNE_HYPERPARAMETERS_HPP
