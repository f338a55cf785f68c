#ifndef MFTUNE_AR1_HPP
#define MFTUNE_AR1_HPP

#include <optional>

#include <Eigen/Dense>

#include "mftune/gp.hpp"
#include "mftune/hyperparameters.hpp"
#include "mftune/kernel.hpp"
#include "mftune/linalg.hpp"

namespace mftune {

/// Two-fidelity linear auto-regressive model f(x) = rho f_L(x) + delta(x)
/// with independent zero-mean GPs f_L and delta. The low- and high-fidelity
/// observation noise variances are the noise_variance fields of data_low and
/// data_high.
struct Ar1Model {
    double rho = 1.0;
    KernelSpec kernel_low;
    KernelSpec kernel_delta;
    Dataset data_low;
    Dataset data_high;

    double noise_low() const { return data_low.noise_variance; }
    double noise_high() const { return data_high.noise_variance; }
    Eigen::Index dimension() const { return kernel_low.dimension(); }

    /// Prior variance of f at any point: rho^2 v_L^2 + v_delta^2.
    double prior_variance() const;

    void validate() const;
};

/// Covariance of the stacked observations [Y_L; Y_H]:
///
///   [[ k_LL + xi_L^2 I,   rho k_LH                      ],
///    [ rho k_HL,          rho^2 k_HH + k^d_HH + xi_H^2 I ]]
SymMatrix ar1_joint_covariance(const Ar1Model& model);

/// Cross-covariance between f(X) at the rows of X and the stacked
/// observations, shaped (|X_L| + |X_H|) x |X|.
Eigen::MatrixXd ar1_cross_covariance(const Ar1Model& model, const Eigen::MatrixXd& X);

/// High-fidelity posterior with the joint covariance factored once.
class Ar1Posterior {
public:
    static Ar1Posterior fit(Ar1Model model, const JitterPolicy& jitter = {});

    Prediction predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    BatchPrediction predict_all(const Eigen::MatrixXd& X) const;

    const Ar1Model& model() const { return model_; }

private:
    Ar1Model model_;
    Cholesky factor_;
    Eigen::VectorXd alpha_;
};

Prediction ar1_predict(const Ar1Model& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Settings for the two-stage (low first, then rho and delta) estimation.
struct Ar1FitConfig {
    /// Fixed low-fidelity kernel; when absent it is fit on the low data by
    /// marginal likelihood using `low_search`.
    std::optional<KernelSpec> kernel_low;
    /// Fixed xi_L^2; when absent it is estimated from repeated inputs in the
    /// low data, falling back to the marginal-likelihood noise estimate.
    std::optional<double> noise_low;
    HyperparameterSearch low_search;
    /// Per-coordinate tolerance under which two low inputs count as repeats.
    double duplicate_radius = 1e-9;

    double default_rho = 1.0;
    double rho_min = 0.0;
    double rho_max = 5.0;

    KernelSpec delta_prior;
    /// Refit kernel_delta on the high-fidelity residuals once at least this
    /// many high points exist. Zero or negative disables refitting.
    int min_high_points_for_delta_fit = 0;
    HyperparameterBounds delta_bounds;
    std::uint64_t seed = 0;
};

/// Estimate of xi_L^2 as half the mean squared difference of outputs at
/// repeated inputs (per-coordinate distance <= radius). Empty when no pair of
/// repeated inputs exists.
std::optional<double> estimate_repeat_noise(const Dataset& data, double radius);

/// Least-squares scale of `targets` against `predictors` (no intercept),
/// clamped to [lo, hi]. Returns `fallback` when fewer than two points exist
/// or the predictors vanish.
double fit_rho(const Eigen::VectorXd& predictors, const Eigen::VectorXd& targets, double fallback, double lo,
               double hi);

/// Two-stage AR-1 estimation. Stage one fixes (or fits) kernel_low and
/// xi_L^2 on data_low alone. Stage two sets rho by least squares of y_H on
/// mu_L(x_H) when at least two high points exist (else the configured
/// default) and, when enabled, fits kernel_delta on y_H - rho mu_L(x_H).
/// data_high keeps its own noise variance.
Ar1Model fit_ar1_hyperparameters(const Dataset& data_low, const Dataset& data_high, const Ar1FitConfig& config);

} // namespace mftune

#endif // MFTUNE_AR1_HPP
