#ifndef MFTUNE_BOUNDS_HPP
#define MFTUNE_BOUNDS_HPP

#include <vector>

#include <Eigen/Dense>

#include "mftune/ar1.hpp"
#include "mftune/linalg.hpp"

namespace mftune {

struct PsdCheck {
    double min_eigenvalue = 0.0;
    bool holds = false;
};

/// Evaluates (Q + s I)^{-1} - (Q^{-1} - s Q^{-2}) for s = sigma2 and reports
/// its minimum eigenvalue; holds when that is >= -1e-10. Requires
/// 0 <= sigma2 < lambda_min(Q).
PsdCheck psd_bound_check(const SymMatrix& Q, double sigma2);

/// Covariance of the high-fidelity observations given the low-fidelity ones:
///   rho^2 k_HH + k^d_HH + xi_H^2 I - rho^2 k_HL [k_LL + xi_L^2 I]^{-1} k_LH.
SymMatrix conditional_cov_exact(const Ar1Model& model);

/// Coefficient of the xi_L^2 k_HL k_LL^{-2} k_LH term in k~. Substituting
/// the matrix inequality into the rho^2-weighted inverse gives rho^2; the
/// commonly quoted form uses 1, which only dominates for
/// rho^2 <= 1 + xi_L^2 / lambda.
enum class LowNoiseTerm {
    Unweighted,
    RhoSquared,
};

/// Upper bound k~ on conditional_cov_exact obtained by replacing
/// [k_LL + xi_L^2 I]^{-1} with k_LL^{-1} - xi_L^2 k_LL^{-2}:
///   rho^2 k_HH + k^d_HH + xi_H^2 I - rho^2 k_HL k_LL^{-1} k_LH
///     + xi_L^2 k_HL k_LL^{-2} k_LH.
/// Throws PreconditionError unless xi_L^2 < lambda_min(k_LL).
SymMatrix conditional_cov_bound(const Ar1Model& model, LowNoiseTerm term = LowNoiseTerm::Unweighted);

/// Closed form of k~ when every high input also appears in the low inputs:
///   k^d_HH + xi_H^2 I + xi_L^2 k_HL k_LL^{-2} k_LH.
SymMatrix conditional_cov_bound_nested(const Ar1Model& model, LowNoiseTerm term = LowNoiseTerm::Unweighted);

/// Rows of X_L, in order, kept greedily while lambda_min(k_LL) on the kept set
/// stays above xi_L^2. Conditioning on fewer low observations can only enlarge
/// the conditional covariance, so k~ on the subset still bounds it.
std::vector<Eigen::Index> low_subset_for_bound(const Ar1Model& model);

/// lambda_min(k_LL) for the low-fidelity inputs (no noise term).
double low_kernel_min_eigenvalue(const Ar1Model& model);

struct InfoGainBound {
    double gamma = 0.0;
    int horizon_terms = 0;                 // h(T) = min(T, dim k~)
    Eigen::VectorXd eigenvalues;           // descending, negatives clamped
    std::vector<int> allocation;           // m_t for t = 1..h(T)
};

/// (1/2) / (1 - e^{-1}) * max over m (sum m = T) of
///   sum_{t <= h(T)} log(1 + m_t lambda_t / xi_H^2),
/// where the allocation is built greedily one unit at a time (exact for this
/// separable concave problem).
InfoGainBound info_gain_bound(const SymMatrix& k_tilde, double noise_high, int T);

struct InfoGain {
    double gamma = 0.0;
    std::vector<Eigen::Index> subset;
};

/// Greedy maximisation of (1/2) log det(I + cov_A / noise) over subsets A of
/// size T.
InfoGain info_gain_exact(const SymMatrix& cov, double noise, int T);

/// (1/2) log det(I + cov / noise) for the whole matrix.
double information_gain(const Eigen::MatrixXd& cov, double noise);

enum class VarianceForm {
    AsPrinted,   // v_MF^2 = rho v_L^2 + v_d^2
    RhoSquared,  // v_MF^2 = rho^2 v_L^2 + v_d^2
};

struct RegretBound {
    double v_mf2 = 0.0;
    double c1 = 0.0;
    double bound = 0.0;
};

/// C1 = 8 v_MF^2 / log(1 + v_MF^2 / xi_H^2) and R_T^max = sqrt(C1 T beta_T gamma).
RegretBound regret_bound(int T, double beta_T, double gamma_tilde, double v_low2, double v_delta2, double rho,
                         double noise_high, VarianceForm form = VarianceForm::AsPrinted);

struct BoundReport {
    int T = 0;
    double beta_T = 0.0;
    SymMatrix k_tilde;
    Eigen::VectorXd eigenvalues;
    double gamma_tilde = 0.0;
    int horizon_terms = 0;
    RegretBound printed;
    RegretBound rho_squared;
    double low_kernel_min_eigenvalue = 0.0;
    bool precondition_holds = false;
    Eigen::Index low_points_total = 0;
    Eigen::Index low_points_used = 0;
    /// Minimum eigenvalue of k~ - conditional_cov_exact.
    double dominance_margin = 0.0;
    /// (1/2) log det(I + C / xi_H^2) for the latent posterior covariance C
    /// of f at X_H given the low data, i.e. the information actually gained.
    double realized_info_gain = 0.0;
    /// Largest eigenvalue of a single-fidelity k_HH (+ xi_H^2 I) on X_H.
    double single_fidelity_max_eigenvalue = 0.0;
    bool multi_fidelity_benefit = false;
};

/// Bound report for the high-fidelity design X_H of `model` over T steps.
/// When xi_L^2 < lambda_min(k_LL) fails on the full X_L, k~ is built on
/// low_subset_for_bound instead and precondition_holds records the failure.
BoundReport make_bound_report(const Ar1Model& model, int T, double beta_T, const KernelSpec& single_fidelity_kernel,
                              LowNoiseTerm term = LowNoiseTerm::Unweighted);

} // namespace mftune

#endif // MFTUNE_BOUNDS_HPP
