#ifndef MFTUNE_KERNEL_HPP
#define MFTUNE_KERNEL_HPP

#include <Eigen/Dense>

namespace mftune {

enum class KernelFamily { SquaredExponential };

/// Stationary covariance: signal variance v^2 and one lengthscale per input
/// dimension (automatic relevance determination).
///
///   k(x, x') = v^2 exp(-1/2 sum_j ((x_j - x'_j) / l_j)^2)
struct KernelSpec {
    KernelFamily family = KernelFamily::SquaredExponential;
    double signal_variance = 1.0;
    Eigen::VectorXd lengthscales;

    static KernelSpec squared_exponential(double signal_variance, Eigen::VectorXd lengthscales);
    static KernelSpec isotropic(Eigen::Index dimension, double signal_variance, double lengthscale);

    Eigen::Index dimension() const { return lengthscales.size(); }

    /// Throws InvalidInput unless v^2 > 0 and every lengthscale is positive.
    void validate() const;
};

double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& x_prime);

/// Cross-covariance between the rows of X and the rows of X_prime. Either set
/// may be empty, in which case the result has a zero extent.
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X,
                              const Eigen::MatrixXd& X_prime);

/// Column vector k(X, x).
Eigen::VectorXd kernel_vector(const KernelSpec& spec, const Eigen::MatrixXd& X,
                              const Eigen::Ref<const Eigen::VectorXd>& x);

} // namespace mftune

#endif // MFTUNE_KERNEL_HPP
