#include "mftune/kernel.hpp"

#include <cmath>
#include <string>

#include "mftune/errors.hpp"

namespace mftune {

KernelSpec KernelSpec::squared_exponential(double signal_variance, Eigen::VectorXd lengthscales)
{
    KernelSpec spec;
    spec.signal_variance = signal_variance;
    spec.lengthscales = std::move(lengthscales);
    spec.validate();
    return spec;
}

KernelSpec KernelSpec::isotropic(Eigen::Index dimension, double signal_variance, double lengthscale)
{
    return squared_exponential(signal_variance, Eigen::VectorXd::Constant(dimension, lengthscale));
}

void KernelSpec::validate() const
{
    if (!(signal_variance > 0.0) || !std::isfinite(signal_variance))
        throw InvalidInput("kernel signal variance must be positive and finite");
    if (lengthscales.size() == 0)
        throw InvalidInput("kernel needs at least one lengthscale");
    for (Eigen::Index j = 0; j < lengthscales.size(); ++j) {
        if (!(lengthscales[j] > 0.0) || !std::isfinite(lengthscales[j]))
            throw InvalidInput("kernel lengthscale " + std::to_string(j) + " must be positive and finite");
    }
}

namespace {

void check_dimension(const KernelSpec& spec, Eigen::Index d, const char* what)
{
    if (d != spec.dimension()) {
        throw InvalidInput(std::string(what) + " has dimension " + std::to_string(d) + ", kernel expects " +
                           std::to_string(spec.dimension()));
    }
}

} // namespace

double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& x_prime)
{
    check_dimension(spec, x.size(), "point x");
    check_dimension(spec, x_prime.size(), "point x'");
    const double r2 = ((x - x_prime).array() / spec.lengthscales.array()).square().sum();
    return spec.signal_variance * std::exp(-0.5 * r2);
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X, const Eigen::MatrixXd& X_prime)
{
    if (X.rows() == 0 || X_prime.rows() == 0)
        return Eigen::MatrixXd(X.rows(), X_prime.rows());
    check_dimension(spec, X.cols(), "point set X");
    check_dimension(spec, X_prime.cols(), "point set X'");

    // Work in lengthscale-scaled coordinates: r^2 = |a|^2 + |b|^2 - 2 a.b would
    // lose the exact zero on the diagonal, so accumulate differences directly.
    const Eigen::RowVectorXd inv_l = spec.lengthscales.cwiseInverse().transpose();
    const Eigen::MatrixXd A = X.array().rowwise() * inv_l.array();
    const Eigen::MatrixXd B = X_prime.array().rowwise() * inv_l.array();

    Eigen::MatrixXd K(X.rows(), X_prime.rows());
    for (Eigen::Index j = 0; j < B.rows(); ++j) {
        for (Eigen::Index i = 0; i < A.rows(); ++i) {
            double r2 = 0.0;
            for (Eigen::Index c = 0; c < A.cols(); ++c) {
                const double diff = A(i, c) - B(j, c);
                r2 += diff * diff;
            }
            K(i, j) = spec.signal_variance * std::exp(-0.5 * r2);
        }
    }
    return K;
}

Eigen::VectorXd kernel_vector(const KernelSpec& spec, const Eigen::MatrixXd& X,
                              const Eigen::Ref<const Eigen::VectorXd>& x)
{
    return kernel_matrix(spec, X, x.transpose());
}

} // namespace mftune
