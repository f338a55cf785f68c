#include "mftune/gp.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <spdlog/spdlog.h>

#include "mftune/errors.hpp"

namespace mftune {

Dataset Dataset::empty(Eigen::Index dimension, double noise_variance)
{
    Dataset d;
    d.inputs.resize(0, dimension);
    d.outputs.resize(0);
    d.noise_variance = noise_variance;
    return d;
}

void Dataset::validate() const
{
    if (inputs.rows() != outputs.size()) {
        throw InvalidInput("dataset has " + std::to_string(inputs.rows()) + " inputs but " +
                           std::to_string(outputs.size()) + " outputs");
    }
    if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
        throw InvalidInput("dataset noise variance must be finite and non-negative");
    if (!inputs.allFinite() || !outputs.allFinite())
        throw InvalidInput("dataset contains non-finite values");
}

Dataset Dataset::appended(const Eigen::Ref<const Eigen::VectorXd>& x, double y) const
{
    if (x.size() != dimension())
        throw InvalidInput("appended point has the wrong dimension");
    if (!std::isfinite(y) || !x.allFinite())
        throw InvalidInput("appended observation must be finite");
    Dataset d;
    d.noise_variance = noise_variance;
    d.inputs.resize(size() + 1, dimension());
    d.inputs.topRows(size()) = inputs;
    d.inputs.row(size()) = x.transpose();
    d.outputs.resize(size() + 1);
    d.outputs.head(size()) = outputs;
    d.outputs[size()] = y;
    return d;
}

Dataset Dataset::concatenated(const Dataset& other) const
{
    if (other.size() > 0 && size() > 0 && other.dimension() != dimension())
        throw InvalidInput("cannot concatenate datasets of different dimension");
    const Eigen::Index dim = size() > 0 ? dimension() : other.dimension();
    Dataset d;
    d.noise_variance = noise_variance;
    d.inputs.resize(size() + other.size(), dim);
    d.outputs.resize(size() + other.size());
    if (size() > 0) {
        d.inputs.topRows(size()) = inputs;
        d.outputs.head(size()) = outputs;
    }
    if (other.size() > 0) {
        d.inputs.bottomRows(other.size()) = other.inputs;
        d.outputs.tail(other.size()) = other.outputs;
    }
    return d;
}

double clamped_std(double variance)
{
    if (variance >= 0.0)
        return std::sqrt(variance);
    if (variance < -1e-8)
        spdlog::warn("predictive variance {:.3e} clamped to zero", variance);
    return 0.0;
}

GpPosterior::GpPosterior(KernelSpec kernel, Dataset data, double prior_mean, Cholesky factor, JitterPolicy jitter)
    : kernel_(std::move(kernel)), data_(std::move(data)), prior_mean_(prior_mean), factor_(std::move(factor)),
      jitter_(jitter)
{
    if (data_.size() > 0)
        alpha_ = factor_.solve(Eigen::VectorXd(data_.outputs.array() - prior_mean_));
    else
        alpha_.resize(0);
}

GpPosterior GpPosterior::fit(const KernelSpec& kernel, const Dataset& data, double prior_mean,
                             const JitterPolicy& jitter)
{
    kernel.validate();
    data.validate();
    if (data.size() > 0 && data.dimension() != kernel.dimension())
        throw InvalidInput("dataset dimension does not match the kernel");

    Cholesky factor;
    if (data.size() > 0) {
        Eigen::MatrixXd C = kernel_matrix(kernel, data.inputs, data.inputs);
        C.diagonal().array() += data.noise_variance;
        factor = Cholesky::factor(C, jitter);
    } else {
        factor = Cholesky::factor(Eigen::MatrixXd(0, 0));
    }
    return GpPosterior(kernel, data, prior_mean, std::move(factor), jitter);
}

Prediction GpPosterior::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const
{
    if (x.size() != kernel_.dimension())
        throw InvalidInput("query point has the wrong dimension");
    const double prior_var = kernel_.signal_variance;
    if (data_.size() == 0)
        return {prior_mean_, std::sqrt(prior_var)};

    const Eigen::VectorXd k = kernel_vector(kernel_, data_.inputs, x);
    const Eigen::VectorXd v = factor_.solve_lower(k);
    return {prior_mean_ + k.dot(alpha_), clamped_std(prior_var - v.squaredNorm())};
}

BatchPrediction GpPosterior::predict_all(const Eigen::MatrixXd& X) const
{
    if (X.rows() > 0 && X.cols() != kernel_.dimension())
        throw InvalidInput("query points have the wrong dimension");
    BatchPrediction out;
    const double prior_var = kernel_.signal_variance;
    if (data_.size() == 0) {
        out.mean = Eigen::VectorXd::Constant(X.rows(), prior_mean_);
        out.std = Eigen::VectorXd::Constant(X.rows(), std::sqrt(prior_var));
        return out;
    }
    const Eigen::MatrixXd K = kernel_matrix(kernel_, data_.inputs, X);
    out.mean = (K.transpose() * alpha_).array() + prior_mean_;
    const Eigen::MatrixXd V = factor_.solve_lower(K);
    const Eigen::VectorXd reduction = V.colwise().squaredNorm().transpose();
    out.std.resize(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        out.std[i] = clamped_std(prior_var - reduction[i]);
    return out;
}

GpPosterior GpPosterior::append(const Eigen::Ref<const Eigen::VectorXd>& x, double y) const
{
    Dataset extended = data_.appended(x, y);
    const Eigen::VectorXd cross = kernel_vector(kernel_, data_.inputs, x);
    Cholesky factor = factor_.extended(cross, kernel_.signal_variance + data_.noise_variance, jitter_);
    return GpPosterior(kernel_, std::move(extended), prior_mean_, std::move(factor), jitter_);
}

double log_marginal_likelihood(const KernelSpec& kernel, const Dataset& data, const JitterPolicy& jitter)
{
    data.validate();
    if (data.size() == 0)
        throw InvalidInput("log marginal likelihood needs at least one observation");
    Eigen::MatrixXd C = kernel_matrix(kernel, data.inputs, data.inputs);
    C.diagonal().array() += data.noise_variance;
    const Cholesky factor = Cholesky::factor(C, jitter);
    const Eigen::VectorXd w = factor.solve_lower(data.outputs);
    const double t = static_cast<double>(data.size());
    return -0.5 * w.squaredNorm() - 0.5 * factor.log_determinant() - 0.5 * t * std::log(2.0 * std::numbers::pi);
}

} // namespace mftune
