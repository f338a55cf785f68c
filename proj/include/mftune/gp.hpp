#ifndef MFTUNE_GP_HPP
#define MFTUNE_GP_HPP

#include <Eigen/Dense>

#include "mftune/kernel.hpp"
#include "mftune/linalg.hpp"

namespace mftune {

/// Noisy observations y_i = f(x_i) + eta, eta ~ N(0, noise_variance).
/// Inputs are stored one point per row.
struct Dataset {
    Eigen::MatrixXd inputs;
    Eigen::VectorXd outputs;
    double noise_variance = 0.0;

    static Dataset empty(Eigen::Index dimension, double noise_variance);

    Eigen::Index size() const { return outputs.size(); }
    Eigen::Index dimension() const { return inputs.cols(); }
    bool is_empty() const { return size() == 0; }

    void validate() const;

    /// Copy with one more observation.
    Dataset appended(const Eigen::Ref<const Eigen::VectorXd>& x, double y) const;
    /// Rows of `this` followed by rows of `other`; keeps this noise variance.
    Dataset concatenated(const Dataset& other) const;
};

struct Prediction {
    double mean = 0.0;
    double std = 0.0;
};

struct BatchPrediction {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;
};

/// Square root of a predictive variance; negative round-off is clamped to
/// zero and reported (once per call site burst) if larger than 1e-8.
double clamped_std(double variance);

class GpPosterior {
public:
    /// Conditions the zero-mean (or `prior_mean`) GP on `data`. Throws
    /// FactorizationError if k(X,X) + noise I cannot be factored.
    static GpPosterior fit(const KernelSpec& kernel, const Dataset& data, double prior_mean = 0.0,
                           const JitterPolicy& jitter = {});

    Prediction predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    BatchPrediction predict_all(const Eigen::MatrixXd& X) const;

    /// Posterior after one more observation, extending the cached factor by a
    /// single row instead of refactoring.
    GpPosterior append(const Eigen::Ref<const Eigen::VectorXd>& x, double y) const;

    const KernelSpec& kernel() const { return kernel_; }
    const Dataset& data() const { return data_; }
    double prior_mean() const { return prior_mean_; }
    const Cholesky& factor() const { return factor_; }

private:
    GpPosterior(KernelSpec kernel, Dataset data, double prior_mean, Cholesky factor, JitterPolicy jitter);

    KernelSpec kernel_;
    Dataset data_;
    double prior_mean_ = 0.0;
    Cholesky factor_;
    Eigen::VectorXd alpha_;
    JitterPolicy jitter_;
};

/// log p(Y | X) = -1/2 Y^T C^{-1} Y - 1/2 log det C - t/2 log 2 pi with
/// C = k(X,X) + noise I.
double log_marginal_likelihood(const KernelSpec& kernel, const Dataset& data, const JitterPolicy& jitter = {});

} // namespace mftune

#endif // MFTUNE_GP_HPP
