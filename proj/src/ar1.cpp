#include "mftune/ar1.hpp"

#include <algorithm>
#include <cmath>

#include "mftune/errors.hpp"

namespace mftune {

double Ar1Model::prior_variance() const
{
    return rho * rho * kernel_low.signal_variance + kernel_delta.signal_variance;
}

void Ar1Model::validate() const
{
    kernel_low.validate();
    kernel_delta.validate();
    if (kernel_low.dimension() != kernel_delta.dimension())
        throw InvalidInput("low and delta kernels have different dimensions");
    data_low.validate();
    data_high.validate();
    for (const Dataset* d : {&data_low, &data_high}) {
        if (d->size() > 0 && d->dimension() != kernel_low.dimension())
            throw InvalidInput("AR-1 dataset dimension does not match the kernels");
    }
    if (!std::isfinite(rho))
        throw InvalidInput("rho must be finite");
}

SymMatrix ar1_joint_covariance(const Ar1Model& model)
{
    model.validate();
    const Eigen::MatrixXd& XL = model.data_low.inputs;
    const Eigen::MatrixXd& XH = model.data_high.inputs;
    const Eigen::Index nl = model.data_low.size();
    const Eigen::Index nh = model.data_high.size();
    const double rho = model.rho;

    Eigen::MatrixXd C(nl + nh, nl + nh);
    if (nl > 0) {
        C.topLeftCorner(nl, nl) = kernel_matrix(model.kernel_low, XL, XL);
        C.topLeftCorner(nl, nl).diagonal().array() += model.noise_low();
    }
    if (nh > 0) {
        C.bottomRightCorner(nh, nh) =
            rho * rho * kernel_matrix(model.kernel_low, XH, XH) + kernel_matrix(model.kernel_delta, XH, XH);
        C.bottomRightCorner(nh, nh).diagonal().array() += model.noise_high();
    }
    if (nl > 0 && nh > 0) {
        const Eigen::MatrixXd cross = rho * kernel_matrix(model.kernel_low, XL, XH);
        C.topRightCorner(nl, nh) = cross;
        C.bottomLeftCorner(nh, nl) = cross.transpose();
    }
    return SymMatrix(C);
}

Eigen::MatrixXd ar1_cross_covariance(const Ar1Model& model, const Eigen::MatrixXd& X)
{
    const Eigen::Index nl = model.data_low.size();
    const Eigen::Index nh = model.data_high.size();
    Eigen::MatrixXd K(nl + nh, X.rows());
    if (nl > 0)
        K.topRows(nl) = model.rho * kernel_matrix(model.kernel_low, model.data_low.inputs, X);
    if (nh > 0) {
        K.bottomRows(nh) = model.rho * model.rho * kernel_matrix(model.kernel_low, model.data_high.inputs, X) +
                           kernel_matrix(model.kernel_delta, model.data_high.inputs, X);
    }
    return K;
}

Ar1Posterior Ar1Posterior::fit(Ar1Model model, const JitterPolicy& jitter)
{
    Ar1Posterior post;
    const SymMatrix C = ar1_joint_covariance(model);
    const Eigen::Index nl = model.data_low.size();
    const Eigen::Index nh = model.data_high.size();
    if (nl + nh > 0) {
        post.factor_ = C.factor(jitter);
        Eigen::VectorXd y(nl + nh);
        y.head(nl) = model.data_low.outputs;
        y.tail(nh) = model.data_high.outputs;
        post.alpha_ = post.factor_.solve(y);
    }
    post.model_ = std::move(model);
    return post;
}

Prediction Ar1Posterior::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const
{
    if (x.size() != model_.dimension())
        throw InvalidInput("query point has the wrong dimension");
    const BatchPrediction p = predict_all(Eigen::MatrixXd(x.transpose()));
    return {p.mean[0], p.std[0]};
}

BatchPrediction Ar1Posterior::predict_all(const Eigen::MatrixXd& X) const
{
    if (X.rows() > 0 && X.cols() != model_.dimension())
        throw InvalidInput("query points have the wrong dimension");
    const double prior_var = model_.prior_variance();
    BatchPrediction out;
    if (alpha_.size() == 0) {
        out.mean = Eigen::VectorXd::Zero(X.rows());
        out.std = Eigen::VectorXd::Constant(X.rows(), std::sqrt(prior_var));
        return out;
    }
    const Eigen::MatrixXd K = ar1_cross_covariance(model_, X);
    out.mean = K.transpose() * alpha_;
    const Eigen::MatrixXd V = factor_.solve_lower(K);
    const Eigen::VectorXd reduction = V.colwise().squaredNorm().transpose();
    out.std.resize(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        out.std[i] = clamped_std(prior_var - reduction[i]);
    return out;
}

Prediction ar1_predict(const Ar1Model& model, const Eigen::Ref<const Eigen::VectorXd>& x)
{
    return Ar1Posterior::fit(model).predict(x);
}

std::optional<double> estimate_repeat_noise(const Dataset& data, double radius)
{
    double sum = 0.0;
    long pairs = 0;
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        for (Eigen::Index j = i + 1; j < data.size(); ++j) {
            if ((data.inputs.row(i) - data.inputs.row(j)).cwiseAbs().maxCoeff() <= radius) {
                const double diff = data.outputs[i] - data.outputs[j];
                sum += diff * diff;
                ++pairs;
            }
        }
    }
    if (pairs == 0)
        return std::nullopt;
    return 0.5 * sum / static_cast<double>(pairs);
}

double fit_rho(const Eigen::VectorXd& predictors, const Eigen::VectorXd& targets, double fallback, double lo,
               double hi)
{
    if (predictors.size() != targets.size())
        throw InvalidInput("rho fit needs matching predictor and target lengths");
    if (predictors.size() < 2)
        return fallback;
    const double denom = predictors.squaredNorm();
    if (!(denom > 1e-300))
        return fallback;
    return std::clamp(predictors.dot(targets) / denom, lo, hi);
}

Ar1Model fit_ar1_hyperparameters(const Dataset& data_low, const Dataset& data_high, const Ar1FitConfig& config)
{
    if (data_low.size() == 0)
        throw InvalidInput("AR-1 fitting needs low-fidelity data");
    data_low.validate();
    data_high.validate();

    Ar1Model model;
    model.data_low = data_low;
    model.data_high = data_high;

    // Stage one: the low-fidelity GP on its own data.
    std::optional<double> noise_low = config.noise_low;
    if (!noise_low)
        noise_low = estimate_repeat_noise(data_low, config.duplicate_radius);

    if (config.kernel_low) {
        model.kernel_low = *config.kernel_low;
        model.data_low.noise_variance = noise_low.value_or(data_low.noise_variance);
    } else {
        HyperparameterSearch search = config.low_search;
        if (noise_low) {
            search.fit_noise = false;
            Dataset d = data_low;
            d.noise_variance = *noise_low;
            const HyperparameterFit fit = fit_hyperparameters(std::span<const Dataset>(&d, 1), search);
            model.kernel_low = fit.kernel;
            model.data_low.noise_variance = *noise_low;
        } else {
            search.fit_noise = true;
            const HyperparameterFit fit = fit_hyperparameters(std::span<const Dataset>(&data_low, 1), search);
            model.kernel_low = fit.kernel;
            model.data_low.noise_variance = fit.noise_variance;
        }
    }
    model.kernel_delta = config.delta_prior;
    model.rho = config.default_rho;
    model.kernel_low.validate();
    model.kernel_delta.validate();

    if (data_high.size() == 0)
        return model;

    // Stage two: rho and delta on the high-fidelity residuals.
    const GpPosterior low = GpPosterior::fit(model.kernel_low, model.data_low);
    const Eigen::VectorXd mu_low = low.predict_all(data_high.inputs).mean;
    model.rho = fit_rho(mu_low, data_high.outputs, config.default_rho, config.rho_min, config.rho_max);

    if (config.min_high_points_for_delta_fit > 0 && data_high.size() >= config.min_high_points_for_delta_fit) {
        Dataset residual = data_high;
        residual.outputs = data_high.outputs - model.rho * mu_low;
        HyperparameterSearch search;
        search.initial = config.delta_prior;
        search.bounds = config.delta_bounds;
        search.fit_noise = false;
        search.seed = config.seed;
        model.kernel_delta = fit_hyperparameters(std::span<const Dataset>(&residual, 1), search).kernel;
    }
    return model;
}

} // namespace mftune
