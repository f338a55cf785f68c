#include "mftune/hyperparameters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mftune/errors.hpp"
#include "mftune/rng.hpp"

namespace mftune {

namespace {

struct LogBox {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
};

LogBox log_box(const HyperparameterBounds& b, Eigen::Index dim, bool fit_noise)
{
    const Eigen::Index n = 1 + dim + (fit_noise ? 1 : 0);
    LogBox box{Eigen::VectorXd(n), Eigen::VectorXd(n)};
    box.lo[0] = std::log(b.min_signal_variance);
    box.hi[0] = std::log(b.max_signal_variance);
    box.lo.segment(1, dim) = b.min_lengthscales.array().log();
    box.hi.segment(1, dim) = b.max_lengthscales.array().log();
    if (fit_noise) {
        box.lo[n - 1] = std::log(b.min_noise_variance);
        box.hi[n - 1] = std::log(b.max_noise_variance);
    }
    return box;
}

class Objective {
public:
    Objective(std::span<const Dataset> datasets, std::span<const Eigen::MatrixXd> base,
              const HyperparameterSearch& search, Eigen::Index dim)
        : datasets_(datasets), base_(base), search_(search), dim_(dim)
    {
    }

    double operator()(const Eigen::VectorXd& theta)
    {
        ++evaluations;
        const KernelSpec kernel = decode_kernel(theta);
        double total = 0.0;
        try {
            for (std::size_t k = 0; k < datasets_.size(); ++k) {
                const Dataset& data = datasets_[k];
                if (data.size() == 0)
                    continue;
                const double noise = search_.fit_noise ? std::exp(theta[theta.size() - 1]) : data.noise_variance;
                if (base_.empty()) {
                    Dataset d = data;
                    d.noise_variance = noise;
                    total += log_marginal_likelihood(kernel, d, JitterPolicy{1e-10, 10.0, 2});
                    continue;
                }
                Eigen::MatrixXd C = kernel_matrix(kernel, data.inputs, data.inputs) + base_[k];
                C.diagonal().array() += noise;
                const Cholesky L = Cholesky::factor(C, JitterPolicy{1e-10, 10.0, 2});
                const Eigen::VectorXd a = L.solve_lower(Eigen::MatrixXd(data.outputs));
                total += -0.5 * a.squaredNorm() - 0.5 * L.log_determinant() -
                         0.5 * static_cast<double>(data.size()) * std::log(2.0 * std::numbers::pi);
            }
        } catch (const FactorizationError&) {
            return -std::numeric_limits<double>::infinity();
        }
        return std::isfinite(total) ? total : -std::numeric_limits<double>::infinity();
    }

    KernelSpec decode_kernel(const Eigen::VectorXd& theta) const
    {
        KernelSpec k;
        k.signal_variance = std::exp(theta[0]);
        k.lengthscales = theta.segment(1, dim_).array().exp();
        return k;
    }

    int evaluations = 0;

private:
    std::span<const Dataset> datasets_;
    std::span<const Eigen::MatrixXd> base_;
    const HyperparameterSearch& search_;
    Eigen::Index dim_;
};

} // namespace

HyperparameterBounds bounds_for_box(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, double min_fraction,
                                    double max_fraction)
{
    HyperparameterBounds b;
    const Eigen::VectorXd span = (upper - lower).cwiseAbs().cwiseMax(1e-12);
    b.min_lengthscales = min_fraction * span;
    b.max_lengthscales = max_fraction * span;
    return b;
}

HyperparameterFit fit_hyperparameters(std::span<const Dataset> datasets, const HyperparameterSearch& search)
{
    return fit_hyperparameters(datasets, {}, search);
}

HyperparameterFit fit_hyperparameters(std::span<const Dataset> datasets, std::span<const Eigen::MatrixXd> base,
                                      const HyperparameterSearch& search)
{
    search.initial.validate();
    const Eigen::Index dim = search.initial.dimension();
    if (search.bounds.min_lengthscales.size() != dim || search.bounds.max_lengthscales.size() != dim)
        throw InvalidInput("lengthscale bounds must match the kernel dimension");
    bool any = false;
    for (const Dataset& d : datasets) {
        d.validate();
        if (d.size() > 0 && d.dimension() != dim)
            throw InvalidInput("dataset dimension does not match the kernel");
        any = any || d.size() > 0;
    }
    if (!any)
        throw InvalidInput("hyperparameter fitting needs at least one observation");
    if (!base.empty()) {
        if (base.size() != datasets.size())
            throw InvalidInput("one base covariance per dataset is required");
        for (std::size_t k = 0; k < base.size(); ++k)
            if (base[k].rows() != datasets[k].size() || base[k].cols() != datasets[k].size())
                throw InvalidInput("base covariance shape does not match its dataset");
    }
    if (search.starts < 1)
        throw InvalidInput("hyperparameter search needs at least one start");

    const LogBox box = log_box(search.bounds, dim, search.fit_noise);
    const Eigen::Index n = box.lo.size();
    Objective objective(datasets, base, search, dim);
    CounterRng rng(search.seed, 0x68797065ULL);

    Eigen::VectorXd best_theta;
    double best_value = -std::numeric_limits<double>::infinity();

    for (int start = 0; start < search.starts; ++start) {
        Eigen::VectorXd theta(n);
        if (start == 0) {
            theta[0] = std::log(search.initial.signal_variance);
            theta.segment(1, dim) = search.initial.lengthscales.array().log();
            if (search.fit_noise)
                theta[n - 1] = std::log(search.initial_noise_variance);
        } else {
            for (Eigen::Index i = 0; i < n; ++i)
                theta[i] = box.lo[i] + uniform01(rng) * (box.hi[i] - box.lo[i]);
        }
        theta = theta.cwiseMax(box.lo).cwiseMin(box.hi);

        double value = objective(theta);
        double step = search.initial_step;
        int used = 1;
        while (step > search.tolerance && used < search.max_evaluations_per_start) {
            bool improved = false;
            for (Eigen::Index i = 0; i < n && used < search.max_evaluations_per_start; ++i) {
                for (const double dir : {+1.0, -1.0}) {
                    Eigen::VectorXd trial = theta;
                    trial[i] = std::clamp(theta[i] + dir * step, box.lo[i], box.hi[i]);
                    if (trial[i] == theta[i])
                        continue;
                    const double v = objective(trial);
                    ++used;
                    if (v > value) {
                        value = v;
                        theta = trial;
                        improved = true;
                        break;
                    }
                }
            }
            if (!improved)
                step *= 0.5;
        }

        if (value > best_value) {
            best_value = value;
            best_theta = theta;
        }
    }

    if (!std::isfinite(best_value))
        throw FactorizationError("no hyperparameter setting produced a factorizable covariance",
                                 std::numeric_limits<double>::quiet_NaN());

    HyperparameterFit fit;
    fit.kernel = objective.decode_kernel(best_theta);
    fit.noise_variance = search.fit_noise ? std::exp(best_theta[n - 1])
                                          : (datasets.empty() ? 0.0 : datasets.front().noise_variance);
    fit.log_likelihood = best_value;
    fit.evaluations = objective.evaluations;
    return fit;
}

} // namespace mftune
