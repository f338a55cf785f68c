#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "mftune/errors.hpp"
#include "mftune/gp.hpp"
#include "oracles.hpp"

using namespace mftune;

namespace {

Dataset one_point(double noise)
{
    Dataset d;
    d.inputs = Eigen::MatrixXd::Zero(1, 1);
    d.outputs = Eigen::VectorXd::Ones(1);
    d.noise_variance = noise;
    return d;
}

} // namespace

TEST(Gp, EmptyDataIsPrior)
{
    const KernelSpec k = KernelSpec::isotropic(2, 1.7, 0.4);
    const GpPosterior p = GpPosterior::fit(k, Dataset::empty(2, 0.1));
    const Prediction pr = p.predict(Eigen::Vector2d(0.3, -0.2));
    EXPECT_EQ(pr.mean, 0.0);
    EXPECT_NEAR(pr.std * pr.std, 1.7, 1e-14);
}

TEST(Gp, OneObservationClosedForm)
{
    const GpPosterior p = GpPosterior::fit(KernelSpec::isotropic(1, 1.0, 1.0), one_point(0.01));
    const Prediction pr = p.predict(Eigen::VectorXd::Zero(1));
    EXPECT_NEAR(pr.mean, 0.990099, 1e-6);
    EXPECT_NEAR(pr.std * pr.std, 0.00990099, 1e-8);
    EXPECT_NEAR(pr.std, 0.099504, 1e-6);
}

TEST(Gp, FarQueryDecorrelates)
{
    const GpPosterior p = GpPosterior::fit(KernelSpec::isotropic(1, 1.0, 1.0), one_point(0.01));
    const Prediction pr = p.predict(Eigen::VectorXd::Constant(1, 50.0));
    EXPECT_NEAR(pr.mean, 0.0, 1e-12);
    EXPECT_NEAR(pr.std, 1.0, 1e-12);
}

TEST(Gp, NoiselessInterpolation)
{
    Dataset d;
    d.inputs.resize(3, 1);
    d.inputs << 0.0, 1.0, 2.5;
    d.outputs = Eigen::Vector3d(0.3, -1.0, 2.0);
    d.noise_variance = 0.0;
    const GpPosterior p = GpPosterior::fit(KernelSpec::isotropic(1, 1.0, 1.0), d);
    for (int i = 0; i < 3; ++i) {
        const Prediction pr = p.predict(d.inputs.row(i).transpose());
        EXPECT_NEAR(pr.mean, d.outputs[i], 1e-8);
        EXPECT_NEAR(pr.std, 0.0, 1e-4);
    }
}

TEST(Gp, StdNeverExceedsPrior)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Dataset d = Dataset::empty(2, 0.05);
    for (int i = 0; i < 8; ++i)
        d = d.appended(Eigen::Vector2d(u(rng), u(rng)), u(rng));
    const KernelSpec k = KernelSpec::isotropic(2, 2.0, 0.3);
    const GpPosterior p = GpPosterior::fit(k, d);
    for (int i = 0; i < 50; ++i)
        EXPECT_LE(p.predict(Eigen::Vector2d(u(rng), u(rng))).std, std::sqrt(2.0) + 1e-12);
}

TEST(Gp, MatchesJointGaussianConditioning)
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 30; ++rep) {
        const int n = 1 + rep % 6;
        const Eigen::Vector2d ls(0.2 + u(rng), 0.2 + u(rng));
        const double v2 = 0.5 + 2.0 * u(rng);
        const double noise = 1e-3 + 0.1 * u(rng);
        Dataset d = Dataset::empty(2, noise);
        for (int i = 0; i < n; ++i)
            d = d.appended(Eigen::Vector2d(u(rng), u(rng)), 2.0 * u(rng) - 1.0);
        const GpPosterior p = GpPosterior::fit(KernelSpec::squared_exponential(v2, ls), d);
        const Eigen::Vector2d xq(u(rng), u(rng));
        const oracle::Moments o = oracle::gp_condition(v2, ls, d.inputs, d.outputs, noise, xq);
        const Prediction pr = p.predict(xq);
        EXPECT_NEAR(pr.mean, o.mean, 1e-8);
        EXPECT_NEAR(pr.std, o.std, 1e-8);
    }
}

TEST(Gp, BatchMatchesPointwise)
{
    Dataset d = one_point(0.01).appended(Eigen::VectorXd::Constant(1, 0.7), -0.4);
    const GpPosterior p = GpPosterior::fit(KernelSpec::isotropic(1, 1.0, 0.5), d);
    const Eigen::MatrixXd X = Eigen::VectorXd::LinSpaced(9, -1.0, 2.0);
    const BatchPrediction b = p.predict_all(X);
    for (int i = 0; i < 9; ++i) {
        const Prediction pr = p.predict(X.row(i).transpose());
        EXPECT_NEAR(b.mean[i], pr.mean, 1e-13);
        EXPECT_NEAR(b.std[i], pr.std, 1e-13);
    }
}

TEST(Gp, PriorMeanOffsetsPrediction)
{
    const KernelSpec k = KernelSpec::isotropic(1, 1.0, 1.0);
    Dataset d = one_point(0.01);
    d.outputs[0] = 3.0;
    const GpPosterior p = GpPosterior::fit(k, d, 2.0);
    EXPECT_NEAR(p.predict(Eigen::VectorXd::Zero(1)).mean, 2.0 + 0.990099, 1e-6);
    EXPECT_NEAR(p.predict(Eigen::VectorXd::Constant(1, 80.0)).mean, 2.0, 1e-12);
}

TEST(GpAppend, FromEmptyMatchesFit)
{
    const KernelSpec k = KernelSpec::isotropic(1, 1.0, 1.0);
    const GpPosterior a = GpPosterior::fit(k, Dataset::empty(1, 0.01)).append(Eigen::VectorXd::Zero(1), 1.0);
    const GpPosterior b = GpPosterior::fit(k, one_point(0.01));
    const Prediction pa = a.predict(Eigen::VectorXd::Constant(1, 0.3));
    const Prediction pb = b.predict(Eigen::VectorXd::Constant(1, 0.3));
    EXPECT_NEAR(pa.mean, pb.mean, 1e-14);
    EXPECT_NEAR(pa.std, pb.std, 1e-14);
}

TEST(GpAppend, DuplicateShrinksStd)
{
    const KernelSpec k = KernelSpec::isotropic(1, 1.0, 1.0);
    const GpPosterior a = GpPosterior::fit(k, one_point(0.01));
    const GpPosterior b = a.append(Eigen::VectorXd::Zero(1), 1.0);
    const double before = a.predict(Eigen::VectorXd::Zero(1)).std;
    const double after = b.predict(Eigen::VectorXd::Zero(1)).std;
    EXPECT_LT(after, before);
    // Two observations of the same point: variance 1 - 2 / (2 + 0.01).
    EXPECT_NEAR(after * after, 1.0 - 2.0 / 2.01, 1e-12);
}

TEST(GpAppend, MatchesRefitOnGrid)
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const KernelSpec k = KernelSpec::squared_exponential(1.2, Eigen::Vector3d(0.2, 0.3, 0.5));
    Dataset d = Dataset::empty(3, 0.02);
    GpPosterior inc = GpPosterior::fit(k, d);
    for (int i = 0; i < 12; ++i) {
        const Eigen::Vector3d x(u(rng), u(rng), u(rng));
        const double y = u(rng);
        inc = inc.append(x, y);
        d = d.appended(x, y);
    }
    const GpPosterior full = GpPosterior::fit(k, d);
    Eigen::MatrixXd grid(125, 3);
    for (int i = 0; i < 125; ++i)
        grid.row(i) = Eigen::RowVector3d((i / 25) / 4.0, ((i / 5) % 5) / 4.0, (i % 5) / 4.0);
    const BatchPrediction a = inc.predict_all(grid);
    const BatchPrediction b = full.predict_all(grid);
    EXPECT_LT((a.mean - b.mean).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((a.std - b.std).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(GpLikelihood, SinglePointZeroOutput)
{
    Dataset d = one_point(0.3);
    d.outputs[0] = 0.0;
    const double v = log_marginal_likelihood(KernelSpec::isotropic(1, 2.0, 1.0), d);
    EXPECT_NEAR(v, -0.5 * std::log(2.3) - 0.5 * std::log(2.0 * std::numbers::pi), 1e-14);
}

TEST(GpLikelihood, ZeroOutputsMaximiseQuadraticTerm)
{
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Dataset d = Dataset::empty(1, 0.1);
    for (int i = 0; i < 4; ++i)
        d = d.appended(Eigen::VectorXd::Constant(1, u(rng)), u(rng));
    const KernelSpec k = KernelSpec::isotropic(1, 1.0, 0.5);
    Dataset zero = d;
    zero.outputs.setZero();
    EXPECT_GT(log_marginal_likelihood(k, zero), log_marginal_likelihood(k, d));
}

TEST(GpLikelihood, MatchesDenseDeterminant)
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
        const Eigen::Vector2d ls(0.2 + u(rng), 0.2 + u(rng));
        const double v2 = 0.5 + u(rng);
        Dataset d = Dataset::empty(2, 0.01 + 0.1 * u(rng));
        for (int i = 0; i < 5; ++i)
            d = d.appended(Eigen::Vector2d(u(rng), u(rng)), u(rng) - 0.5);
        Eigen::MatrixXd C(5, 5);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j)
                C(i, j) = oracle::se(v2, ls, d.inputs.row(i).transpose(), d.inputs.row(j).transpose()) +
                          (i == j ? d.noise_variance : 0.0);
        EXPECT_NEAR(log_marginal_likelihood(KernelSpec::squared_exponential(v2, ls), d),
                    oracle::gaussian_log_density(C, d.outputs), 1e-8);
    }
}

TEST(GpDataset, Validation)
{
    Dataset d;
    d.inputs = Eigen::MatrixXd::Zero(2, 1);
    d.outputs = Eigen::VectorXd::Zero(3);
    EXPECT_THROW(d.validate(), InvalidInput);
    Dataset e = Dataset::empty(1, 0.1);
    EXPECT_THROW(e.appended(Eigen::VectorXd::Zero(1), std::nan("")), InvalidInput);
    EXPECT_THROW(GpPosterior::fit(KernelSpec::isotropic(2, 1, 1), one_point(0.1)), InvalidInput);
}
