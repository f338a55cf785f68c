#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mftune/ar1.hpp"
#include "mftune/errors.hpp"
#include "oracles.hpp"

using namespace mftune;

namespace {

struct Random {
    std::mt19937_64 rng;
    std::uniform_real_distribution<double> u{0.0, 1.0};
    explicit Random(std::uint64_t seed) : rng(seed) {}
    double operator()() { return u(rng); }
    Eigen::MatrixXd points(int n, int dim)
    {
        Eigen::MatrixXd X(n, dim);
        for (Eigen::Index i = 0; i < X.size(); ++i)
            X.data()[i] = u(rng);
        return X;
    }
    Eigen::VectorXd values(int n)
    {
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i)
            y[i] = 2.0 * u(rng) - 1.0;
        return y;
    }
};

Ar1Model model_from(const oracle::Ar1Instance& m, const Eigen::VectorXd& yl, const Eigen::VectorXd& yh)
{
    Ar1Model model;
    model.rho = m.rho;
    model.kernel_low = KernelSpec::squared_exponential(m.v_low2, m.ls_low);
    model.kernel_delta = KernelSpec::squared_exponential(m.v_delta2, m.ls_delta);
    model.data_low.inputs = m.X_low;
    model.data_low.outputs = yl;
    model.data_low.noise_variance = m.noise_low;
    model.data_high.inputs = m.X_high;
    model.data_high.outputs = yh;
    model.data_high.noise_variance = m.noise_high;
    return model;
}

Ar1Model single_point_model()
{
    Ar1Model m;
    m.rho = 2.0;
    m.kernel_low = KernelSpec::isotropic(1, 1.0, 1.0);
    m.kernel_delta = KernelSpec::isotropic(1, 0.5, 1.0);
    m.data_low.inputs = Eigen::MatrixXd::Zero(1, 1);
    m.data_low.outputs = Eigen::VectorXd::Zero(1);
    m.data_high = m.data_low;
    return m;
}

} // namespace

TEST(Ar1Covariance, SinglePointExample)
{
    const Eigen::MatrixXd S = ar1_joint_covariance(single_point_model()).matrix();
    ASSERT_EQ(S.rows(), 2);
    EXPECT_DOUBLE_EQ(S(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(S(0, 1), 2.0);
    EXPECT_DOUBLE_EQ(S(1, 0), 2.0);
    EXPECT_DOUBLE_EQ(S(1, 1), 4.5);
}

TEST(Ar1Covariance, ZeroRhoIsBlockDiagonal)
{
    Random r(1);
    Ar1Model m;
    m.rho = 0.0;
    m.kernel_low = KernelSpec::isotropic(2, 1.0, 0.3);
    m.kernel_delta = KernelSpec::isotropic(2, 0.4, 0.6);
    m.data_low.inputs = r.points(3, 2);
    m.data_low.outputs = r.values(3);
    m.data_low.noise_variance = 0.1;
    m.data_high.inputs = r.points(2, 2);
    m.data_high.outputs = r.values(2);
    m.data_high.noise_variance = 0.05;
    const Eigen::MatrixXd S = ar1_joint_covariance(m).matrix();
    EXPECT_EQ(S.topRightCorner(3, 2).cwiseAbs().maxCoeff(), 0.0);
    Eigen::MatrixXd high = kernel_matrix(m.kernel_delta, m.data_high.inputs, m.data_high.inputs);
    high.diagonal().array() += 0.05;
    EXPECT_LT((S.bottomRightCorner(2, 2) - high).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Ar1Covariance, MatchesEntrywiseAssembly)
{
    Random r(2);
    for (int rep = 0; rep < 10; ++rep) {
        oracle::Ar1Instance o;
        o.rho = 3.0 * r() - 1.0;
        o.v_low2 = 0.5 + r();
        o.ls_low = Eigen::Vector2d(0.2 + r(), 0.2 + r());
        o.v_delta2 = 0.1 + r();
        o.ls_delta = Eigen::Vector2d(0.2 + r(), 0.2 + r());
        o.noise_low = 0.1 * r();
        o.noise_high = 0.1 * r();
        o.X_low = r.points(3, 2);
        o.X_high = r.points(2, 2);
        const Eigen::MatrixXd S = ar1_joint_covariance(model_from(o, r.values(3), r.values(2))).matrix();
        const Eigen::MatrixXd ref = oracle::ar1_joint(o, Eigen::Vector2d::Zero()).topLeftCorner(5, 5);
        EXPECT_LT((S - ref).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_EQ(S, S.transpose());
    }
}

TEST(Ar1Predict, NoDataIsPrior)
{
    Ar1Model m;
    m.rho = 1.5;
    m.kernel_low = KernelSpec::isotropic(1, 0.8, 1.0);
    m.kernel_delta = KernelSpec::isotropic(1, 0.3, 1.0);
    m.data_low = Dataset::empty(1, 0.1);
    m.data_high = Dataset::empty(1, 0.1);
    const Prediction p = ar1_predict(m, Eigen::VectorXd::Constant(1, 0.4));
    EXPECT_EQ(p.mean, 0.0);
    EXPECT_NEAR(p.std * p.std, 1.5 * 1.5 * 0.8 + 0.3, 1e-14);
    EXPECT_NEAR(m.prior_variance(), 1.5 * 1.5 * 0.8 + 0.3, 1e-14);
}

TEST(Ar1Predict, DegeneratesToPooledGp)
{
    Random r(3);
    Ar1Model m;
    m.rho = 1.0;
    m.kernel_low = KernelSpec::isotropic(2, 1.0, 0.4);
    m.kernel_delta = KernelSpec::isotropic(2, 1e-14, 0.4);
    m.data_low.inputs = r.points(4, 2);
    m.data_low.outputs = r.values(4);
    m.data_low.noise_variance = 0.02;
    m.data_high.inputs = r.points(3, 2);
    m.data_high.outputs = r.values(3);
    m.data_high.noise_variance = 0.02;
    const GpPosterior pooled = GpPosterior::fit(m.kernel_low, m.data_low.concatenated(m.data_high));
    const Ar1Posterior post = Ar1Posterior::fit(m);
    for (int i = 0; i < 10; ++i) {
        const Eigen::Vector2d x(r(), r());
        const Prediction a = post.predict(x);
        const Prediction b = pooled.predict(x);
        EXPECT_NEAR(a.mean, b.mean, 1e-9);
        EXPECT_NEAR(a.std, b.std, 1e-6);
    }
}

TEST(Ar1Predict, MatchesDenseJointConditioning)
{
    Random r(4);
    for (int rep = 0; rep < 40; ++rep) {
        oracle::Ar1Instance o;
        o.rho = 4.0 * r() - 1.0;
        o.v_low2 = 0.3 + 2.0 * r();
        o.ls_low = Eigen::Vector3d(0.2 + r(), 0.2 + r(), 0.2 + r());
        o.v_delta2 = 0.05 + r();
        o.ls_delta = Eigen::Vector3d(0.2 + r(), 0.2 + r(), 0.2 + r());
        o.noise_low = 1e-3 + 0.2 * r();
        o.noise_high = 1e-3 + 0.2 * r();
        const int nl = rep % 5, nh = (rep / 5) % 5;
        o.X_low = r.points(nl, 3);
        o.X_high = r.points(nh, 3);
        const Eigen::VectorXd yl = r.values(nl), yh = r.values(nh);
        const Ar1Posterior post = Ar1Posterior::fit(model_from(o, yl, yh));
        for (int q = 0; q < 3; ++q) {
            const Eigen::Vector3d x(r(), r(), r());
            const oracle::Moments ref = oracle::ar1_condition(o, yl, yh, x);
            const Prediction p = post.predict(x);
            EXPECT_NEAR(p.mean, ref.mean, 1e-8);
            EXPECT_NEAR(p.std, ref.std, 1e-8);
        }
    }
}

TEST(Ar1Fit, RecoversScaleFromSyntheticHighData)
{
    Random r(5);
    const Eigen::MatrixXd X = r.points(20, 1);
    auto f_low = [](double x) { return std::sin(4.0 * x) + 0.5 * x; };
    Dataset low = Dataset::empty(1, 1e-4), high = Dataset::empty(1, 1e-4);
    for (int i = 0; i < 20; ++i) {
        low = low.appended(X.row(i).transpose(), f_low(X(i, 0)));
        const double xh = r();
        high = high.appended(Eigen::VectorXd::Constant(1, xh), 2.0 * f_low(xh));
    }
    Ar1FitConfig cfg;
    cfg.kernel_low = KernelSpec::isotropic(1, 1.0, 0.3);
    cfg.noise_low = 1e-4;
    cfg.delta_prior = KernelSpec::isotropic(1, 0.01, 0.3);
    const Ar1Model m = fit_ar1_hyperparameters(low, high, cfg);
    EXPECT_NEAR(m.rho, 2.0, 0.1);
}

TEST(Ar1Fit, NoHighPointsKeepsDefaults)
{
    Random r(6);
    Dataset low = Dataset::empty(1, 0.01);
    for (int i = 0; i < 6; ++i)
        low = low.appended(Eigen::VectorXd::Constant(1, r()), r());
    Ar1FitConfig cfg;
    cfg.kernel_low = KernelSpec::isotropic(1, 1.0, 0.3);
    cfg.default_rho = 0.7;
    cfg.delta_prior = KernelSpec::isotropic(1, 0.2, 0.4);
    cfg.min_high_points_for_delta_fit = 2;
    const Ar1Model m = fit_ar1_hyperparameters(low, Dataset::empty(1, 0.01), cfg);
    EXPECT_EQ(m.rho, 0.7);
    EXPECT_EQ(m.kernel_delta.signal_variance, 0.2);
    EXPECT_EQ(m.kernel_delta.lengthscales, cfg.delta_prior.lengthscales);
}

TEST(Ar1Fit, DeterministicRefit)
{
    Random r(7);
    Dataset low = Dataset::empty(2, 0.01), high = Dataset::empty(2, 0.01);
    for (int i = 0; i < 15; ++i)
        low = low.appended(Eigen::Vector2d(r(), r()), r());
    for (int i = 0; i < 5; ++i)
        high = high.appended(Eigen::Vector2d(r(), r()), r());
    Ar1FitConfig cfg;
    cfg.low_search.initial = KernelSpec::isotropic(2, 1.0, 0.5);
    cfg.low_search.bounds = bounds_for_box(Eigen::Vector2d::Zero(), Eigen::Vector2d::Ones());
    cfg.low_search.seed = 11;
    cfg.delta_prior = KernelSpec::isotropic(2, 0.1, 0.5);
    cfg.delta_bounds = cfg.low_search.bounds;
    cfg.min_high_points_for_delta_fit = 3;
    const Ar1Model a = fit_ar1_hyperparameters(low, high, cfg);
    const Ar1Model b = fit_ar1_hyperparameters(low, high, cfg);
    EXPECT_EQ(a.rho, b.rho);
    EXPECT_EQ(a.kernel_low.lengthscales, b.kernel_low.lengthscales);
    EXPECT_EQ(a.kernel_delta.signal_variance, b.kernel_delta.signal_variance);
    EXPECT_EQ(a.noise_low(), b.noise_low());
}

TEST(Ar1Fit, RepeatNoiseEstimate)
{
    Dataset d = Dataset::empty(1, 0.0);
    d = d.appended(Eigen::VectorXd::Zero(1), 1.0).appended(Eigen::VectorXd::Zero(1), 1.4);
    d = d.appended(Eigen::VectorXd::Ones(1), 0.0).appended(Eigen::VectorXd::Ones(1), -0.2);
    d = d.appended(Eigen::VectorXd::Constant(1, 5.0), 3.0);
    const auto v = estimate_repeat_noise(d, 1e-9);
    ASSERT_TRUE(v.has_value());
    // Pairs differ by 0.4 and 0.2: half the mean square is (0.16 + 0.04) / 4.
    EXPECT_NEAR(*v, 0.05, 1e-15);
    EXPECT_FALSE(estimate_repeat_noise(Dataset::empty(1, 0.0).appended(Eigen::VectorXd::Zero(1), 1.0), 1e-9));
}

TEST(Ar1Fit, RhoLeastSquares)
{
    EXPECT_NEAR(fit_rho(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(2, 4, 6), 1.0, 0.0, 5.0), 2.0, 1e-15);
    EXPECT_EQ(fit_rho(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(-2, -4, -6), 1.0, 0.0, 5.0), 0.0);
    EXPECT_EQ(fit_rho(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1), 0.5, 0.0, 5.0), 0.5);
    EXPECT_EQ(fit_rho(Eigen::Vector2d::Zero(), Eigen::Vector2d::Ones(), 0.5, 0.0, 5.0), 0.5);
    EXPECT_THROW(fit_rho(Eigen::Vector2d::Zero(), Eigen::Vector3d::Ones(), 0.5, 0.0, 5.0), InvalidInput);
}
