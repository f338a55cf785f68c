#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "mftune/bayes_opt.hpp"
#include "mftune/errors.hpp"
#include "mftune/rng.hpp"

using namespace mftune;

TEST(Beta, PaperDomainFirstIteration)
{
    EXPECT_NEAR(beta_schedule(1, 1331, 0.1), 19.988, 1e-3);
}

TEST(Beta, UnitArgumentGivesZero)
{
    const double delta = std::numbers::pi * std::numbers::pi / 6.0;
    EXPECT_NEAR(beta_schedule(1, 1, delta), 0.0, 1e-15);
}

TEST(Beta, StrictlyIncreasing)
{
    for (int t = 1; t < 50; ++t)
        EXPECT_LT(beta_schedule(t, 1331, 0.1), beta_schedule(t + 1, 1331, 0.1));
}

TEST(Beta, OverrideAndValidation)
{
    UcbConfig c;
    c.beta_override = 2.0;
    EXPECT_EQ(c.beta(7, 1331), 2.0);
    c.delta = 1.5;
    EXPECT_THROW(c.validate(), InvalidInput);
}

TEST(Ucb, HandEvaluatedExample)
{
    EXPECT_EQ(ucb_select(Eigen::Vector2d(0.0, 0.5), Eigen::Vector2d(1.0, 0.1), 1.0), 0u);
}

TEST(Ucb, ZeroStdExploits)
{
    EXPECT_EQ(ucb_select(Eigen::Vector3d(0.1, 0.7, 0.3), Eigen::Vector3d::Zero(), 25.0), 1u);
}

TEST(Ucb, TranslationInvariant)
{
    const Eigen::VectorXd mu = Eigen::VectorXd::LinSpaced(7, -1.0, 1.0).array().sin();
    const Eigen::VectorXd sd = Eigen::VectorXd::LinSpaced(7, 0.5, 0.1);
    const std::size_t a = ucb_select(mu, sd, 3.0);
    EXPECT_EQ(ucb_select((mu.array() + 41.5).matrix(), sd, 3.0), a);
}

TEST(Ucb, TiesGoToLowestIndex)
{
    EXPECT_EQ(ucb_select(Eigen::Vector3d(1, 1, 1), Eigen::Vector3d(0, 0, 0), 1.0), 0u);
}

TEST(Regret, OptimalPlay)
{
    const std::vector<double> f{5.0, 5.0};
    const RegretSeries r = regret_trace(f, 5.0);
    EXPECT_EQ(r.instantaneous, (std::vector<double>{0.0, 0.0}));
    EXPECT_EQ(r.cumulative.back(), 0.0);
}

TEST(Regret, HandArithmetic)
{
    const std::vector<double> f{3.0, 3.0, 5.0};
    const RegretSeries r = regret_trace(f, 5.0);
    EXPECT_EQ(r.instantaneous, (std::vector<double>{2.0, 2.0, 0.0}));
    EXPECT_EQ(r.cumulative, (std::vector<double>{2.0, 4.0, 4.0}));
    EXPECT_EQ(r.best, (std::vector<double>{2.0, 2.0, 0.0}));
}

TEST(Regret, CumulativeDominatesBest)
{
    CounterRng rng(5);
    std::vector<double> f;
    for (int i = 0; i < 30; ++i)
        f.push_back(-uniform01(rng));
    const RegretSeries r = regret_trace(f, 0.0);
    for (std::size_t t = 0; t < f.size(); ++t)
        EXPECT_GE(r.cumulative[t], r.best[t]);
}

TEST(Regret, RejectsValueAboveOptimum)
{
    const std::vector<double> f{1.0, 2.0};
    EXPECT_THROW(regret_trace(f, 1.5), InconsistencyError);
}

TEST(Grid, PaperDefaultEnumeration)
{
    const DesignGrid g = DesignGrid::paper_default();
    ASSERT_EQ(g.size(), 1331u);
    EXPECT_NEAR(g.point(0)[0], 0.25, 1e-15);
    EXPECT_NEAR(g.point(0)[1], 0.85, 1e-15);
    EXPECT_NEAR(g.point(0)[2], 0.02, 1e-15);
    EXPECT_NEAR(g.point(1330)[0], 0.45, 1e-15);
    EXPECT_NEAR(g.point(1330)[1], 0.95, 1e-15);
    EXPECT_NEAR(g.point(1330)[2], 0.22, 1e-15);
    // Linear index ((i1 * 11) + i2) * 11 + i3.
    const Eigen::VectorXd p = g.point((3 * 11 + 5) * 11 + 7);
    EXPECT_NEAR(p[0], 0.25 + 3 * 0.02, 1e-12);
    EXPECT_NEAR(p[1], 0.85 + 5 * 0.01, 1e-12);
    EXPECT_NEAR(p[2], 0.02 + 7 * 0.02, 1e-12);
    EXPECT_NEAR(g.spacing()[1], 0.01, 1e-15);
}

TEST(Standardizer, SampleMoments)
{
    const Standardizer s = Standardizer::from_outputs(Eigen::Vector3d(1.0, 2.0, 3.0));
    EXPECT_DOUBLE_EQ(s.offset, 2.0);
    EXPECT_DOUBLE_EQ(s.scale, 1.0);
    const Standardizer c = Standardizer::from_outputs(Eigen::Vector2d(4.0, 4.0));
    EXPECT_EQ(c.scale, 1.0);
    const Standardizer w{1.0, 2.0};
    EXPECT_DOUBLE_EQ(w.from_model(w.to_model(7.5)), 7.5);
    EXPECT_DOUBLE_EQ(w.variance_to_model(4.0), 1.0);
}

TEST(Formulation, Names)
{
    EXPECT_EQ(parse_formulation("mff"), Formulation::MFF);
    EXPECT_EQ(parse_formulation("csf"), Formulation::CSF);
    EXPECT_EQ(to_string(Formulation::LSF), "lsf");
    EXPECT_THROW(parse_formulation("xyz"), InvalidInput);
}

namespace {

// Smooth synthetic objective on a small grid with noisy evaluations.
struct Synthetic {
    DesignGrid grid{{{0.0, 1.0, 5}, {0.0, 1.0, 5}, {0.0, 1.0, 4}}};
    double noise = 1e-4;

    double f(const Eigen::VectorXd& x) const
    {
        return -std::pow(x[0] - 0.6, 2) - 0.5 * std::pow(x[1] - 0.3, 2) - 0.2 * std::pow(x[2] - 0.7, 2);
    }
    double f_star() const
    {
        double best = -1e300;
        for (std::size_t i = 0; i < grid.size(); ++i)
            best = std::max(best, f(grid.point(i)));
        return best;
    }
    std::vector<Dataset> history(int m, int n, std::uint64_t seed) const
    {
        CounterRng rng(seed);
        std::vector<Dataset> out;
        for (int k = 0; k < m; ++k) {
            Dataset d = Dataset::empty(3, noise);
            for (int i = 0; i < n; ++i) {
                const std::size_t idx = rng() % grid.size();
                d = d.appended(grid.point(idx), f(grid.point(idx)) + 0.01 * (uniform01(rng) - 0.5));
            }
            out.push_back(d);
        }
        return out;
    }
    Oracle oracle(CounterRng& rng) const
    {
        return [this, &rng](std::size_t idx) {
            const double truth = f(grid.point(idx));
            return Observation{truth + 0.01 * (uniform01(rng) - 0.5), truth, false};
        };
    }
};

SurrogateSettings settings_for(const Synthetic& s, const std::vector<Dataset>& history)
{
    Dataset pooled = Dataset::empty(3, s.noise);
    for (const Dataset& d : history)
        pooled = pooled.concatenated(d);
    SurrogateSettings out;
    out.standardizer = Standardizer::from_outputs(pooled.outputs);
    out.noise_variance = s.noise;
    out.single_fidelity_kernel = KernelSpec::isotropic(3, 1.0, 0.4);
    out.ar1.kernel_low = out.single_fidelity_kernel;
    out.ar1.noise_low = out.standardizer->variance_to_model(s.noise);
    out.ar1.rho_min = 1.0;
    out.ar1.rho_max = 1.0;
    out.ar1.default_rho = 1.0;
    out.ar1.delta_prior = KernelSpec::isotropic(3, 1e-14, 0.4);
    return out;
}

} // namespace

TEST(RunFormulation, LsfSingleStepTieBreak)
{
    const Synthetic s;
    SurrogateSettings set = settings_for(s, {});
    set.standardizer = Standardizer{};
    UcbConfig ucb;
    ucb.horizon = 1;
    CounterRng rng(1), noise(2);
    const FormulationRun run =
        run_formulation(Formulation::LSF, {}, s.oracle(noise), s.grid, ucb, set, s.f_star(), rng);
    ASSERT_EQ(run.trace.size(), 1u);
    EXPECT_EQ(run.trace.indices[0], 0u);
}

TEST(RunFormulation, MffDegeneratesToPooledSingleFidelity)
{
    const Synthetic s;
    const std::vector<Dataset> hist = s.history(3, 8, 9);
    const SurrogateSettings set = settings_for(s, hist);
    UcbConfig ucb;
    ucb.horizon = 8;
    CounterRng rng_a(3), noise_a(4), rng_b(3), noise_b(4);
    const FormulationRun mff =
        run_formulation(Formulation::MFF, hist, s.oracle(noise_a), s.grid, ucb, set, s.f_star(), rng_a);
    const FormulationRun csf =
        run_formulation(Formulation::CSF, hist, s.oracle(noise_b), s.grid, ucb, set, s.f_star(), rng_b);
    EXPECT_EQ(mff.trace.indices, csf.trace.indices);
    EXPECT_EQ(mff.trace.cumulative, csf.trace.cumulative);
}

TEST(RunFormulation, TraceHasRegretFields)
{
    const Synthetic s;
    const std::vector<Dataset> hist = s.history(2, 6, 10);
    const SurrogateSettings set = settings_for(s, hist);
    UcbConfig ucb;
    ucb.horizon = 5;
    for (Formulation kind : {Formulation::MFF, Formulation::CSF, Formulation::LSF}) {
        CounterRng rng(1), noise(2);
        const FormulationRun run = run_formulation(kind, hist, s.oracle(noise), s.grid, ucb, set, s.f_star(), rng);
        ASSERT_EQ(run.trace.size(), 5u);
        EXPECT_TRUE(run.trace.complete);
        double sum = 0.0;
        for (std::size_t t = 0; t < 5; ++t) {
            EXPECT_NEAR(run.trace.instantaneous[t], s.f_star() - run.trace.truth[t], 1e-15);
            sum += run.trace.instantaneous[t];
            EXPECT_NEAR(run.trace.cumulative[t], sum, 1e-15);
        }
    }
}

TEST(RunFormulation, OracleFailureEndsRunIncomplete)
{
    const Synthetic s;
    const std::vector<Dataset> hist = s.history(2, 6, 11);
    const SurrogateSettings set = settings_for(s, hist);
    UcbConfig ucb;
    ucb.horizon = 6;
    int calls = 0;
    const Oracle failing = [&](std::size_t idx) {
        if (++calls == 3)
            throw std::runtime_error("plant unavailable");
        return Observation{s.f(s.grid.point(idx)), s.f(s.grid.point(idx)), false};
    };
    CounterRng rng(1);
    const FormulationRun run = run_formulation(Formulation::CSF, hist, failing, s.grid, ucb, set, s.f_star(), rng);
    EXPECT_FALSE(run.trace.complete);
    EXPECT_EQ(run.trace.size(), 2u);
    EXPECT_EQ(run.trace.failure, "plant unavailable");
}

TEST(RunFormulation, MffNeedsHistory)
{
    const Synthetic s;
    const SurrogateSettings set = settings_for(s, {});
    CounterRng rng(1), noise(2);
    EXPECT_THROW(run_formulation(Formulation::MFF, {}, s.oracle(noise), s.grid, UcbConfig{}, set, s.f_star(), rng),
                 InvalidInput);
}

TEST(RunFormulation, KeepsFinalModel)
{
    const Synthetic s;
    const std::vector<Dataset> hist = s.history(2, 6, 12);
    const SurrogateSettings set = settings_for(s, hist);
    UcbConfig ucb;
    ucb.horizon = 4;
    CounterRng rng(1), noise(2);
    RunOptions opt;
    opt.keep_final_model = true;
    const FormulationRun run =
        run_formulation(Formulation::MFF, hist, s.oracle(noise), s.grid, ucb, set, s.f_star(), rng, opt);
    ASSERT_TRUE(run.final_model.has_value());
    EXPECT_EQ(run.final_model->data_high.size(), 4);
    EXPECT_EQ(run.final_model->data_low.size(), 12);
}
