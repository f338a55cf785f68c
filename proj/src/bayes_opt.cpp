#include "mftune/bayes_opt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mftune/errors.hpp"

namespace mftune {

DesignGrid::DesignGrid(std::vector<GridAxis> axes) : axes_(std::move(axes))
{
    if (axes_.empty())
        throw InvalidInput("design grid needs at least one axis");
    Eigen::Index total = 1;
    for (const GridAxis& a : axes_) {
        if (a.count < 1)
            throw InvalidInput("every grid axis needs at least one point");
        if (!std::isfinite(a.lower) || !std::isfinite(a.upper) || a.upper < a.lower)
            throw InvalidInput("grid axis bounds must be finite with lower <= upper");
        total *= a.count;
    }
    const auto dim = static_cast<Eigen::Index>(axes_.size());
    points_.resize(total, dim);
    for (Eigen::Index idx = 0; idx < total; ++idx) {
        Eigen::Index rem = idx;
        for (Eigen::Index j = dim - 1; j >= 0; --j) {
            const GridAxis& a = axes_[static_cast<std::size_t>(j)];
            const Eigen::Index k = rem % a.count;
            rem /= a.count;
            points_(idx, j) = a.count == 1 ? a.lower : a.lower + (a.upper - a.lower) * static_cast<double>(k) /
                                                                     static_cast<double>(a.count - 1);
        }
    }
}

DesignGrid DesignGrid::paper_default()
{
    return DesignGrid({{0.25, 0.45, 11}, {0.85, 0.95, 11}, {0.02, 0.22, 11}});
}

Eigen::VectorXd DesignGrid::lower() const
{
    Eigen::VectorXd v(dimension());
    for (Eigen::Index j = 0; j < dimension(); ++j)
        v[j] = axes_[static_cast<std::size_t>(j)].lower;
    return v;
}

Eigen::VectorXd DesignGrid::upper() const
{
    Eigen::VectorXd v(dimension());
    for (Eigen::Index j = 0; j < dimension(); ++j)
        v[j] = axes_[static_cast<std::size_t>(j)].upper;
    return v;
}

Eigen::VectorXd DesignGrid::spacing() const
{
    Eigen::VectorXd v(dimension());
    for (Eigen::Index j = 0; j < dimension(); ++j) {
        const GridAxis& a = axes_[static_cast<std::size_t>(j)];
        v[j] = a.count > 1 ? (a.upper - a.lower) / (a.count - 1) : 0.0;
    }
    return v;
}

void UcbConfig::validate() const
{
    if (!(delta > 0.0 && delta < 1.0))
        throw InvalidInput("UCB delta must lie in (0, 1)");
    if (horizon < 1)
        throw InvalidInput("UCB horizon must be at least 1");
    if (beta_override && !(*beta_override >= 0.0))
        throw InvalidInput("beta override must be non-negative");
}

double UcbConfig::beta(int t, std::size_t domain_size) const
{
    if (beta_override)
        return *beta_override;
    return beta_schedule(t, domain_size, delta);
}

double beta_schedule(int t, std::size_t domain_size, double delta)
{
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw InvalidInput("beta schedule needs a positive delta");
    if (t < 1)
        throw InvalidInput("beta schedule iteration must be >= 1");
    if (domain_size < 1)
        throw InvalidInput("beta schedule needs a non-empty domain");
    const double tt = static_cast<double>(t);
    return 2.0 * std::log(static_cast<double>(domain_size) * tt * tt * std::numbers::pi * std::numbers::pi /
                          (6.0 * delta));
}

std::size_t ucb_select(const Eigen::VectorXd& mean, const Eigen::VectorXd& std, double beta)
{
    if (mean.size() == 0)
        throw InvalidInput("UCB selection over an empty grid");
    if (mean.size() != std.size())
        throw InvalidInput("mean and std arrays differ in length");
    if (!(beta >= 0.0))
        throw InvalidInput("beta must be non-negative");
    const double root_beta = std::sqrt(beta);
    std::size_t best = 0;
    double best_score = mean[0] + root_beta * std[0];
    for (Eigen::Index i = 1; i < mean.size(); ++i) {
        const double score = mean[i] + root_beta * std[i];
        if (score > best_score) {
            best_score = score;
            best = static_cast<std::size_t>(i);
        }
    }
    return best;
}

RegretSeries regret_trace(std::span<const double> truth, double f_star)
{
    RegretSeries s;
    s.instantaneous.reserve(truth.size());
    double running = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (const double f : truth) {
        if (f > f_star + 1e-9)
            throw InconsistencyError("a chosen value exceeds the supplied optimum f*");
        const double r = std::max(0.0, f_star - f);
        running += r;
        best = std::min(best, r);
        s.instantaneous.push_back(r);
        s.cumulative.push_back(running);
        s.best.push_back(best);
    }
    return s;
}

void assign_regret(RegretTrace& trace, double f_star)
{
    RegretSeries s = regret_trace(trace.truth, f_star);
    trace.f_star = f_star;
    trace.instantaneous = std::move(s.instantaneous);
    trace.cumulative = std::move(s.cumulative);
    trace.best = std::move(s.best);
}

Standardizer Standardizer::from_outputs(const Eigen::VectorXd& y)
{
    Standardizer s;
    if (y.size() == 0)
        return s;
    s.offset = y.mean();
    if (y.size() >= 2) {
        const double var = (y.array() - s.offset).square().sum() / static_cast<double>(y.size() - 1);
        if (var > 0.0 && std::isfinite(var))
            s.scale = std::sqrt(var);
    }
    return s;
}

Dataset Standardizer::to_model(const Dataset& data) const
{
    Dataset d = data;
    d.outputs = (data.outputs.array() - offset) / scale;
    d.noise_variance = variance_to_model(data.noise_variance);
    return d;
}

std::string_view to_string(Formulation kind)
{
    switch (kind) {
    case Formulation::MFF:
        return "mff";
    case Formulation::CSF:
        return "csf";
    case Formulation::LSF:
        return "lsf";
    }
    return "?";
}

Formulation parse_formulation(std::string_view name)
{
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "mff")
        return Formulation::MFF;
    if (lower == "csf")
        return Formulation::CSF;
    if (lower == "lsf")
        return Formulation::LSF;
    throw InvalidInput("unknown formulation '" + std::string(name) + "' (expected mff, csf or lsf)");
}

namespace {

Dataset pool(std::span<const Dataset> sets, Eigen::Index dim, double noise_variance)
{
    Dataset pooled = Dataset::empty(dim, noise_variance);
    for (const Dataset& d : sets)
        pooled = pooled.concatenated(d);
    pooled.noise_variance = noise_variance;
    return pooled;
}

} // namespace

FormulationRun run_formulation(Formulation kind, std::span<const Dataset> previous, const Oracle& oracle,
                               const DesignGrid& grid, const UcbConfig& ucb, const SurrogateSettings& settings,
                               double f_star, CounterRng& rng, const RunOptions& options)
{
    ucb.validate();
    const Eigen::Index dim = grid.dimension();
    for (const Dataset& d : previous) {
        d.validate();
        if (d.size() > 0 && d.dimension() != dim)
            throw InvalidInput("previous operator data does not match the grid dimension");
    }

    const Dataset history = pool(previous, dim, settings.noise_variance);
    if (kind == Formulation::MFF && history.size() == 0)
        throw InvalidInput("MFF needs previous operator data for the low fidelity");

    FormulationRun run;
    RegretTrace& trace = run.trace;
    Dataset own = Dataset::empty(dim, settings.noise_variance);

    for (int t = 1; t <= ucb.horizon; ++t) {
        BatchPrediction pred;
        switch (kind) {
        case Formulation::MFF: {
            const Standardizer s = settings.standardizer.value_or(
                Standardizer::from_outputs(history.concatenated(own).outputs));
            Ar1FitConfig cfg = settings.ar1;
            cfg.seed = rng();
            Ar1Model model = fit_ar1_hyperparameters(s.to_model(history), s.to_model(own), cfg);
            pred = Ar1Posterior::fit(std::move(model)).predict_all(grid.points());
            break;
        }
        case Formulation::CSF: {
            const Dataset pooled = history.concatenated(own);
            const Standardizer s = settings.standardizer.value_or(Standardizer::from_outputs(pooled.outputs));
            pred = GpPosterior::fit(settings.single_fidelity_kernel, s.to_model(pooled)).predict_all(grid.points());
            break;
        }
        case Formulation::LSF: {
            const Standardizer s = settings.standardizer.value_or(Standardizer::from_outputs(own.outputs));
            pred = GpPosterior::fit(settings.single_fidelity_kernel, s.to_model(own)).predict_all(grid.points());
            break;
        }
        }

        const std::size_t index = ucb_select(pred.mean, pred.std, ucb.beta(t, grid.size()));
        Observation obs;
        try {
            obs = oracle(index);
        } catch (const std::exception& e) {
            trace.complete = false;
            trace.failure = e.what();
            break;
        }
        if (!std::isfinite(obs.observed)) {
            trace.complete = false;
            trace.failure = "oracle returned a non-finite observation";
            break;
        }
        const Eigen::VectorXd x = grid.point(index);
        trace.indices.push_back(index);
        trace.points.push_back(x);
        trace.observed.push_back(obs.observed);
        trace.truth.push_back(obs.truth);
        trace.diverged.push_back(obs.diverged);
        own = own.appended(x, obs.observed);
    }

    if (kind == Formulation::MFF && options.keep_final_model) {
        const Standardizer s =
            settings.standardizer.value_or(Standardizer::from_outputs(history.concatenated(own).outputs));
        Ar1FitConfig cfg = settings.ar1;
        cfg.seed = rng();
        run.final_model = fit_ar1_hyperparameters(s.to_model(history), s.to_model(own), cfg);
        run.final_standardizer = s;
    }

    assign_regret(trace, f_star);
    return run;
}

} // namespace mftune
