#include "mftune/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include <spdlog/spdlog.h>

#include "mftune/ar1.hpp"
#include "mftune/errors.hpp"
#include "mftune/hyperparameters.hpp"

namespace mftune {

namespace {

// Stream identifiers below a trial's key.
constexpr std::uint64_t kHistoryStream = 1;
constexpr std::uint64_t kOperatorStream = 2;
constexpr std::uint64_t kFitStream = 3;
constexpr std::uint64_t kFormulationStream = 16;

std::uint64_t formulation_stream(Formulation kind)
{
    return kFormulationStream + static_cast<std::uint64_t>(kind);
}

std::vector<std::size_t> draw_indices(std::size_t grid_size, int count, bool without_replacement, CounterRng& rng)
{
    std::vector<std::size_t> out;
    out.reserve(static_cast<std::size_t>(count));
    if (without_replacement) {
        // Partial Fisher-Yates over the index range.
        std::vector<std::size_t> pool(grid_size);
        for (std::size_t i = 0; i < grid_size; ++i)
            pool[i] = i;
        for (int k = 0; k < count; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            std::uniform_int_distribution<std::size_t> pick(kk, grid_size - 1);
            std::swap(pool[kk], pool[pick(rng)]);
            out.push_back(pool[kk]);
        }
    } else {
        std::uniform_int_distribution<std::size_t> pick(0, grid_size - 1);
        for (int k = 0; k < count; ++k)
            out.push_back(pick(rng));
    }
    return out;
}

Dataset pooled_history(const std::vector<OperatorHistory>& history, Eigen::Index dim, double noise)
{
    Dataset pooled = Dataset::empty(dim, noise);
    for (const OperatorHistory& h : history)
        pooled = pooled.concatenated(h.data);
    pooled.noise_variance = noise;
    return pooled;
}

HyperparameterBounds search_bounds(const SurrogateConfig& s, const DesignGrid& grid)
{
    HyperparameterBounds b =
        bounds_for_box(grid.lower(), grid.upper(), s.lengthscale_min_fraction, s.lengthscale_max_fraction);
    b.min_signal_variance = s.min_signal_variance;
    b.max_signal_variance = s.max_signal_variance;
    return b;
}

HyperparameterSearch make_search(const SurrogateConfig& s, const DesignGrid& grid, const KernelSpec& initial,
                                 std::uint64_t seed)
{
    HyperparameterSearch search;
    search.initial = initial;
    search.bounds = search_bounds(s, grid);
    search.starts = s.search_starts;
    search.seed = seed;
    return search;
}

struct Moments {
    double mean = 0.0;
    double std = 0.0;
};

// Two-pass mean and sample standard deviation.
Moments moments(const std::vector<double>& v)
{
    Moments m;
    if (v.empty())
        return m;
    for (double x : v)
        m.mean += x;
    m.mean /= static_cast<double>(v.size());
    if (v.size() < 2)
        return m;
    double ss = 0.0;
    for (double x : v)
        ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    return m;
}

} // namespace

HriPlant build_experiment_plant(const ExperimentConfig& config, const OperatorGains& gains,
                                const Eigen::VectorXd& disturbance)
{
    return build_plant(config.dof, gains, config.q_diagonal.asDiagonal().toDenseMatrix(),
                       config.r_diagonal.asDiagonal().toDenseMatrix(), default_initial_conditions(config.dof),
                       disturbance);
}

std::vector<OperatorHistory> generate_history(const ExperimentConfig& config, const DesignGrid& grid,
                                              CounterRng& rng)
{
    const Eigen::VectorXd d =
        config.disturb_history ? config.active_disturbance() : Eigen::VectorXd::Zero(3 * config.dof);
    std::vector<OperatorHistory> out;
    out.reserve(static_cast<std::size_t>(config.previous_operators));
    for (int i = 0; i < config.previous_operators; ++i) {
        OperatorHistory h;
        h.gains = sample_operator(rng, config.operators);
        const HriPlant plant = build_experiment_plant(config, h.gains, d);
        h.indices = draw_indices(grid.size(), config.points_per_operator, config.history_without_replacement, rng);
        h.data = Dataset::empty(grid.dimension(), config.noise_variance);
        h.data.inputs.resize(static_cast<Eigen::Index>(h.indices.size()), grid.dimension());
        h.data.outputs.resize(static_cast<Eigen::Index>(h.indices.size()));
        for (std::size_t k = 0; k < h.indices.size(); ++k) {
            const Eigen::Vector3d x = grid.point(h.indices[k]);
            h.data.inputs.row(static_cast<Eigen::Index>(k)) = x.transpose();
            h.data.outputs[static_cast<Eigen::Index>(k)] =
                performance_sample(plant, x, config.noise_variance, rng, config.integration);
        }
        out.push_back(std::move(h));
    }
    return out;
}

GridEvaluation evaluate_grid(const HriPlant& plant, const DesignGrid& grid, const IntegrationSettings& settings)
{
    GridEvaluation g;
    g.performance.resize(static_cast<Eigen::Index>(grid.size()));
    g.diverged.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const CostResult r = performance(plant, Eigen::Vector3d(grid.point(i)), settings);
        g.performance[static_cast<Eigen::Index>(i)] = r.cost;
        g.diverged[i] = r.diverged;
        if (r.cost > g.performance[static_cast<Eigen::Index>(g.best_index)])
            g.best_index = i;
    }
    return g;
}

SurrogateFit fit_surrogates(const ExperimentConfig& config, const std::vector<OperatorHistory>& history,
                            const DesignGrid& grid, std::uint64_t seed)
{
    const SurrogateConfig& s = config.surrogate;
    const Eigen::Index dim = grid.dimension();
    const Dataset pooled = pooled_history(history, dim, config.noise_variance);

    SurrogateFit fit;
    fit.standardizer = Standardizer::from_outputs(pooled.outputs);
    fit.kernel_low = s.kernel_low;
    fit.noise_low = s.noise_low;
    fit.kernel_delta = s.kernel_delta;
    fit.single_fidelity_kernel = s.single_fidelity_kernel;
    if (!s.auto_fit || pooled.size() == 0)
        return fit;

    CounterRng rng(seed);
    const Standardizer& st = fit.standardizer;
    const Dataset z = st.to_model(pooled);

    // Low fidelity: kernel and xi_L^2 from the pooled history.
    std::optional<double> noise;
    if (s.low_noise == LowNoiseSource::Fixed)
        noise = s.noise_low;
    else if (s.low_noise == LowNoiseSource::Repeats) {
        noise = estimate_repeat_noise(z, 1e-9);
        fit.noise_low_from_repeats = noise.has_value();
    }
    HyperparameterSearch search = make_search(s, grid, s.kernel_low, rng());
    if (noise) {
        Dataset d = z;
        d.noise_variance = std::max(*noise, search.bounds.min_noise_variance);
        fit.kernel_low = fit_hyperparameters(std::span<const Dataset>(&d, 1), search).kernel;
        fit.noise_low = d.noise_variance;
    } else {
        search.fit_noise = true;
        const HyperparameterFit f = fit_hyperparameters(std::span<const Dataset>(&z, 1), search);
        fit.kernel_low = f.kernel;
        fit.noise_low = f.noise_variance;
    }

    // Operator-specific deviation: each previous operator in turn plays the new
    // operator against the others, and the delta kernel maximises the summed
    // predictive likelihood
    //   y_i ~ N(rho_i mu_L(X_i), rho_i^2 C_L(X_i) + k_d(X_i, X_i) + noise I)
    // where mu_L, C_L are the low-fidelity posterior without operator i.
    if (s.fit_delta && history.size() >= 2) {
        std::vector<Dataset> residuals;
        std::vector<Eigen::MatrixXd> base;
        for (std::size_t i = 0; i < history.size(); ++i) {
            std::vector<OperatorHistory> others;
            for (std::size_t j = 0; j < history.size(); ++j)
                if (j != i)
                    others.push_back(history[j]);
            const Dataset rest = st.to_model(pooled_history(others, dim, config.noise_variance));
            Dataset own = st.to_model(history[i].data);
            Eigen::MatrixXd K = kernel_matrix(fit.kernel_low, rest.inputs, rest.inputs);
            K.diagonal().array() += fit.noise_low;
            const Cholesky L = Cholesky::factor(K);
            const Eigen::MatrixXd cross = kernel_matrix(fit.kernel_low, rest.inputs, own.inputs);
            const Eigen::MatrixXd V = L.solve_lower(cross);
            const Eigen::VectorXd mean = cross.transpose() * L.solve(rest.outputs);
            Eigen::MatrixXd cov = kernel_matrix(fit.kernel_low, own.inputs, own.inputs) - V.transpose() * V;
            const double rho = fit_rho(mean, own.outputs, s.rho_default, s.rho_min, s.rho_max);
            own.outputs -= rho * mean;
            residuals.push_back(std::move(own));
            base.push_back(rho * rho * 0.5 * (cov + cov.transpose()));
        }
        const HyperparameterSearch dsearch = make_search(s, grid, s.kernel_delta, rng());
        fit.kernel_delta = fit_hyperparameters(residuals, base, dsearch).kernel;
    }

    switch (s.single_fidelity) {
    case SingleFidelitySource::LowKernel:
        fit.single_fidelity_kernel = fit.kernel_low;
        break;
    case SingleFidelitySource::Fit: {
        const HyperparameterSearch ssearch = make_search(s, grid, fit.kernel_low, rng());
        fit.single_fidelity_kernel = fit_hyperparameters(std::span<const Dataset>(&z, 1), ssearch).kernel;
        break;
    }
    case SingleFidelitySource::Fixed:
        break;
    }
    return fit;
}

SurrogateSettings surrogate_settings(const ExperimentConfig& config, const SurrogateFit& fit, const DesignGrid& grid)
{
    const SurrogateConfig& s = config.surrogate;
    SurrogateSettings out;
    if (s.standardize == StandardizeMode::History)
        out.standardizer = fit.standardizer;
    out.noise_variance = config.noise_variance;
    out.single_fidelity_kernel = fit.single_fidelity_kernel;
    out.ar1.kernel_low = fit.kernel_low;
    out.ar1.noise_low = fit.noise_low;
    out.ar1.default_rho = s.rho_default;
    out.ar1.rho_min = s.rho_min;
    out.ar1.rho_max = s.rho_max;
    out.ar1.delta_prior = fit.kernel_delta;
    out.ar1.min_high_points_for_delta_fit = s.delta_refit_min_points;
    out.ar1.delta_bounds = search_bounds(s, grid);
    return out;
}

TrialResult run_trial(const ExperimentConfig& config, const DesignGrid& grid, int trial)
{
    TrialResult result;
    result.trial = trial;
    const CounterRng trial_rng = CounterRng(config.seed).split(static_cast<std::uint64_t>(trial) + 1);
    try {
        CounterRng history_rng = trial_rng.split(kHistoryStream);
        const std::vector<OperatorHistory> history = generate_history(config, grid, history_rng);

        CounterRng operator_rng = trial_rng.split(kOperatorStream);
        result.gains = sample_operator(operator_rng, config.operators);
        const HriPlant plant = build_experiment_plant(config, result.gains, config.active_disturbance());
        const GridEvaluation truth = evaluate_grid(plant, grid, config.integration);
        result.f_star = truth.best();
        result.best_index = truth.best_index;
        if (config.disturbed) {
            const HriPlant calm = build_experiment_plant(config, result.gains, Eigen::VectorXd());
            const GridEvaluation undisturbed = evaluate_grid(calm, grid, config.integration);
            result.baseline_regret =
                result.f_star - truth.performance[static_cast<Eigen::Index>(undisturbed.best_index)];
        }

        CounterRng fit_rng = trial_rng.split(kFitStream);
        result.surrogate = fit_surrogates(config, history, grid, fit_rng());
        const SurrogateSettings settings = surrogate_settings(config, result.surrogate, grid);

        std::vector<Dataset> previous;
        for (const OperatorHistory& h : history)
            previous.push_back(h.data);

        const UcbConfig ucb{config.delta, config.horizon, config.beta_override};
        for (Formulation kind : config.formulations) {
            CounterRng run_rng = trial_rng.split(formulation_stream(kind));
            CounterRng noise_rng = run_rng.split(1);
            std::normal_distribution<double> noise(0.0, std::sqrt(config.noise_variance));
            const Oracle oracle = [&](std::size_t index) {
                const double f = truth.performance[static_cast<Eigen::Index>(index)];
                const double eta = config.noise_variance > 0.0 ? noise(noise_rng) : 0.0;
                return Observation{f + eta, f, truth.diverged[index]};
            };
            RunOptions options;
            options.keep_final_model = config.bounds.enabled && kind == Formulation::MFF;
            FormulationRun run =
                run_formulation(kind, previous, oracle, grid, ucb, settings, result.f_star, run_rng, options);
            if (!run.trace.complete) {
                result.complete = false;
                result.failure = std::string(to_string(kind)) + ": " + run.trace.failure;
            }
            if (run.final_model && run.trace.size() > 0) {
                const int T = static_cast<int>(run.trace.size());
                TrialBounds b;
                b.report = make_bound_report(*run.final_model, T, ucb.beta(T, grid.size()),
                                             settings.single_fidelity_kernel, config.bounds.low_noise_term);
                b.scale = run.final_standardizer ? run.final_standardizer->scale : 1.0;
                b.rho = run.final_model->rho;
                b.noise_low = run.final_model->noise_low();
                b.noise_high = run.final_model->noise_high();
                result.bounds = std::move(b);
            }
            result.runs.push_back({kind, std::move(run.trace)});
        }
    } catch (const std::exception& e) {
        result.complete = false;
        result.failure = e.what();
        spdlog::error("trial {} failed: {}", trial, e.what());
    }
    return result;
}

std::vector<AggregateRow> aggregate(const std::vector<TrialResult>& trials,
                                    const std::vector<Formulation>& formulations, int horizon)
{
    std::vector<AggregateRow> rows;
    for (Formulation kind : formulations) {
        for (int t = 1; t <= horizon; ++t) {
            AggregateRow row;
            row.kind = kind;
            row.iter = t;
            std::vector<double> cumulative, best, inst;
            for (const TrialResult& tr : trials) {
                for (const FormulationResult& fr : tr.runs) {
                    if (fr.kind != kind || fr.trace.size() < static_cast<std::size_t>(t))
                        continue;
                    const auto k = static_cast<std::size_t>(t - 1);
                    cumulative.push_back(fr.trace.cumulative[k]);
                    best.push_back(fr.trace.best[k]);
                    inst.push_back(fr.trace.instantaneous[k]);
                }
            }
            row.count = cumulative.size();
            const Moments c = moments(cumulative), b = moments(best), r = moments(inst);
            row.mean_cumulative = c.mean;
            row.std_cumulative = c.std;
            row.mean_best = b.mean;
            row.std_best = b.std;
            row.mean_instantaneous = r.mean;
            row.std_instantaneous = r.std;
            rows.push_back(row);
        }
    }
    return rows;
}

bool CampaignResult::all_complete() const
{
    return std::all_of(trials.begin(), trials.end(), [](const TrialResult& t) { return t.complete; });
}

CampaignResult run_campaign(const ExperimentConfig& config)
{
    config.validate();
    const DesignGrid grid = config.design_grid();
    CampaignResult out;
    out.config = config;
    out.trials.resize(static_cast<std::size_t>(config.trials));

    unsigned workers = config.threads > 0 ? static_cast<unsigned>(config.threads) : std::thread::hardware_concurrency();
    workers = std::clamp(workers, 1u, static_cast<unsigned>(config.trials));
    std::atomic<int> next{0};
    auto work = [&] {
        for (int t = next++; t < config.trials; t = next++) {
            out.trials[static_cast<std::size_t>(t)] = run_trial(config, grid, t);
            spdlog::info("trial {}/{} done", t + 1, config.trials);
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(work);
        for (std::thread& th : pool)
            th.join();
    }
    out.aggregates = aggregate(out.trials, config.formulations, config.horizon);
    return out;
}

} // namespace mftune
