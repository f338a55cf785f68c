// Command-line front end: tune, benchmark, bounds, simulate.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "mftune/bench.hpp"
#include "mftune/config.hpp"
#include "mftune/errors.hpp"
#include "mftune/output.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "mftune-out";
    std::string formulations;
    bool disturbed = false;
    std::optional<int> trials;
    std::optional<int> horizon;
    std::optional<int> threads;
    bool print_config = false;
    bool quiet = false;
};

void add_common(CLI::App* app, CommonOptions& o)
{
    app->add_option("--config", o.config_path, "JSON experiment config (default: built-in paper-default profile)")
        ->check(CLI::ExistingFile);
    app->add_option("--seed", o.seed, "campaign seed (overrides MFTUNE_SEED and the config)");
    app->add_option("--out", o.out_dir, "output directory")->capture_default_str();
    app->add_option("--formulations", o.formulations, "comma-separated subset of mff,csf,lsf");
    app->add_flag("--disturbed", o.disturbed, "apply the configured constant disturbance");
    app->add_option("--trials", o.trials, "number of Monte Carlo trials")->check(CLI::PositiveNumber);
    app->add_option("--horizon", o.horizon, "optimisation iterations T per run")->check(CLI::PositiveNumber);
    app->add_option("--threads", o.threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    app->add_flag("--print-config", o.print_config, "print the effective config as JSON and exit");
    app->add_flag("-q,--quiet", o.quiet, "only log warnings and errors");
}

std::vector<mftune::Formulation> parse_list(const std::string& text)
{
    std::vector<mftune::Formulation> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty())
            out.push_back(mftune::parse_formulation(item));
    if (out.empty())
        throw mftune::InvalidInput("--formulations needs at least one of mff, csf, lsf");
    return out;
}

mftune::ExperimentConfig resolve(const CommonOptions& o)
{
    mftune::ExperimentConfig c =
        o.config_path.empty() ? mftune::ExperimentConfig::paper_default() : mftune::load_config(o.config_path);
    if (auto env = mftune::seed_from_environment())
        c.seed = *env;
    if (o.seed)
        c.seed = *o.seed;
    if (!o.formulations.empty())
        c.formulations = parse_list(o.formulations);
    if (o.disturbed)
        c.disturbed = true;
    if (o.trials)
        c.trials = *o.trials;
    if (o.horizon)
        c.horizon = *o.horizon;
    if (o.threads)
        c.threads = *o.threads;
    return c;
}

void print_summary(const mftune::CampaignResult& r)
{
    const int T = r.config.horizon;
    for (mftune::Formulation kind : r.config.formulations) {
        for (const mftune::AggregateRow& row : r.aggregates) {
            if (row.kind != kind || row.iter != T)
                continue;
            std::cout << mftune::to_string(kind) << ": mean R_" << T << " = " << row.mean_cumulative << " (sd "
                      << row.std_cumulative << "), mean r*_" << T << " = " << row.mean_best << " (sd "
                      << row.std_best << ")\n";
        }
    }
}

int finish(const mftune::CampaignResult& r, const std::string& out_dir)
{
    const auto files = mftune::emit_outputs(r, out_dir);
    print_summary(r);
    for (const auto& f : files)
        std::cout << "wrote " << f.string() << '\n';
    if (!r.all_complete()) {
        for (const mftune::TrialResult& t : r.trials)
            if (!t.complete)
                std::cerr << "trial " << t.trial << " incomplete: " << t.failure << '\n';
        return 1;
    }
    return 0;
}

int run_simulate(const CommonOptions& o, double kd, double kp)
{
    const mftune::ExperimentConfig c = resolve(o);
    c.validate();
    const mftune::DesignGrid grid = c.design_grid();
    const mftune::HriPlant plant = mftune::build_experiment_plant(c, {kd, kp}, c.active_disturbance());
    std::filesystem::create_directories(o.out_dir);
    const std::filesystem::path path = std::filesystem::path(o.out_dir) / "simulate.csv";
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << "index,x1,x2,x3,J,performance,diverged_flag\n";
    std::size_t best = 0;
    double best_f = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Eigen::Vector3d x = grid.point(i);
        const mftune::CostResult r = mftune::evaluate_cost(plant, mftune::build_controller(x, c.dof), c.integration);
        out << i << ',' << mftune::format_number(x[0]) << ',' << mftune::format_number(x[1]) << ','
            << mftune::format_number(x[2]) << ',' << mftune::format_number(r.cost) << ','
            << mftune::format_number(-r.cost) << ',' << (r.diverged ? 1 : 0) << '\n';
        if (-r.cost > best_f) {
            best_f = -r.cost;
            best = i;
        }
    }
    const Eigen::Vector3d xb = grid.point(best);
    std::cout << "best performance " << best_f << " at x = (" << xb[0] << ", " << xb[1] << ", " << xb[2] << ")\n"
              << "wrote " << path.string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multi-fidelity Bayesian tuning of human-robot impedance controllers"};
    app.require_subcommand(1);

    CommonOptions bench_o, tune_o, bounds_o, sim_o;
    bool bench_bounds = false;
    int tune_trial = 0;
    double kd = 10.0, kp = 20.0;

    CLI::App* bench = app.add_subcommand("benchmark", "run the full Monte Carlo campaign");
    add_common(bench, bench_o);
    bench->add_flag("--bounds", bench_bounds, "also build the regret-bound report for every MFF run");

    CLI::App* tune = app.add_subcommand("tune", "single optimisation run with one formulation");
    add_common(tune, tune_o);
    tune->add_option("--trial", tune_trial, "trial index whose random streams are used")
        ->check(CLI::NonNegativeNumber);

    CLI::App* bounds = app.add_subcommand("bounds", "MFF runs with the information-gain and regret bounds");
    add_common(bounds, bounds_o);

    CLI::App* sim = app.add_subcommand("simulate", "evaluate the cost over the controller grid");
    add_common(sim, sim_o);
    sim->add_option("--kd", kd, "operator derivative gain")->capture_default_str();
    sim->add_option("--kp", kp, "operator proportional gain")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        const CommonOptions& active = bench->parsed()    ? bench_o
                                      : tune->parsed()   ? tune_o
                                      : bounds->parsed() ? bounds_o
                                                         : sim_o;
        spdlog::set_level(active.quiet ? spdlog::level::warn : spdlog::level::info);
        if (active.print_config) {
            std::cout << mftune::config_to_json(resolve(active));
            return 0;
        }

        if (bench->parsed()) {
            mftune::ExperimentConfig c = resolve(bench_o);
            if (bench_bounds)
                c.bounds.enabled = true;
            return finish(mftune::run_campaign(c), bench_o.out_dir);
        }
        if (tune->parsed()) {
            mftune::ExperimentConfig c = resolve(tune_o);
            if (tune_o.formulations.empty())
                c.formulations = {mftune::Formulation::MFF};
            if (c.formulations.size() != 1)
                throw mftune::InvalidInput("tune runs exactly one formulation");
            c.trials = tune_trial + 1;
            c.validate();
            mftune::CampaignResult r;
            r.config = c;
            r.config.trials = 1;
            r.trials.push_back(mftune::run_trial(c, c.design_grid(), tune_trial));
            r.aggregates = mftune::aggregate(r.trials, c.formulations, c.horizon);
            return finish(r, tune_o.out_dir);
        }
        if (bounds->parsed()) {
            mftune::ExperimentConfig c = resolve(bounds_o);
            c.formulations = {mftune::Formulation::MFF};
            c.bounds.enabled = true;
            const mftune::CampaignResult r = mftune::run_campaign(c);
            int within = 0, total = 0;
            for (const mftune::TrialResult& t : r.trials) {
                if (!t.bounds || t.runs.empty() || t.runs.front().trace.size() == 0)
                    continue;
                ++total;
                const double R_T = t.runs.front().trace.cumulative.back();
                if (R_T <= t.bounds->scale * t.bounds->report.printed.bound)
                    ++within;
            }
            std::cout << "R_T within the regret bound in " << within << " of " << total << " trials\n";
            return finish(r, bounds_o.out_dir);
        }
        return run_simulate(sim_o, kd, kp);
    } catch (const mftune::InvalidInput& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
