#ifndef MFTUNE_BAYES_OPT_HPP
#define MFTUNE_BAYES_OPT_HPP

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mftune/ar1.hpp"
#include "mftune/gp.hpp"
#include "mftune/kernel.hpp"
#include "mftune/rng.hpp"

namespace mftune {

struct GridAxis {
    double lower = 0.0;
    double upper = 0.0;
    int count = 1;
};

/// Cartesian grid over a hyperrectangle. Points are enumerated with the first
/// axis varying slowest, so linear index = ((i1 * c2) + i2) * c3 + i3.
class DesignGrid {
public:
    explicit DesignGrid(std::vector<GridAxis> axes);

    /// 11 x 11 x 11 over [0.25,0.45] x [0.85,0.95] x [0.02,0.22].
    static DesignGrid paper_default();

    std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
    Eigen::Index dimension() const { return points_.cols(); }
    const Eigen::MatrixXd& points() const { return points_; }
    Eigen::VectorXd point(std::size_t index) const { return points_.row(static_cast<Eigen::Index>(index)); }
    const std::vector<GridAxis>& axes() const { return axes_; }
    Eigen::VectorXd lower() const;
    Eigen::VectorXd upper() const;
    /// Grid spacing per axis (zero for single-point axes).
    Eigen::VectorXd spacing() const;

private:
    std::vector<GridAxis> axes_;
    Eigen::MatrixXd points_;
};

struct UcbConfig {
    double delta = 0.1;
    int horizon = 20;
    std::optional<double> beta_override;

    void validate() const;
    double beta(int t, std::size_t domain_size) const;
};

/// beta_t = 2 log(|X| t^2 pi^2 / (6 delta)). Any delta > 0 is accepted here;
/// UcbConfig restricts it to a probability.
double beta_schedule(int t, std::size_t domain_size, double delta);

/// argmax_i mean_i + sqrt(beta) std_i, ties going to the lowest index.
std::size_t ucb_select(const Eigen::VectorXd& mean, const Eigen::VectorXd& std, double beta);

/// Per-iteration record of one optimisation run. Regret fields are filled by
/// regret_trace once the optimum is known.
struct RegretTrace {
    std::vector<std::size_t> indices;
    std::vector<Eigen::VectorXd> points;
    std::vector<double> observed;
    std::vector<double> truth;
    std::vector<bool> diverged;
    std::vector<double> instantaneous;
    std::vector<double> cumulative;
    std::vector<double> best;
    double f_star = 0.0;
    bool complete = true;
    std::string failure;

    std::size_t size() const { return indices.size(); }
};

struct RegretSeries {
    std::vector<double> instantaneous;
    std::vector<double> cumulative;
    std::vector<double> best;
};

/// r_t = f* - f(x_t), R_t = sum r, r*_t = min r. Throws InconsistencyError if
/// any f(x_t) exceeds f* by more than 1e-9.
RegretSeries regret_trace(std::span<const double> truth, double f_star);

/// Fills the regret fields of `trace` from its truth values.
void assign_regret(RegretTrace& trace, double f_star);

/// Affine output map applied before fitting: model = (y - offset) / scale.
struct Standardizer {
    double offset = 0.0;
    double scale = 1.0;

    /// Sample mean and sample standard deviation; falls back to scale 1 when
    /// fewer than two values are given or they are constant.
    static Standardizer from_outputs(const Eigen::VectorXd& y);

    double to_model(double y) const { return (y - offset) / scale; }
    double from_model(double z) const { return z * scale + offset; }
    double variance_to_model(double v) const { return v / (scale * scale); }
    Dataset to_model(const Dataset& data) const;
};

enum class Formulation { MFF, CSF, LSF };

std::string_view to_string(Formulation kind);
Formulation parse_formulation(std::string_view name);

struct Observation {
    double observed = 0.0;
    double truth = 0.0;
    bool diverged = false;
};

/// Evaluates the new operator at a grid index.
using Oracle = std::function<Observation(std::size_t grid_index)>;

/// Hyperparameters shared by the surrogate models, in standardized units.
struct SurrogateSettings {
    /// Fixed output standardization; when absent it is recomputed every
    /// iteration from the outputs the model conditions on.
    std::optional<Standardizer> standardizer;
    /// Measurement noise variance of a single evaluation, original units.
    double noise_variance = 1e-4;
    /// Kernel of the single-fidelity GP used by CSF and LSF.
    KernelSpec single_fidelity_kernel;
    /// AR-1 estimation for MFF; kernel_low / noise_low are normally preset so
    /// only rho (and optionally delta) are re-estimated each iteration.
    Ar1FitConfig ar1;
};

struct RunOptions {
    /// Records the final AR-1 model so a bound report can be built from it.
    bool keep_final_model = false;
};

struct FormulationRun {
    RegretTrace trace;
    std::optional<Ar1Model> final_model;
    std::optional<Standardizer> final_standardizer;
};

/// UCB loop over the grid for `horizon` iterations:
///   predict over the grid -> ucb_select -> oracle -> append.
/// MFF conditions an AR-1 model (previous operators pooled as low fidelity,
/// new operator as high fidelity); CSF a single GP on all operators' data;
/// LSF a single GP on the new operator's data only. An oracle exception ends
/// the run with a partial trace marked incomplete.
FormulationRun run_formulation(Formulation kind, std::span<const Dataset> previous, const Oracle& oracle,
                               const DesignGrid& grid, const UcbConfig& ucb, const SurrogateSettings& settings,
                               double f_star, CounterRng& rng, const RunOptions& options = {});

} // namespace mftune

#endif // MFTUNE_BAYES_OPT_HPP
