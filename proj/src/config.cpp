#include "mftune/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mftune/errors.hpp"

namespace mftune {

using nlohmann::json;

ExperimentConfig ExperimentConfig::paper_default()
{
    ExperimentConfig c;
    c.grid = {{0.25, 0.45, 11}, {0.85, 0.95, 11}, {0.02, 0.22, 11}};
    c.q_diagonal = default_state_weight(c.dof).diagonal();
    c.r_diagonal = Eigen::VectorXd::Ones(c.dof);
    c.disturbance.resize(6);
    c.disturbance << 0.0, 0.0, 0.05, 0.05, 0.0, 0.0;
    c.surrogate.kernel_low = KernelSpec::squared_exponential(1.0, Eigen::Vector3d(0.1, 0.05, 0.1));
    c.surrogate.kernel_delta = KernelSpec::squared_exponential(0.1, Eigen::Vector3d(0.1, 0.05, 0.1));
    c.surrogate.single_fidelity_kernel = c.surrogate.kernel_low;
    return c;
}

DesignGrid ExperimentConfig::design_grid() const
{
    return DesignGrid(grid);
}

Eigen::VectorXd ExperimentConfig::active_disturbance() const
{
    return disturbed ? disturbance : Eigen::VectorXd::Zero(3 * dof);
}

void ExperimentConfig::validate() const
{
    if (dof < 1)
        throw InvalidInput("dof must be at least 1");
    if (grid.size() != 3)
        throw InvalidInput("the controller grid must have exactly three axes (x1, x2, x3)");
    (void)design_grid();
    if (q_diagonal.size() != 3 * dof || (q_diagonal.array() < 0.0).any())
        throw InvalidInput("q_diagonal must hold 3*dof non-negative weights");
    if (r_diagonal.size() != dof || (r_diagonal.array() <= 0.0).any())
        throw InvalidInput("r_diagonal must hold dof positive weights");
    if (!(integration.horizon > 0.0) || !(integration.step > 0.0) || !(integration.divergence_threshold > 0.0))
        throw InvalidInput("integration horizon, step and divergence threshold must be positive");
    if (previous_operators < 0)
        throw InvalidInput("previous_operators must be non-negative");
    if (points_per_operator < 1)
        throw InvalidInput("points_per_operator must be at least 1");
    const auto grid_size = design_grid().size();
    if (history_without_replacement && static_cast<std::size_t>(points_per_operator) > grid_size)
        throw InvalidInput("points_per_operator exceeds the grid size for sampling without replacement");
    if (!(noise_variance >= 0.0))
        throw InvalidInput("noise_variance must be non-negative");
    if (!(operators.spread_kd >= 0.0) || !(operators.spread_kp >= 0.0))
        throw InvalidInput("operator spreads must be non-negative");
    if (operators.max_draws < 1)
        throw InvalidInput("operator max_draws must be at least 1");
    UcbConfig{delta, horizon, beta_override}.validate();
    if (trials < 1)
        throw InvalidInput("trials must be at least 1");
    if (disturbance.size() != 3 * dof)
        throw InvalidInput("disturbance must have 3*dof entries");
    if (formulations.empty())
        throw InvalidInput("at least one formulation is required");
    if (threads < 0)
        throw InvalidInput("threads must be non-negative");
    const SurrogateConfig& s = surrogate;
    if (!(s.rho_min <= s.rho_max))
        throw InvalidInput("surrogate rho_min must not exceed rho_max");
    if (s.search_starts < 1)
        throw InvalidInput("surrogate search_starts must be at least 1");
    if (!(s.lengthscale_min_fraction > 0.0) || !(s.lengthscale_min_fraction < s.lengthscale_max_fraction))
        throw InvalidInput("surrogate lengthscale fractions must satisfy 0 < min < max");
    if (!(s.min_signal_variance > 0.0) || !(s.min_signal_variance < s.max_signal_variance))
        throw InvalidInput("surrogate signal variance bounds must satisfy 0 < min < max");
    if (!(s.noise_low >= 0.0))
        throw InvalidInput("surrogate noise_low must be non-negative");
    s.kernel_low.validate();
    s.kernel_delta.validate();
    s.single_fidelity_kernel.validate();
    if (s.kernel_low.dimension() != 3 || s.kernel_delta.dimension() != 3 || s.single_fidelity_kernel.dimension() != 3)
        throw InvalidInput("surrogate kernels must have three lengthscales");
    bool needs_history = false;
    for (Formulation f : formulations)
        needs_history = needs_history || f == Formulation::MFF;
    if (needs_history && previous_operators < 1)
        throw InvalidInput("MFF needs at least one previous operator");
    if (s.auto_fit && previous_operators < 1)
        throw InvalidInput("auto_fit needs previous-operator data; set surrogate.auto_fit = false");
}

std::string_view to_string(StandardizeMode mode)
{
    return mode == StandardizeMode::History ? "history" : "adaptive";
}

std::string_view to_string(LowNoiseSource source)
{
    switch (source) {
    case LowNoiseSource::Repeats:
        return "repeats";
    case LowNoiseSource::MarginalLikelihood:
        return "marginal-likelihood";
    case LowNoiseSource::Fixed:
        return "fixed";
    }
    return "?";
}

std::string_view to_string(SingleFidelitySource source)
{
    switch (source) {
    case SingleFidelitySource::LowKernel:
        return "low-kernel";
    case SingleFidelitySource::Fit:
        return "fit";
    case SingleFidelitySource::Fixed:
        return "fixed";
    }
    return "?";
}

std::string_view to_string(LowNoiseTerm term)
{
    return term == LowNoiseTerm::Unweighted ? "unweighted" : "rho-squared";
}

namespace {

// Reads keys from one JSON object and reports any that were never consumed.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            throw InvalidInput("config: '" + path_ + "' must be an object");
    }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                throw InvalidInput("config: unknown key '" + prefix() + it.key() + "'");
    }

    const json* find(const std::string& key)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    template <class T> void get(const std::string& key, T& out)
    {
        if (const json* v = find(key)) {
            try {
                out = v->get<T>();
            } catch (const json::exception&) {
                throw InvalidInput("config: '" + prefix() + key + "' has the wrong type");
            }
        }
    }

    std::string text(const std::string& key)
    {
        std::string out;
        get(key, out);
        return out;
    }

    std::string prefix() const { return path_.empty() ? "" : path_ + "."; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

Eigen::VectorXd to_vector(const json& j, const std::string& what)
{
    if (!j.is_array())
        throw InvalidInput("config: '" + what + "' must be an array of numbers");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number())
            throw InvalidInput("config: '" + what + "' must be an array of numbers");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

json from_vector(const Eigen::VectorXd& v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        a.push_back(v[i]);
    return a;
}

void read_vector(ObjectReader& r, const std::string& key, Eigen::VectorXd& out)
{
    if (const json* v = r.find(key))
        out = to_vector(*v, r.prefix() + key);
}

KernelSpec read_kernel(const json& j, const std::string& path, const KernelSpec& base)
{
    ObjectReader r(j, path);
    KernelSpec k = base;
    std::string family = "squared-exponential";
    r.get("family", family);
    if (family != "squared-exponential")
        throw InvalidInput("config: '" + path + ".family' must be squared-exponential");
    r.get("signal_variance", k.signal_variance);
    read_vector(r, "lengthscales", k.lengthscales);
    r.finish();
    return k;
}

json write_kernel(const KernelSpec& k)
{
    return {{"family", "squared-exponential"},
            {"signal_variance", k.signal_variance},
            {"lengthscales", from_vector(k.lengthscales)}};
}

template <class E> E parse_choice(const std::string& text, const std::string& key,
                                  std::initializer_list<std::pair<std::string_view, E>> options)
{
    for (const auto& [name, value] : options)
        if (text == name)
            return value;
    std::string list;
    for (const auto& [name, value] : options)
        list += (list.empty() ? "" : ", ") + std::string(name);
    throw InvalidInput("config: '" + key + "' must be one of " + list + " (got '" + text + "')");
}

void read_surrogate(const json& j, SurrogateConfig& s)
{
    ObjectReader r(j, "surrogate");
    if (r.find("standardize")) {
        s.standardize = parse_choice<StandardizeMode>(
            r.text("standardize"), "surrogate.standardize",
            {{"history", StandardizeMode::History}, {"adaptive", StandardizeMode::Adaptive}});
    }
    r.get("auto_fit", s.auto_fit);
    if (r.find("low_noise")) {
        s.low_noise = parse_choice<LowNoiseSource>(r.text("low_noise"), "surrogate.low_noise",
                                                   {{"repeats", LowNoiseSource::Repeats},
                                                    {"marginal-likelihood", LowNoiseSource::MarginalLikelihood},
                                                    {"fixed", LowNoiseSource::Fixed}});
    }
    if (r.find("single_fidelity")) {
        s.single_fidelity = parse_choice<SingleFidelitySource>(r.text("single_fidelity"), "surrogate.single_fidelity",
                                                               {{"low-kernel", SingleFidelitySource::LowKernel},
                                                                {"fit", SingleFidelitySource::Fit},
                                                                {"fixed", SingleFidelitySource::Fixed}});
    }
    r.get("fit_delta", s.fit_delta);
    if (const json* v = r.find("kernel_low"))
        s.kernel_low = read_kernel(*v, "surrogate.kernel_low", s.kernel_low);
    if (const json* v = r.find("kernel_delta"))
        s.kernel_delta = read_kernel(*v, "surrogate.kernel_delta", s.kernel_delta);
    if (const json* v = r.find("single_fidelity_kernel"))
        s.single_fidelity_kernel = read_kernel(*v, "surrogate.single_fidelity_kernel", s.single_fidelity_kernel);
    r.get("noise_low", s.noise_low);
    r.get("rho_default", s.rho_default);
    r.get("rho_min", s.rho_min);
    r.get("rho_max", s.rho_max);
    r.get("delta_refit_min_points", s.delta_refit_min_points);
    r.get("search_starts", s.search_starts);
    r.get("lengthscale_min_fraction", s.lengthscale_min_fraction);
    r.get("lengthscale_max_fraction", s.lengthscale_max_fraction);
    r.get("min_signal_variance", s.min_signal_variance);
    r.get("max_signal_variance", s.max_signal_variance);
    r.finish();
}

} // namespace

ExperimentConfig config_from_json(std::string_view text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidInput(std::string("config: malformed JSON: ") + e.what());
    }
    ExperimentConfig c;
    {
        ObjectReader r(j, "");
        int version = 0;
        r.get("schema_version", version);
        if (version != kConfigSchemaVersion)
            throw InvalidInput("config: schema_version must be " + std::to_string(kConfigSchemaVersion));
        std::string profile = "paper-default";
        r.get("profile", profile);
        if (profile != "paper-default")
            throw InvalidInput("config: unknown profile '" + profile + "'");
        c = ExperimentConfig::paper_default();

        if (const json* g = r.find("grid")) {
            if (!g->is_array())
                throw InvalidInput("config: 'grid' must be an array of axes");
            c.grid.clear();
            for (std::size_t i = 0; i < g->size(); ++i) {
                ObjectReader a((*g)[i], "grid[" + std::to_string(i) + "]");
                GridAxis axis;
                a.get("lower", axis.lower);
                a.get("upper", axis.upper);
                a.get("count", axis.count);
                a.finish();
                c.grid.push_back(axis);
            }
        }
        const int old_dof = c.dof;
        r.get("dof", c.dof);
        if (c.dof != old_dof && c.dof >= 1) {
            c.q_diagonal = default_state_weight(c.dof).diagonal();
            c.r_diagonal = Eigen::VectorXd::Ones(c.dof);
            c.disturbance = Eigen::VectorXd::Zero(3 * c.dof);
        }
        read_vector(r, "q_diagonal", c.q_diagonal);
        read_vector(r, "r_diagonal", c.r_diagonal);
        if (const json* v = r.find("integration")) {
            ObjectReader a(*v, "integration");
            a.get("horizon", c.integration.horizon);
            a.get("step", c.integration.step);
            a.get("divergence_threshold", c.integration.divergence_threshold);
            a.finish();
        }
        r.get("previous_operators", c.previous_operators);
        r.get("points_per_operator", c.points_per_operator);
        r.get("history_without_replacement", c.history_without_replacement);
        r.get("noise_variance", c.noise_variance);
        if (const json* v = r.find("operators")) {
            ObjectReader a(*v, "operators");
            a.get("mean_kd", c.operators.mean_kd);
            a.get("spread_kd", c.operators.spread_kd);
            a.get("mean_kp", c.operators.mean_kp);
            a.get("spread_kp", c.operators.spread_kp);
            a.get("spread_is_variance", c.operators.spread_is_variance);
            a.get("min_gain", c.operators.min_gain);
            a.get("max_draws", c.operators.max_draws);
            a.finish();
        }
        r.get("delta", c.delta);
        r.get("horizon", c.horizon);
        if (const json* v = r.find("beta_override")) {
            if (v->is_null())
                c.beta_override.reset();
            else if (v->is_number())
                c.beta_override = v->get<double>();
            else
                throw InvalidInput("config: 'beta_override' must be a number or null");
        }
        r.get("trials", c.trials);
        r.get("seed", c.seed);
        read_vector(r, "disturbance", c.disturbance);
        r.get("disturbed", c.disturbed);
        r.get("disturb_history", c.disturb_history);
        if (const json* v = r.find("surrogate"))
            read_surrogate(*v, c.surrogate);
        if (const json* v = r.find("formulations")) {
            if (!v->is_array())
                throw InvalidInput("config: 'formulations' must be an array of names");
            c.formulations.clear();
            for (const json& f : *v) {
                if (!f.is_string())
                    throw InvalidInput("config: 'formulations' entries must be strings");
                c.formulations.push_back(parse_formulation(f.get<std::string>()));
            }
        }
        if (const json* v = r.find("bounds")) {
            ObjectReader a(*v, "bounds");
            a.get("enabled", c.bounds.enabled);
            if (a.find("low_noise_term"))
                c.bounds.low_noise_term = parse_choice<LowNoiseTerm>(
                    a.text("low_noise_term"), "bounds.low_noise_term",
                    {{"unweighted", LowNoiseTerm::Unweighted}, {"rho-squared", LowNoiseTerm::RhoSquared}});
            a.finish();
        }
        r.get("threads", c.threads);
        r.finish();
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return config_from_json(buffer.str());
}

std::string config_to_json(const ExperimentConfig& c)
{
    json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["profile"] = c.profile;
    json grid = json::array();
    for (const GridAxis& a : c.grid)
        grid.push_back({{"lower", a.lower}, {"upper", a.upper}, {"count", a.count}});
    j["grid"] = grid;
    j["dof"] = c.dof;
    j["q_diagonal"] = from_vector(c.q_diagonal);
    j["r_diagonal"] = from_vector(c.r_diagonal);
    j["integration"] = {{"horizon", c.integration.horizon},
                        {"step", c.integration.step},
                        {"divergence_threshold", c.integration.divergence_threshold}};
    j["previous_operators"] = c.previous_operators;
    j["points_per_operator"] = c.points_per_operator;
    j["history_without_replacement"] = c.history_without_replacement;
    j["noise_variance"] = c.noise_variance;
    j["operators"] = {{"mean_kd", c.operators.mean_kd},     {"spread_kd", c.operators.spread_kd},
                      {"mean_kp", c.operators.mean_kp},     {"spread_kp", c.operators.spread_kp},
                      {"spread_is_variance", c.operators.spread_is_variance},
                      {"min_gain", c.operators.min_gain}, {"max_draws", c.operators.max_draws}};
    j["delta"] = c.delta;
    j["horizon"] = c.horizon;
    j["beta_override"] = c.beta_override ? json(*c.beta_override) : json(nullptr);
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    j["disturbance"] = from_vector(c.disturbance);
    j["disturbed"] = c.disturbed;
    j["disturb_history"] = c.disturb_history;
    const SurrogateConfig& s = c.surrogate;
    j["surrogate"] = {{"standardize", to_string(s.standardize)},
                      {"auto_fit", s.auto_fit},
                      {"low_noise", to_string(s.low_noise)},
                      {"single_fidelity", to_string(s.single_fidelity)},
                      {"fit_delta", s.fit_delta},
                      {"kernel_low", write_kernel(s.kernel_low)},
                      {"kernel_delta", write_kernel(s.kernel_delta)},
                      {"single_fidelity_kernel", write_kernel(s.single_fidelity_kernel)},
                      {"noise_low", s.noise_low},
                      {"rho_default", s.rho_default},
                      {"rho_min", s.rho_min},
                      {"rho_max", s.rho_max},
                      {"delta_refit_min_points", s.delta_refit_min_points},
                      {"search_starts", s.search_starts},
                      {"lengthscale_min_fraction", s.lengthscale_min_fraction},
                      {"lengthscale_max_fraction", s.lengthscale_max_fraction},
                      {"min_signal_variance", s.min_signal_variance},
                      {"max_signal_variance", s.max_signal_variance}};
    json forms = json::array();
    for (Formulation f : c.formulations)
        forms.push_back(to_string(f));
    j["formulations"] = forms;
    j["bounds"] = {{"enabled", c.bounds.enabled}, {"low_noise_term", to_string(c.bounds.low_noise_term)}};
    j["threads"] = c.threads;
    return j.dump(2) + "\n";
}

std::optional<std::uint64_t> seed_from_environment()
{
    const char* raw = std::getenv("MFTUNE_SEED");
    if (raw == nullptr || *raw == '\0')
        return std::nullopt;
    const std::string_view text(raw);
    std::uint64_t value = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size())
        throw InvalidInput("MFTUNE_SEED must be an unsigned 64-bit integer (got '" + std::string(text) + "')");
    return value;
}

} // namespace mftune
