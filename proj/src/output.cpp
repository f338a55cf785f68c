#include "mftune/output.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mftune/errors.hpp"

namespace mftune {

std::string format_number(double value)
{
    if (std::isnan(value))
        return "nan";
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, end);
}

void write_results_csv(std::ostream& out, const CampaignResult& result)
{
    out << "trial,formulation,iter,x1,x2,x3,y_noisy,f_true,r_t,R_t,r_star_t,diverged_flag\n";
    for (const TrialResult& tr : result.trials) {
        for (const FormulationResult& fr : tr.runs) {
            const RegretTrace& t = fr.trace;
            for (std::size_t k = 0; k < t.size(); ++k) {
                const Eigen::VectorXd& x = t.points[k];
                out << tr.trial << ',' << to_string(fr.kind) << ',' << k + 1 << ',' << format_number(x[0]) << ','
                    << format_number(x[1]) << ',' << format_number(x[2]) << ',' << format_number(t.observed[k])
                    << ',' << format_number(t.truth[k]) << ',' << format_number(t.instantaneous[k]) << ','
                    << format_number(t.cumulative[k]) << ',' << format_number(t.best[k]) << ','
                    << (t.diverged[k] ? 1 : 0) << '\n';
            }
        }
    }
}

void write_aggregates_csv(std::ostream& out, const CampaignResult& result)
{
    out << "formulation,iter,trials,mean_R_t,std_R_t,mean_r_star_t,std_r_star_t,mean_r_t,std_r_t\n";
    for (const AggregateRow& r : result.aggregates) {
        out << to_string(r.kind) << ',' << r.iter << ',' << r.count << ',' << format_number(r.mean_cumulative)
            << ',' << format_number(r.std_cumulative) << ',' << format_number(r.mean_best) << ','
            << format_number(r.std_best) << ',' << format_number(r.mean_instantaneous) << ','
            << format_number(r.std_instantaneous) << '\n';
    }
}

void write_bounds_csv(std::ostream& out, const CampaignResult& result)
{
    out << "trial,T,beta_T,h_T,gamma_tilde,realized_info_gain,v_mf2,C1,regret_bound,v_mf2_rho2,C1_rho2,"
           "regret_bound_rho2,scale,regret_bound_original,R_T,rho,xi_L2,xi_H2,lambda_min_k_LL,"
           "precondition_holds,low_points_used,low_points_total,dominance_margin,max_eig_k_tilde,"
           "max_eig_single_fidelity,multi_fidelity_benefit\n";
    for (const TrialResult& tr : result.trials) {
        if (!tr.bounds)
            continue;
        const BoundReport& b = tr.bounds->report;
        double R_T = std::nan("");
        for (const FormulationResult& fr : tr.runs)
            if (fr.kind == Formulation::MFF && fr.trace.size() > 0)
                R_T = fr.trace.cumulative.back();
        out << tr.trial << ',' << b.T << ',' << format_number(b.beta_T) << ',' << b.horizon_terms << ','
            << format_number(b.gamma_tilde) << ',' << format_number(b.realized_info_gain) << ','
            << format_number(b.printed.v_mf2) << ',' << format_number(b.printed.c1) << ','
            << format_number(b.printed.bound) << ',' << format_number(b.rho_squared.v_mf2) << ','
            << format_number(b.rho_squared.c1) << ',' << format_number(b.rho_squared.bound) << ','
            << format_number(tr.bounds->scale) << ',' << format_number(tr.bounds->scale * b.printed.bound) << ','
            << format_number(R_T) << ',' << format_number(tr.bounds->rho) << ','
            << format_number(tr.bounds->noise_low) << ',' << format_number(tr.bounds->noise_high) << ','
            << format_number(b.low_kernel_min_eigenvalue) << ',' << (b.precondition_holds ? 1 : 0) << ','
            << b.low_points_used << ',' << b.low_points_total << ',' << format_number(b.dominance_margin) << ','
            << format_number(b.k_tilde.max_eigenvalue()) << ',' << format_number(b.single_fidelity_max_eigenvalue)
            << ',' << (b.multi_fidelity_benefit ? 1 : 0) << '\n';
    }
}

namespace {

std::string lengthscales_text(const KernelSpec& k)
{
    std::string s;
    for (Eigen::Index i = 0; i < k.lengthscales.size(); ++i)
        s += (i ? ";" : "") + format_number(k.lengthscales[i]);
    return s;
}

} // namespace

void write_trials_csv(std::ostream& out, const CampaignResult& result)
{
    out << "trial,complete,kd,kp,f_star,best_index,baseline_regret,scale,offset,v_low,ls_low,xi_L2,"
           "xi_L2_from_repeats,v_delta,ls_delta,v_single,ls_single,failure\n";
    for (const TrialResult& tr : result.trials) {
        const SurrogateFit& s = tr.surrogate;
        std::string failure = tr.failure;
        std::replace(failure.begin(), failure.end(), ',', ';');
        std::replace(failure.begin(), failure.end(), '\n', ' ');
        out << tr.trial << ',' << (tr.complete ? 1 : 0) << ',' << format_number(tr.gains.kd) << ','
            << format_number(tr.gains.kp) << ',' << format_number(tr.f_star) << ',' << tr.best_index << ','
            << (tr.baseline_regret ? format_number(*tr.baseline_regret) : "") << ','
            << format_number(s.standardizer.scale) << ',' << format_number(s.standardizer.offset) << ','
            << format_number(s.kernel_low.signal_variance) << ',' << lengthscales_text(s.kernel_low) << ','
            << format_number(s.noise_low) << ',' << (s.noise_low_from_repeats ? 1 : 0) << ','
            << format_number(s.kernel_delta.signal_variance) << ',' << lengthscales_text(s.kernel_delta) << ','
            << format_number(s.single_fidelity_kernel.signal_variance) << ','
            << lengthscales_text(s.single_fidelity_kernel) << ',' << failure << '\n';
    }
}

void write_metadata_json(std::ostream& out, const CampaignResult& result)
{
    using nlohmann::json;
    const ExperimentConfig& c = result.config;
    json j;
    j["config"] = json::parse(config_to_json(c));
    j["seed"] = c.seed;
    j["history_sampling"] = c.history_without_replacement ? "without-replacement" : "with-replacement";
    j["operator_spread"] = c.operators.spread_is_variance ? "variance" : "standard-deviation";
    j["beta"] = c.beta_override ? "fixed" : "2 log(|X| t^2 pi^2 / (6 delta))";
    j["trials_complete"] = std::count_if(result.trials.begin(), result.trials.end(),
                                         [](const TrialResult& t) { return t.complete; });
    j["trials_total"] = result.trials.size();
    j["regret_units"] = "performance units (-J)";
    j["hyperparameter_units"] = "standardized by the previous operators' output mean and sample std";
    out << j.dump(2) << '\n';
}

namespace {

struct Series {
    std::string name;
    std::string color;
    std::vector<double> mean;
    std::vector<double> std;
};

std::string color_for(Formulation kind)
{
    switch (kind) {
    case Formulation::MFF:
        return "#1f77b4";
    case Formulation::CSF:
        return "#d62728";
    case Formulation::LSF:
        return "#2ca02c";
    }
    return "#000000";
}

std::string upper(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char ch) { return std::toupper(ch); });
    return out;
}

double nice_ceiling(double v)
{
    if (!(v > 0.0))
        return 1.0;
    const double p = std::pow(10.0, std::floor(std::log10(v)));
    for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
        if (m * p >= v)
            return m * p;
    return 10.0 * p;
}

std::string fmt(double v, int precision = 2)
{
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(precision);
    os << v;
    return os.str();
}

void panel(std::ostringstream& svg, double x0, double y0, double w, double h, const std::string& label,
           const std::vector<Series>& series, int horizon, std::optional<double> baseline)
{
    double top = 0.0;
    for (const Series& s : series)
        for (std::size_t i = 0; i < s.mean.size(); ++i)
            top = std::max(top, s.mean[i] + s.std[i]);
    if (baseline)
        top = std::max(top, *baseline);
    top = nice_ceiling(top * 1.05);

    auto px = [&](double iter) { return x0 + (horizon > 1 ? (iter - 1) / (horizon - 1) : 0.5) * w; };
    auto py = [&](double v) { return y0 + h - std::clamp(v / top, -0.05, 1.0) * h; };

    svg << "<rect x=\"" << fmt(x0) << "\" y=\"" << fmt(y0) << "\" width=\"" << fmt(w) << "\" height=\"" << fmt(h)
        << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double v = top * k / 5.0;
        svg << "<line x1=\"" << fmt(x0 - 4) << "\" y1=\"" << fmt(py(v)) << "\" x2=\"" << fmt(x0 + w) << "\" y2=\""
            << fmt(py(v)) << "\" stroke=\"#ddd\"/>\n";
        svg << "<text x=\"" << fmt(x0 - 8) << "\" y=\"" << fmt(py(v) + 4)
            << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(v, top < 0.1 ? 4 : 3) << "</text>\n";
    }
    const int step = horizon > 10 ? 5 : 1;
    for (int t = 1; t <= horizon; ++t) {
        if (t != 1 && t % step != 0)
            continue;
        svg << "<text x=\"" << fmt(px(t)) << "\" y=\"" << fmt(y0 + h + 16) << "\" text-anchor=\"middle\" "
            << "font-size=\"11\">" << t << "</text>\n";
    }
    svg << "<text x=\"" << fmt(x0 + w / 2) << "\" y=\"" << fmt(y0 + h + 34)
        << "\" text-anchor=\"middle\" font-size=\"12\">iteration</text>\n";
    svg << "<text x=\"" << fmt(x0 + w / 2) << "\" y=\"" << fmt(y0 - 8)
        << "\" text-anchor=\"middle\" font-size=\"13\">" << label << "</text>\n";

    if (baseline) {
        svg << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(py(*baseline)) << "\" x2=\"" << fmt(x0 + w)
            << "\" y2=\"" << fmt(py(*baseline)) << "\" stroke=\"#b00\" stroke-dasharray=\"6,4\"/>\n";
    }
    for (std::size_t si = 0; si < series.size(); ++si) {
        const Series& s = series[si];
        const double jitter = (static_cast<double>(si) - 1.0) * 3.0;
        for (std::size_t i = 0; i < s.mean.size(); ++i) {
            const double x = px(static_cast<double>(i + 1)) + jitter;
            svg << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(py(s.mean[i] - s.std[i])) << "\" x2=\"" << fmt(x)
                << "\" y2=\"" << fmt(py(s.mean[i] + s.std[i])) << "\" stroke=\"" << s.color
                << "\" stroke-opacity=\"0.5\"/>\n";
        }
        svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < s.mean.size(); ++i)
            svg << fmt(px(static_cast<double>(i + 1)) + jitter) << ',' << fmt(py(s.mean[i])) << ' ';
        svg << "\"/>\n";
    }
}

} // namespace

std::string regret_figure_svg(const CampaignResult& result, const std::string& title)
{
    const int horizon = result.config.horizon;
    std::vector<Series> best, cumulative;
    for (Formulation kind : result.config.formulations) {
        Series b{upper(to_string(kind)), color_for(kind), {}, {}};
        Series c = b;
        for (const AggregateRow& r : result.aggregates) {
            if (r.kind != kind || r.count == 0)
                continue;
            b.mean.push_back(r.mean_best);
            b.std.push_back(r.std_best);
            c.mean.push_back(r.mean_cumulative);
            c.std.push_back(r.std_cumulative);
        }
        best.push_back(std::move(b));
        cumulative.push_back(std::move(c));
    }
    std::optional<double> baseline;
    std::size_t nb = 0;
    double sum = 0.0;
    for (const TrialResult& t : result.trials)
        if (t.baseline_regret) {
            sum += *t.baseline_regret;
            ++nb;
        }
    if (nb > 0)
        baseline = sum / static_cast<double>(nb);

    const double W = 960, H = 420;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
        << W << ' ' << H << "\" font-family=\"sans-serif\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
    panel(svg, 70, 60, 370, 280, "best instantaneous regret r*_t", best, horizon, baseline);
    panel(svg, 540, 60, 370, 280, "cumulative regret R_t", cumulative, horizon, std::nullopt);
    double lx = 80;
    for (const Series& s : best) {
        svg << "<line x1=\"" << lx << "\" y1=\"400\" x2=\"" << lx + 24 << "\" y2=\"400\" stroke=\"" << s.color
            << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << lx + 30 << "\" y=\"404\" font-size=\"12\">" << s.name << "</text>\n";
        lx += 90;
    }
    if (baseline) {
        svg << "<line x1=\"" << lx << "\" y1=\"400\" x2=\"" << lx + 24
            << "\" y2=\"400\" stroke=\"#b00\" stroke-dasharray=\"6,4\"/>\n";
        svg << "<text x=\"" << lx + 30 << "\" y=\"404\" font-size=\"12\">undisturbed optimum</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

std::vector<std::filesystem::path> emit_outputs(const CampaignResult& result, const std::filesystem::path& dir)
{
    if (result.config.formulations.empty())
        throw InvalidInput("no formulations to write");
    if (result.trials.empty())
        throw InvalidInput("no trials to write");
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    auto write = [&](const std::string& name, auto&& fn) {
        const std::filesystem::path p = dir / name;
        std::ofstream out(p, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot write " + p.string());
        fn(out);
        out.flush();
        if (!out)
            throw std::runtime_error("failed while writing " + p.string());
        written.push_back(p);
    };
    write("results.csv", [&](std::ostream& o) { write_results_csv(o, result); });
    write("aggregates.csv", [&](std::ostream& o) { write_aggregates_csv(o, result); });
    write("trials.csv", [&](std::ostream& o) { write_trials_csv(o, result); });
    write("metadata.json", [&](std::ostream& o) { write_metadata_json(o, result); });
    const bool any_bounds =
        std::any_of(result.trials.begin(), result.trials.end(), [](const TrialResult& t) { return t.bounds; });
    if (any_bounds)
        write("bounds.csv", [&](std::ostream& o) { write_bounds_csv(o, result); });
    const std::string title = result.config.disturbed ? "Regret with constant disturbance"
                                                      : "Regret without disturbance";
    write("regret.svg", [&](std::ostream& o) { o << regret_figure_svg(result, title); });
    return written;
}

} // namespace mftune
