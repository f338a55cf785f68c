#include "mftune/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mftune/errors.hpp"
#include "mftune/kernel.hpp"

namespace mftune {

namespace {

constexpr double kPsdTolerance = 1e-10;

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& X, const std::vector<Eigen::Index>& idx)
{
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), X.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = X.row(idx[i]);
    return out;
}

// rho^2 k_HH + k^d_HH + xi_H^2 I
Eigen::MatrixXd high_prior_block(const Ar1Model& m)
{
    const Eigen::MatrixXd& XH = m.data_high.inputs;
    Eigen::MatrixXd C = m.rho * m.rho * kernel_matrix(m.kernel_low, XH, XH) + kernel_matrix(m.kernel_delta, XH, XH);
    C.diagonal().array() += m.noise_high();
    return C;
}

double low_noise_weight(const Ar1Model& m, LowNoiseTerm term)
{
    return term == LowNoiseTerm::RhoSquared ? m.rho * m.rho : 1.0;
}

void require_high_inputs(const Ar1Model& m)
{
    if (m.data_high.size() == 0)
        throw InvalidInput("conditional covariance needs at least one high-fidelity input");
}

} // namespace

PsdCheck psd_bound_check(const SymMatrix& Q, double sigma2)
{
    if (Q.size() == 0)
        throw InvalidInput("psd_bound_check needs a non-empty matrix");
    const double lmin = Q.min_eigenvalue();
    if (!(lmin > 0.0))
        throw PreconditionError("Q must be positive definite (lambda_min = " + std::to_string(lmin) + ")");
    if (!(sigma2 >= 0.0) || !(sigma2 < lmin)) {
        std::ostringstream os;
        os << "sigma^2 = " << sigma2 << " must satisfy 0 <= sigma^2 < lambda_min(Q) = " << lmin;
        throw PreconditionError(os.str());
    }
    const Eigen::Index n = Q.size();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd shifted = Q.matrix();
    shifted.diagonal().array() += sigma2;
    const Eigen::MatrixXd lhs = Cholesky::factor(shifted).solve(I);
    const Eigen::MatrixXd Qinv = Q.factor().solve(I);
    const Eigen::MatrixXd rhs = Qinv - sigma2 * Qinv * Qinv;
    PsdCheck out;
    out.min_eigenvalue = min_symmetric_eigenvalue(lhs - rhs);
    out.holds = out.min_eigenvalue >= -kPsdTolerance;
    return out;
}

double low_kernel_min_eigenvalue(const Ar1Model& model)
{
    const Eigen::MatrixXd& XL = model.data_low.inputs;
    if (model.data_low.size() == 0)
        return std::numeric_limits<double>::infinity();
    return SymMatrix(kernel_matrix(model.kernel_low, XL, XL)).min_eigenvalue();
}

SymMatrix conditional_cov_exact(const Ar1Model& model)
{
    model.validate();
    require_high_inputs(model);
    Eigen::MatrixXd C = high_prior_block(model);
    if (model.data_low.size() > 0) {
        const Eigen::MatrixXd& XL = model.data_low.inputs;
        Eigen::MatrixXd KLL = kernel_matrix(model.kernel_low, XL, XL);
        KLL.diagonal().array() += model.noise_low();
        const Eigen::MatrixXd KLH = kernel_matrix(model.kernel_low, XL, model.data_high.inputs);
        const Eigen::MatrixXd V = Cholesky::factor(KLL).solve_lower(KLH);
        C.noalias() -= model.rho * model.rho * V.transpose() * V;
    }
    return SymMatrix(0.5 * (C + C.transpose()));
}

SymMatrix conditional_cov_bound(const Ar1Model& model, LowNoiseTerm term)
{
    model.validate();
    require_high_inputs(model);
    Eigen::MatrixXd C = high_prior_block(model);
    if (model.data_low.size() > 0) {
        const Eigen::MatrixXd& XL = model.data_low.inputs;
        const SymMatrix KLL(kernel_matrix(model.kernel_low, XL, XL));
        const double lmin = KLL.min_eigenvalue();
        if (!(model.noise_low() < lmin)) {
            std::ostringstream os;
            os << "bound requires xi_L^2 < lambda_min(k_LL); xi_L^2 = " << model.noise_low()
               << ", lambda_min(k_LL) = " << lmin;
            throw PreconditionError(os.str());
        }
        const Eigen::MatrixXd KLH = kernel_matrix(model.kernel_low, XL, model.data_high.inputs);
        const Eigen::MatrixXd W = KLL.factor().solve(KLH);  // k_LL^{-1} k_LH
        C.noalias() -= model.rho * model.rho * KLH.transpose() * W;
        C.noalias() += low_noise_weight(model, term) * model.noise_low() * W.transpose() * W;
    }
    return SymMatrix(0.5 * (C + C.transpose()));
}

SymMatrix conditional_cov_bound_nested(const Ar1Model& model, LowNoiseTerm term)
{
    model.validate();
    require_high_inputs(model);
    const Eigen::MatrixXd& XH = model.data_high.inputs;
    Eigen::MatrixXd C = kernel_matrix(model.kernel_delta, XH, XH);
    C.diagonal().array() += model.noise_high();
    if (model.data_low.size() > 0) {
        const Eigen::MatrixXd& XL = model.data_low.inputs;
        const SymMatrix KLL(kernel_matrix(model.kernel_low, XL, XL));
        const Eigen::MatrixXd KLH = kernel_matrix(model.kernel_low, XL, XH);
        const Eigen::MatrixXd W = KLL.factor().solve(KLH);
        C.noalias() += low_noise_weight(model, term) * model.noise_low() * W.transpose() * W;
    }
    return SymMatrix(0.5 * (C + C.transpose()));
}

std::vector<Eigen::Index> low_subset_for_bound(const Ar1Model& model)
{
    // Incremental Cholesky of k_S - c I; a row is kept when the new pivot stays
    // positive, i.e. lambda_min(k_S) > c after adding it.
    const Eigen::MatrixXd& XL = model.data_low.inputs;
    const Eigen::Index n = model.data_low.size();
    const double c = model.noise_low() * (1.0 + 1e-9) + 1e-14;
    std::vector<Eigen::Index> kept;
    Eigen::MatrixXd L(0, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd xi = XL.row(i);
        const auto k = static_cast<Eigen::Index>(kept.size());
        Eigen::VectorXd cross(k);
        for (Eigen::Index j = 0; j < k; ++j)
            cross[j] = kernel_eval(model.kernel_low, XL.row(kept[static_cast<std::size_t>(j)]).transpose(), xi);
        Eigen::VectorXd l = cross;
        if (k > 0)
            L.triangularView<Eigen::Lower>().solveInPlace(l);
        const double pivot = kernel_eval(model.kernel_low, xi, xi) - c - l.squaredNorm();
        if (!(pivot > 1e-12 * model.kernel_low.signal_variance))
            continue;
        Eigen::MatrixXd next = Eigen::MatrixXd::Zero(k + 1, k + 1);
        next.topLeftCorner(k, k) = L;
        next.block(k, 0, 1, k) = l.transpose();
        next(k, k) = std::sqrt(pivot);
        L = std::move(next);
        kept.push_back(i);
    }
    return kept;
}

InfoGainBound info_gain_bound(const SymMatrix& k_tilde, double noise_high, int T)
{
    if (T < 1)
        throw InvalidInput("information gain bound needs T >= 1");
    if (!(noise_high > 0.0))
        throw InvalidInput("information gain bound needs a positive noise variance");
    if (k_tilde.size() == 0)
        throw InvalidInput("information gain bound needs a non-empty covariance");

    InfoGainBound out;
    Eigen::VectorXd eig = k_tilde.eigenvalues_descending();
    const double scale = std::max(1.0, eig.cwiseAbs().maxCoeff());
    if (eig[eig.size() - 1] < -kPsdTolerance * scale)
        throw InvalidInput("k~ is not positive semidefinite (min eigenvalue " + std::to_string(eig[eig.size() - 1]) +
                           ")");
    eig = eig.cwiseMax(0.0);
    out.eigenvalues = eig;
    out.horizon_terms = static_cast<int>(std::min<Eigen::Index>(T, eig.size()));
    out.allocation.assign(static_cast<std::size_t>(out.horizon_terms), 0);

    auto term = [&](int t, int m) { return std::log1p(static_cast<double>(m) * eig[t] / noise_high); };
    for (int unit = 0; unit < T; ++unit) {
        int best = 0;
        double best_gain = -1.0;
        for (int t = 0; t < out.horizon_terms; ++t) {
            const int m = out.allocation[static_cast<std::size_t>(t)];
            const double gain = term(t, m + 1) - term(t, m);
            if (gain > best_gain) {
                best_gain = gain;
                best = t;
            }
        }
        ++out.allocation[static_cast<std::size_t>(best)];
    }
    double sum = 0.0;
    for (int t = 0; t < out.horizon_terms; ++t)
        sum += term(t, out.allocation[static_cast<std::size_t>(t)]);
    out.gamma = 0.5 / (1.0 - std::exp(-1.0)) * sum;
    return out;
}

InfoGain info_gain_exact(const SymMatrix& cov, double noise, int T)
{
    if (!(noise > 0.0))
        throw InvalidInput("information gain needs a positive noise variance");
    if (T < 1)
        throw InvalidInput("information gain needs T >= 1");
    if (T > cov.size())
        throw InvalidInput("subset size T = " + std::to_string(T) + " exceeds the covariance dimension " +
                           std::to_string(cov.size()));

    // Chain rule: each pick adds 1/2 log(1 + s_i / noise) with s_i the latent
    // variance conditioned on the noisy observations already chosen.
    Eigen::MatrixXd S = cov.matrix();
    std::vector<bool> used(static_cast<std::size_t>(cov.size()), false);
    InfoGain out;
    for (int step = 0; step < T; ++step) {
        Eigen::Index best = -1;
        double best_var = -1.0;
        for (Eigen::Index i = 0; i < S.rows(); ++i) {
            if (used[static_cast<std::size_t>(i)])
                continue;
            const double v = std::max(0.0, S(i, i));
            if (v > best_var) {
                best_var = v;
                best = i;
            }
        }
        used[static_cast<std::size_t>(best)] = true;
        out.subset.push_back(best);
        out.gamma += 0.5 * std::log1p(best_var / noise);
        const Eigen::VectorXd col = S.col(best);
        S.noalias() -= col * col.transpose() / (S(best, best) + noise);
    }
    return out;
}

double information_gain(const Eigen::MatrixXd& cov, double noise)
{
    if (!(noise > 0.0))
        throw InvalidInput("information gain needs a positive noise variance");
    if (cov.rows() != cov.cols())
        throw InvalidInput("information gain needs a square covariance");
    if (cov.rows() == 0)
        return 0.0;
    Eigen::MatrixXd M = cov / noise;
    M = 0.5 * (M + M.transpose());
    M.diagonal().array() += 1.0;
    return 0.5 * Cholesky::factor(M).log_determinant();
}

RegretBound regret_bound(int T, double beta_T, double gamma_tilde, double v_low2, double v_delta2, double rho,
                         double noise_high, VarianceForm form)
{
    if (T < 1)
        throw InvalidInput("regret bound needs T >= 1");
    if (!(beta_T >= 0.0) || !(gamma_tilde >= 0.0))
        throw InvalidInput("beta_T and gamma~ must be non-negative");
    if (!(noise_high > 0.0))
        throw InvalidInput("regret bound needs a positive noise variance");
    RegretBound out;
    const double rho_factor = form == VarianceForm::RhoSquared ? rho * rho : rho;
    out.v_mf2 = rho_factor * v_low2 + v_delta2;
    if (!(out.v_mf2 > 0.0) || !std::isfinite(out.v_mf2))
        throw InvalidInput("v_MF^2 must be positive (got " + std::to_string(out.v_mf2) + ")");
    out.c1 = 8.0 * out.v_mf2 / std::log1p(out.v_mf2 / noise_high);
    out.bound = std::sqrt(out.c1 * static_cast<double>(T) * beta_T * gamma_tilde);
    return out;
}

BoundReport make_bound_report(const Ar1Model& model, int T, double beta_T, const KernelSpec& single_fidelity_kernel,
                              LowNoiseTerm term)
{
    model.validate();
    require_high_inputs(model);
    BoundReport r;
    r.T = T;
    r.beta_T = beta_T;
    r.low_points_total = model.data_low.size();
    r.low_kernel_min_eigenvalue = low_kernel_min_eigenvalue(model);
    r.precondition_holds = model.noise_low() < r.low_kernel_min_eigenvalue;

    if (r.precondition_holds) {
        r.low_points_used = r.low_points_total;
        r.k_tilde = conditional_cov_bound(model, term);
    } else {
        Ar1Model reduced = model;
        const std::vector<Eigen::Index> keep = low_subset_for_bound(model);
        reduced.data_low.inputs = rows_of(model.data_low.inputs, keep);
        Eigen::VectorXd y(static_cast<Eigen::Index>(keep.size()));
        for (std::size_t i = 0; i < keep.size(); ++i)
            y[static_cast<Eigen::Index>(i)] = model.data_low.outputs[keep[i]];
        reduced.data_low.outputs = y;
        r.low_points_used = reduced.data_low.size();
        r.k_tilde = conditional_cov_bound(reduced, term);
    }

    const SymMatrix exact = conditional_cov_exact(model);
    r.dominance_margin = min_symmetric_eigenvalue(r.k_tilde.matrix() - exact.matrix());

    const InfoGainBound g = info_gain_bound(r.k_tilde, model.noise_high(), T);
    r.eigenvalues = g.eigenvalues;
    r.gamma_tilde = g.gamma;
    r.horizon_terms = g.horizon_terms;

    Eigen::MatrixXd latent = exact.matrix();
    latent.diagonal().array() -= model.noise_high();
    const SymMatrix latent_cov(latent);
    r.realized_info_gain =
        info_gain_exact(latent_cov, model.noise_high(), static_cast<int>(latent_cov.size())).gamma;

    r.printed = regret_bound(T, beta_T, r.gamma_tilde, model.kernel_low.signal_variance,
                             model.kernel_delta.signal_variance, model.rho, model.noise_high(),
                             VarianceForm::AsPrinted);
    r.rho_squared = regret_bound(T, beta_T, r.gamma_tilde, model.kernel_low.signal_variance,
                                 model.kernel_delta.signal_variance, model.rho, model.noise_high(),
                                 VarianceForm::RhoSquared);

    const Eigen::MatrixXd& XH = model.data_high.inputs;
    Eigen::MatrixXd single = kernel_matrix(single_fidelity_kernel, XH, XH);
    single.diagonal().array() += model.noise_high();
    r.single_fidelity_max_eigenvalue = SymMatrix(single).max_eigenvalue();
    r.multi_fidelity_benefit = r.k_tilde.max_eigenvalue() < r.single_fidelity_max_eigenvalue;
    return r;
}

} // namespace mftune
