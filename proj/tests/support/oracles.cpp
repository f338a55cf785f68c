#include "oracles.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

double se(double v2, const Eigen::VectorXd& ls, const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    double s = 0.0;
    for (Eigen::Index j = 0; j < a.size(); ++j) {
        const double u = (a[j] - b[j]) / ls[j];
        s += u * u;
    }
    return v2 * std::exp(-0.5 * s);
}

Gaussian condition(const Eigen::MatrixXd& S, const std::vector<int>& observed, const Eigen::VectorXd& y,
                   const std::vector<int>& target)
{
    const int no = static_cast<int>(observed.size());
    const int nt = static_cast<int>(target.size());
    Eigen::MatrixXd Soo(no, no), Sto(nt, no), Stt(nt, nt);
    for (int i = 0; i < no; ++i)
        for (int j = 0; j < no; ++j)
            Soo(i, j) = S(observed[i], observed[j]);
    for (int i = 0; i < nt; ++i)
        for (int j = 0; j < no; ++j)
            Sto(i, j) = S(target[i], observed[j]);
    for (int i = 0; i < nt; ++i)
        for (int j = 0; j < nt; ++j)
            Stt(i, j) = S(target[i], target[j]);
    Gaussian g;
    if (no == 0) {
        g.mean = Eigen::VectorXd::Zero(nt);
        g.cov = Stt;
        return g;
    }
    const Eigen::MatrixXd inv = Soo.fullPivLu().inverse();
    g.mean = Sto * inv * y;
    g.cov = Stt - Sto * inv * Sto.transpose();
    return g;
}

Moments gp_condition(double v2, const Eigen::VectorXd& ls, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     double noise, const Eigen::VectorXd& x_query)
{
    const int n = static_cast<int>(X.rows());
    Eigen::MatrixXd S(n + 1, n + 1);
    std::vector<Eigen::VectorXd> pts;
    pts.push_back(x_query);
    for (int i = 0; i < n; ++i)
        pts.push_back(X.row(i).transpose());
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j)
            S(i, j) = se(v2, ls, pts[i], pts[j]) + ((i == j && i > 0) ? noise : 0.0);
    std::vector<int> obs;
    for (int i = 1; i <= n; ++i)
        obs.push_back(i);
    const Gaussian g = condition(S, obs, y, {0});
    return {g.mean[0], std::sqrt(std::max(0.0, g.cov(0, 0)))};
}

Eigen::MatrixXd ar1_joint(const Ar1Instance& m, const Eigen::VectorXd& x_query)
{
    const int nl = static_cast<int>(m.X_low.rows());
    const int nh = static_cast<int>(m.X_high.rows());
    const int n = nl + nh + 1;
    // Each variable is (point, kind): kind 0 = y_L, 1 = y_H, 2 = f(x*).
    std::vector<Eigen::VectorXd> pts;
    std::vector<int> kind;
    for (int i = 0; i < nl; ++i) {
        pts.push_back(m.X_low.row(i).transpose());
        kind.push_back(0);
    }
    for (int i = 0; i < nh; ++i) {
        pts.push_back(m.X_high.row(i).transpose());
        kind.push_back(1);
    }
    pts.push_back(x_query);
    kind.push_back(2);

    Eigen::MatrixXd S(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double kl = se(m.v_low2, m.ls_low, pts[i], pts[j]);
            const double kd = se(m.v_delta2, m.ls_delta, pts[i], pts[j]);
            // Loading of f_L: 1 for a low observation, rho otherwise; delta
            // enters every non-low variable with loading 1.
            const double ai = kind[i] == 0 ? 1.0 : m.rho;
            const double aj = kind[j] == 0 ? 1.0 : m.rho;
            const double bi = kind[i] == 0 ? 0.0 : 1.0;
            const double bj = kind[j] == 0 ? 0.0 : 1.0;
            double v = ai * aj * kl + bi * bj * kd;
            if (i == j && kind[i] == 0)
                v += m.noise_low;
            if (i == j && kind[i] == 1)
                v += m.noise_high;
            S(i, j) = v;
        }
    }
    return S;
}

Moments ar1_condition(const Ar1Instance& m, const Eigen::VectorXd& y_low, const Eigen::VectorXd& y_high,
                      const Eigen::VectorXd& x_query)
{
    const Eigen::MatrixXd S = ar1_joint(m, x_query);
    const int nl = static_cast<int>(y_low.size());
    const int nh = static_cast<int>(y_high.size());
    std::vector<int> obs;
    for (int i = 0; i < nl + nh; ++i)
        obs.push_back(i);
    Eigen::VectorXd y(nl + nh);
    y << y_low, y_high;
    const Gaussian g = condition(S, obs, y, {nl + nh});
    return {g.mean[0], std::sqrt(std::max(0.0, g.cov(0, 0)))};
}

double gaussian_log_density(const Eigen::MatrixXd& C, const Eigen::VectorXd& y)
{
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(C);
    const double quad = y.dot(lu.solve(y));
    return -0.5 * quad - 0.5 * std::log(lu.determinant()) -
           0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
}

Eigen::MatrixXd lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& W)
{
    const Eigen::Index n = A.rows();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    // vec(A^T P + P A) = (I kron A^T + A^T kron I) vec(P), column-major vec.
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            K.block(i * n, j * n, n, n) += I(i, j) * A.transpose();
            K.block(i * n, j * n, n, n) += A(j, i) * I;
        }
    const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(W.data(), n * n);
    const Eigen::VectorXd p = K.fullPivLu().solve(-w);
    Eigen::MatrixXd P = Eigen::Map<const Eigen::MatrixXd>(p.data(), n, n);
    return 0.5 * (P + P.transpose());
}

double rk4_cost(const Eigen::MatrixXd& A, const Eigen::VectorXd& d, const Eigen::MatrixXd& W,
                const Eigen::MatrixXd& Z0, double horizon, double step)
{
    const Eigen::Index n = A.rows();
    auto rhs = [&](const Eigen::VectorXd& s) {
        Eigen::VectorXd out(n + 1);
        const Eigen::VectorXd z = s.head(n);
        out.head(n) = A * z + d;
        out[n] = z.dot(W * z);
        return out;
    };
    const long steps = std::lround(horizon / step);
    double total = 0.0;
    for (Eigen::Index c = 0; c < Z0.cols(); ++c) {
        Eigen::VectorXd s = Eigen::VectorXd::Zero(n + 1);
        s.head(n) = Z0.col(c);
        for (long k = 0; k < steps; ++k) {
            const Eigen::VectorXd k1 = rhs(s);
            const Eigen::VectorXd k2 = rhs(s + 0.5 * step * k1);
            const Eigen::VectorXd k3 = rhs(s + 0.5 * step * k2);
            const Eigen::VectorXd k4 = rhs(s + step * k3);
            s += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        total += s[n];
    }
    return total;
}

double best_allocation(const std::vector<double>& eigenvalues, double noise, int T)
{
    const int h = static_cast<int>(eigenvalues.size());
    std::vector<int> m(h, 0);
    double best = -1.0;
    std::function<void(int, int)> rec = [&](int pos, int left) {
        if (pos == h - 1) {
            m[pos] = left;
            double s = 0.0;
            for (int t = 0; t < h; ++t)
                s += std::log(1.0 + m[t] * eigenvalues[t] / noise);
            best = std::max(best, s);
            return;
        }
        for (int k = 0; k <= left; ++k) {
            m[pos] = k;
            rec(pos + 1, left - k);
        }
    };
    if (h == 0)
        return 0.0;
    rec(0, T);
    return best;
}

double best_subset_gain(const Eigen::MatrixXd& C, double noise, int T)
{
    const int n = static_cast<int>(C.rows());
    double best = -1.0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (std::popcount(mask) != T)
            continue;
        std::vector<int> idx;
        for (int i = 0; i < n; ++i)
            if (mask & (1u << i))
                idx.push_back(i);
        Eigen::MatrixXd M(T, T);
        for (int i = 0; i < T; ++i)
            for (int j = 0; j < T; ++j)
                M(i, j) = (i == j ? 1.0 : 0.0) + C(idx[i], idx[j]) / noise;
        best = std::max(best, 0.5 * std::log(M.fullPivLu().determinant()));
    }
    return best;
}

} // namespace oracle
