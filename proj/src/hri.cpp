#include "mftune/hri.hpp"

#include <cmath>
#include <random>
#include <string>

#include "mftune/errors.hpp"

namespace mftune {

void OperatorGains::validate() const
{
    if (!std::isfinite(kd) || !std::isfinite(kp))
        throw InvalidInput("operator gains must be finite");
    if (kd == 0.0)
        throw InvalidInput("human derivative gain kd must be non-zero (K_d must be invertible)");
}

Eigen::MatrixXd default_state_weight(int dof)
{
    Eigen::VectorXd diag(3 * dof);
    diag.head(2 * dof).setConstant(0.1);
    diag.tail(dof).setConstant(10.0);
    return diag.asDiagonal();
}

Eigen::MatrixXd default_input_weight(int dof)
{
    return Eigen::MatrixXd::Identity(dof, dof);
}

Eigen::MatrixXd default_initial_conditions(int dof)
{
    Eigen::MatrixXd Z0 = Eigen::MatrixXd::Zero(3 * dof, dof);
    Z0.topRows(dof).setIdentity();
    return Z0;
}

HriPlant build_plant(int dof, const OperatorGains& gains, const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                     const Eigen::MatrixXd& initial, const Eigen::VectorXd& disturbance)
{
    if (dof < 1)
        throw InvalidInput("plant needs at least one degree of freedom");
    gains.validate();
    const Eigen::Index n = dof;
    const Eigen::Index s = 3 * n;
    if (Q.rows() != s || Q.cols() != s)
        throw InvalidInput("state weight Q must be " + std::to_string(s) + "x" + std::to_string(s));
    if (R.rows() != n || R.cols() != n)
        throw InvalidInput("input weight R must be " + std::to_string(n) + "x" + std::to_string(n));
    if (initial.rows() != s || initial.cols() < 1)
        throw InvalidInput("initial conditions must have " + std::to_string(s) + " rows");
    if (disturbance.size() != 0 && disturbance.size() != s)
        throw InvalidInput("disturbance must have " + std::to_string(s) + " entries");

    HriPlant p;
    p.dof = dof;
    p.gains = gains;
    p.A = Eigen::MatrixXd::Zero(s, s);
    p.A.block(0, n, n, n).setIdentity();
    p.A.block(2 * n, 0, n, n).diagonal().setConstant(1.0 / gains.kd);
    p.A.block(2 * n, 2 * n, n, n).diagonal().setConstant(-gains.kp / gains.kd);
    p.B = Eigen::MatrixXd::Zero(s, n);
    p.B.block(n, 0, n, n).setIdentity();
    p.Q = Q;
    p.R = R;
    p.initial = initial;
    p.disturbance = disturbance.size() == 0 ? Eigen::VectorXd::Zero(s) : disturbance;
    return p;
}

HriPlant build_default_plant(int dof, const OperatorGains& gains, const Eigen::VectorXd& disturbance)
{
    return build_plant(dof, gains, default_state_weight(dof), default_input_weight(dof),
                       default_initial_conditions(dof), disturbance);
}

Eigen::MatrixXd build_controller(const Eigen::Ref<const Eigen::Vector3d>& x, int dof)
{
    const Eigen::Index n = dof;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, 3 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        K(i, i) = x[0];
        K(i, n + i) = x[1];
        K(i, 2 * n + i) = x[2];
    }
    return K;
}

Eigen::MatrixXd closed_loop_matrix(const HriPlant& plant, const Eigen::MatrixXd& K)
{
    if (K.rows() != plant.dof || K.cols() != plant.state_dim())
        throw InvalidInput("controller must be n x 3n");
    return plant.A - plant.B * K;
}

CostResult evaluate_cost(const HriPlant& plant, const Eigen::MatrixXd& K, const IntegrationSettings& settings)
{
    if (!(settings.horizon > 0.0) || !(settings.step > 0.0))
        throw InvalidInput("integration horizon and step must be positive");

    const Eigen::Index s = plant.state_dim();
    const Eigen::MatrixXd Acl = closed_loop_matrix(plant, K);
    const Eigen::MatrixXd W = plant.Q + K.transpose() * plant.R * K;
    const Eigen::VectorXd& d = plant.disturbance;
    const double h = settings.step;
    const auto steps = static_cast<long>(std::llround(settings.horizon / h));

    // One RK4 step of z' = Acl z + d, c' = z^T W z. Every stage state is affine
    // in the step's starting z:
    //   z_i = S_i z + s_i,  S_1 = I, S_2 = I + h/2 Acl, S_3 = I + h/2 Acl S_2,
    //   S_4 = I + h Acl S_3 (and matching offsets), so the step collapses to
    //   z <- Phi z + phi,  c <- c + z^T M z + 2 m^T z + mu
    // with Phi, phi, M, m, mu assembled from the stage maps below.
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(s, s);
    const Eigen::MatrixXd S2 = I + 0.5 * h * Acl;
    const Eigen::VectorXd s2 = 0.5 * h * d;
    const Eigen::MatrixXd S3 = I + 0.5 * h * Acl * S2;
    const Eigen::VectorXd s3 = 0.5 * h * (Acl * s2 + d);
    const Eigen::MatrixXd S4 = I + h * Acl * S3;
    const Eigen::VectorXd s4 = h * (Acl * s3 + d);

    const Eigen::MatrixXd Phi = I + (h / 6.0) * Acl * (I + 2.0 * S2 + 2.0 * S3 + S4);
    const Eigen::VectorXd phi = (h / 6.0) * (Acl * (2.0 * s2 + 2.0 * s3 + s4) + 6.0 * d);

    const Eigen::MatrixXd M =
        (h / 6.0) * (W + 2.0 * S2.transpose() * W * S2 + 2.0 * S3.transpose() * W * S3 + S4.transpose() * W * S4);
    const Eigen::VectorXd m =
        (h / 6.0) * (2.0 * S2.transpose() * W * s2 + 2.0 * S3.transpose() * W * s3 + S4.transpose() * W * s4);
    const double mu = (h / 6.0) * (2.0 * s2.dot(W * s2) + 2.0 * s3.dot(W * s3) + s4.dot(W * s4));

    const double limit2 = settings.divergence_threshold * settings.divergence_threshold;
    CostResult result;
    Eigen::VectorXd z(s), next(s), Mz(s);
    for (Eigen::Index c = 0; c < plant.initial.cols(); ++c) {
        z = plant.initial.col(c);
        double cost = 0.0;
        for (long k = 0; k < steps; ++k) {
            Mz.noalias() = M * z;
            cost += z.dot(Mz) + 2.0 * m.dot(z) + mu;
            next.noalias() = Phi * z;
            z = next + phi;
            const double norm2 = z.squaredNorm();
            if (!(norm2 <= limit2)) {
                result.diverged = true;
                break;
            }
        }
        result.cost += cost;
    }
    return result;
}

CostResult performance(const HriPlant& plant, const Eigen::Ref<const Eigen::Vector3d>& x,
                       const IntegrationSettings& settings)
{
    CostResult r = evaluate_cost(plant, build_controller(x, plant.dof), settings);
    r.cost = -r.cost;
    return r;
}

double performance_sample(const HriPlant& plant, const Eigen::Ref<const Eigen::Vector3d>& x, double noise_variance,
                          CounterRng& rng, const IntegrationSettings& settings)
{
    if (!(noise_variance >= 0.0))
        throw InvalidInput("noise variance must be non-negative");
    const double f = performance(plant, x, settings).cost;
    if (noise_variance == 0.0)
        return f;
    std::normal_distribution<double> noise(0.0, std::sqrt(noise_variance));
    return f + noise(rng);
}

OperatorGains sample_operator(CounterRng& rng, const OperatorDistribution& dist)
{
    const double sd_kd = dist.spread_is_variance ? std::sqrt(dist.spread_kd) : dist.spread_kd;
    const double sd_kp = dist.spread_is_variance ? std::sqrt(dist.spread_kp) : dist.spread_kp;
    std::normal_distribution<double> kd(dist.mean_kd, sd_kd);
    std::normal_distribution<double> kp(dist.mean_kp, sd_kp);
    for (int draw = 0; draw < dist.max_draws; ++draw) {
        const OperatorGains g{kd(rng), kp(rng)};
        if (g.kd >= dist.min_gain && g.kp >= dist.min_gain)
            return g;
    }
    throw InvalidInput("operator rejection sampling exceeded " + std::to_string(dist.max_draws) + " draws");
}

} // namespace mftune
