#ifndef MFTUNE_HRI_HPP
#define MFTUNE_HRI_HPP

#include <Eigen/Dense>

#include "mftune/rng.hpp"

namespace mftune {

/// Human PD impedance gains, K_d = kd I_n and K_p = kp I_n, for
///   K_d f_h' + K_p f_h = e.
struct OperatorGains {
    double kd = 10.0;
    double kp = 20.0;

    void validate() const;
};

/// Population of operators. With `spread_is_variance` the spreads are
/// variances (N(mean, variance) notation); otherwise standard deviations.
struct OperatorDistribution {
    double mean_kd = 10.0;
    double spread_kd = 5.0;
    double mean_kp = 20.0;
    double spread_kp = 5.0;
    bool spread_is_variance = true;
    double min_gain = 0.1;
    int max_draws = 1000;
};

/// Augmented human-robot LTI plant with state Z = [e; e'; f_h] (3n):
///   Z' = A Z + B u + d,  u = -K Z.
struct HriPlant {
    int dof = 0;
    OperatorGains gains;
    Eigen::MatrixXd A;            // 3n x 3n
    Eigen::MatrixXd B;            // 3n x n
    Eigen::MatrixXd Q;            // 3n x 3n, PSD
    Eigen::MatrixXd R;            // n x n, PD
    Eigen::MatrixXd initial;      // 3n x c, one initial condition per column
    Eigen::VectorXd disturbance;  // 3n

    Eigen::Index state_dim() const { return 3 * dof; }
};

/// Q = diag(0.1 on the 2n error/error-rate states, 10 on the n human-force
/// states).
Eigen::MatrixXd default_state_weight(int dof);
Eigen::MatrixXd default_input_weight(int dof);
/// [I_n; 0; 0]: unit initial position error per axis, at rest, no human force.
Eigen::MatrixXd default_initial_conditions(int dof);

/// Builds A = [[A_r, 0], [B_h, A_h]] and B = [B_r; 0] with the double
/// integrator A_r, B_r, A_h = -(kp/kd) I and B_h = [(1/kd) I, 0]. An empty
/// disturbance means zero.
HriPlant build_plant(int dof, const OperatorGains& gains, const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                     const Eigen::MatrixXd& initial, const Eigen::VectorXd& disturbance = Eigen::VectorXd());

/// Plant with the default Q, R and initial conditions.
HriPlant build_default_plant(int dof, const OperatorGains& gains,
                             const Eigen::VectorXd& disturbance = Eigen::VectorXd());

/// K(x) = [x1 I, x2 I, x3 I] (n x 3n): stiffness, damping and human-force
/// gains with unit desired inertia.
Eigen::MatrixXd build_controller(const Eigen::Ref<const Eigen::Vector3d>& x, int dof);

Eigen::MatrixXd closed_loop_matrix(const HriPlant& plant, const Eigen::MatrixXd& K);

struct IntegrationSettings {
    double horizon = 10.0;
    double step = 1e-3;
    double divergence_threshold = 1e6;
};

struct CostResult {
    double cost = 0.0;
    bool diverged = false;
};

/// Finite-horizon quadratic cost, summed over the initial-condition columns,
///   J = sum_c int_0^T Z_c^T (Q + K^T R K) Z_c dt,
/// integrating the closed loop and the running cost together with classical
/// fixed-step RK4. Integration stops early, flagging divergence, once the
/// state norm exceeds the threshold; the cost accumulated so far is returned.
CostResult evaluate_cost(const HriPlant& plant, const Eigen::MatrixXd& K, const IntegrationSettings& settings = {});

/// Performance -J(K(x)) without noise.
CostResult performance(const HriPlant& plant, const Eigen::Ref<const Eigen::Vector3d>& x,
                       const IntegrationSettings& settings = {});

/// y = -J(K(x)) + eta with eta ~ N(0, noise_variance).
double performance_sample(const HriPlant& plant, const Eigen::Ref<const Eigen::Vector3d>& x, double noise_variance,
                          CounterRng& rng, const IntegrationSettings& settings = {});

OperatorGains sample_operator(CounterRng& rng, const OperatorDistribution& dist = {});

} // namespace mftune

#endif // MFTUNE_HRI_HPP
