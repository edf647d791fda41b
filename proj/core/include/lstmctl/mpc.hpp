#pragma once

#include <optional>
#include <span>
#include <vector>

#include "lstmctl/stability.hpp"

namespace lstmctl {

// Tracking MPC settings. Q weighs the stacked state deviation (2 n_x square),
// R the input deviation, P the terminal deviation vector
// Delta = [|x - x_bar|, |xi - xi_bar|].
struct MpcConfig {
    int horizon = 10;
    Matrix Q;
    Matrix R;
    Matrix P;  // 2x2
    double q = 1.0;  // largest eigenvalue of Q
    InputBox box;
    EquilibriumTriple equilibrium;

    /// Checks dimensions, horizon, and the terminal Lyapunov inequality against A_delta.
    void validate(const LstmParams& p, const Gain2x2& A_delta) const;
};

struct DeltaVec {
    double d1 = 0.0;  // |x - x_bar|
    double d2 = 0.0;  // |xi - xi_bar|
};

DeltaVec delta_vec(const LstmState& s, const LstmState& ref);

struct OcpSolution {
    Vector U;  // horizon * n_u entries, move i at [i*n_u, (i+1)*n_u)
    double J = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Margin added to q in the terminal Lyapunov equation, relative to q.
inline constexpr double kTerminalMargin = 0.01;

/// Solves A^T P A - P = -(q + 0.01 q) I by the vectorized 4x4 system.
/// Throws CertificationError when rho(A_delta) >= 1.
Matrix terminal_weight(const Gain2x2& A_delta, double q);

/// Eigenvalues of A^T P A - P + q I (ascending).
std::pair<double, double> lyapunov_residual_eigs(const Gain2x2& A_delta, const Matrix& P, double q);

/// Convenience constructor: Q = q_scale * I, R = r * I, P from A_delta.
MpcConfig make_mpc_config(const LstmParams& p, const Gain2x2& A_delta, int horizon, double q_scale, double r,
                          const InputBox& box, EquilibriumTriple equilibrium);

double ocp_cost(const LstmParams& p, const MpcConfig& cfg, const LstmState& chi0, std::span<const double> U);

/// Exact gradient of ocp_cost by a reverse sweep through the prediction.
Vector ocp_gradient(const LstmParams& p, const MpcConfig& cfg, const LstmState& chi0, std::span<const double> U);

/// Cost and gradient in one forward/backward pass.
double ocp_cost_gradient(const LstmParams& p, const MpcConfig& cfg, const LstmState& chi0,
                         std::span<const double> U, Vector& grad);

struct OcpOptions {
    int max_iterations = 500;
    double tolerance = 1e-8;  // projected-gradient norm
};

/// Projected gradient with Armijo backtracking. Starts from the cheaper of the
/// warm start and the constant u_bar sequence, so J never exceeds either.
OcpSolution solve_ocp(const LstmParams& p, const MpcConfig& cfg, const LstmState& chi0,
                      const std::optional<Vector>& warm = std::nullopt, const OcpOptions& opt = {});

struct MpcStepResult {
    Vector u_applied;
    OcpSolution solution;
};

/// Receding-horizon step: warm start is the previous plan shifted by one move
/// with u_bar appended; only the first move is applied.
MpcStepResult mpc_step(const LstmParams& p, const MpcConfig& cfg, const LstmState& chi_hat,
                       const OcpSolution* previous = nullptr, const OcpOptions& opt = {});

}  // namespace lstmctl
