#include "lstmctl/mpc.hpp"

#include <cmath>
#include <string>

#include "lstmctl/errors.hpp"

namespace lstmctl {
namespace {

Vector stacked_deviation(const LstmState& s, const LstmState& ref) {
    const std::size_t n = s.x.size();
    Vector d(2 * n);
    for (std::size_t j = 0; j < n; ++j) {
        d[j] = s.x[j] - ref.x[j];
        d[n + j] = s.xi[j] - ref.xi[j];
    }
    return d;
}

double quad(const Matrix& M, std::span<const double> v) {
    double acc = 0.0;
    for (std::size_t r = 0; r < M.rows(); ++r) acc += v[r] * dot(M.row(r), v);
    return acc;
}

void check_horizon(const LstmParams& p, const MpcConfig& cfg, std::span<const double> U) {
    if (U.size() != static_cast<std::size_t>(cfg.horizon) * p.n_u)
        throw DimensionError("U", "expected " + std::to_string(cfg.horizon * static_cast<int>(p.n_u)) +
                                      " moves, got " + std::to_string(U.size()));
}

}  // namespace

DeltaVec delta_vec(const LstmState& s, const LstmState& ref) {
    DeltaVec d;
    for (std::size_t j = 0; j < s.x.size(); ++j) {
        d.d1 += (s.x[j] - ref.x[j]) * (s.x[j] - ref.x[j]);
        d.d2 += (s.xi[j] - ref.xi[j]) * (s.xi[j] - ref.xi[j]);
    }
    d.d1 = std::sqrt(d.d1);
    d.d2 = std::sqrt(d.d2);
    return d;
}

Matrix terminal_weight(const Gain2x2& A, double q) {
    if (!(q > 0.0)) throw InvalidArgument("terminal_weight: q must be positive");
    if (!(spectral_radius(A) < 1.0))
        throw CertificationError("terminal_weight: A_delta is not Schur stable (rho = " +
                                 std::to_string(spectral_radius(A)) + ")");
    // vec(A^T P A) = (A^T kron A^T) vec(P), row-major vec.
    const double a[2][2] = {{A.a11, A.a12}, {A.a21, A.a22}};
    Matrix K(4, 4);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) {
                    // (A^T P A)_{ij} = sum_{k,l} A_{ki} P_{kl} A_{lj}
                    K(static_cast<std::size_t>(2 * i + j), static_cast<std::size_t>(2 * k + l)) = a[k][i] * a[l][j];
                }
    for (std::size_t d = 0; d < 4; ++d) K(d, d) -= 1.0;
    const double rhs = -(q + kTerminalMargin * q);
    Vector vecP = solve_linear(K, {rhs, 0.0, 0.0, rhs});
    Matrix P(2, 2, vecP);
    const double off = 0.5 * (P(0, 1) + P(1, 0));
    P(0, 1) = P(1, 0) = off;
    return P;
}

std::pair<double, double> lyapunov_residual_eigs(const Gain2x2& A, const Matrix& P, double q) {
    const Matrix Am = A.to_matrix();
    Matrix M = Am.transposed() * P * Am - P;
    M(0, 0) += q;
    M(1, 1) += q;
    return sym_eig_2x2(M(0, 0), 0.5 * (M(0, 1) + M(1, 0)), M(1, 1));
}

void MpcConfig::validate(const LstmParams& p, const Gain2x2& A_delta) const {
    if (horizon < 1) throw InvalidArgument("MPC horizon must be at least 1");
    if (Q.rows() != 2 * p.n_x || Q.cols() != 2 * p.n_x) throw DimensionError("Q", "must be 2n_x x 2n_x");
    if (R.rows() != p.n_u || R.cols() != p.n_u) throw DimensionError("R", "must be n_u x n_u");
    if (P.rows() != 2 || P.cols() != 2) throw DimensionError("P", "must be 2x2");
    if (equilibrium.u_bar.size() != p.n_u) throw DimensionError("u_bar", "must have n_u entries");
    if (equilibrium.chi_bar.x.size() != p.n_x || equilibrium.chi_bar.xi.size() != p.n_x)
        throw DimensionError("chi_bar", "must have n_x entries per block");
    for (double u : equilibrium.u_bar)
        if (!box.contains(u)) throw InvalidArgument("u_bar outside the input box");
    const auto eig = lyapunov_residual_eigs(A_delta, P, q);
    if (!(eig.second < -1e-12)) throw InvalidArgument("terminal weight violates the Lyapunov condition");
}

MpcConfig make_mpc_config(const LstmParams& p, const Gain2x2& A_delta, int horizon, double q_scale, double r,
                          const InputBox& box, EquilibriumTriple equilibrium) {
    MpcConfig cfg;
    cfg.horizon = horizon;
    cfg.Q = Matrix::identity(2 * p.n_x) * q_scale;
    cfg.R = Matrix::identity(p.n_u) * r;
    cfg.q = spectral_norm(cfg.Q);  // Q is symmetric positive definite
    cfg.P = terminal_weight(A_delta, cfg.q);
    cfg.box = box;
    cfg.equilibrium = std::move(equilibrium);
    cfg.validate(p, A_delta);
    return cfg;
}

double ocp_cost(const LstmParams& p, const MpcConfig& cfg, const LstmState& chi0, std::span<const double> U) {
    check_horizon(p, cfg, U);
    const LstmState& ref = cfg.equilibrium.chi_bar;
    const Vector& u_bar = cfg.equilibrium.u_bar;
    const std::size_t nu = p.n_u;
    double J = 0.0;
    LstmState s = chi0;
    Vector du(nu);
    for (int i = 0; i < cfg.horizon; ++i) {
        const auto ui = U.subspan(static_cast<std::size_t>(i) * nu, nu);
        J += quad(cfg.Q, stacked_deviation(s, ref));
        for (std::size_t k = 0; k < nu; ++k) du[k] = ui[k] - u_bar[k];
        J += quad(cfg.R, du);
        s = step(p, s, ui);
    }
    const DeltaVec d = delta_vec(s, ref);
    const double dv[2] = {d.d1, d.d2};
    J += quad(cfg.P, dv);
    return J;
}

double ocp_cost_gradient(const LstmParams& p, const MpcConfig& cfg, const LstmState& chi0,
                         std::span<const double> U, Vector& grad) {
    check_horizon(p, cfg, U);
    const LstmState& ref = cfg.equilibrium.chi_bar;
    const Vector& u_bar = cfg.equilibrium.u_bar;
    const std::size_t nu = p.n_u, nx = p.n_x;
    const auto N = static_cast<std::size_t>(cfg.horizon);

    std::vector<LstmState> states(N + 1);
    std::vector<StepActivations> acts(N);
    states[0] = chi0;
    double J = 0.0;
    Vector du(nu);
    for (std::size_t i = 0; i < N; ++i) {
        const auto ui = U.subspan(i * nu, nu);
        J += quad(cfg.Q, stacked_deviation(states[i], ref));
        for (std::size_t k = 0; k < nu; ++k) du[k] = ui[k] - u_bar[k];
        J += quad(cfg.R, du);
        states[i + 1] = step_record(p, states[i], ui, acts[i]);
    }
    const DeltaVec d = delta_vec(states[N], ref);
    const double dv[2] = {d.d1, d.d2};
    J += quad(cfg.P, dv);

    // dJ/dDelta = 2 P Delta (P symmetric); d|v|/dv = v/|v|, taken as 0 at v = 0.
    const double g1 = 2.0 * (cfg.P(0, 0) * d.d1 + cfg.P(0, 1) * d.d2);
    const double g2 = 2.0 * (cfg.P(1, 0) * d.d1 + cfg.P(1, 1) * d.d2);
    StepAdjoint adj;
    adj.g_x.assign(nx, 0.0);
    adj.g_xi.assign(nx, 0.0);
    for (std::size_t j = 0; j < nx; ++j) {
        if (d.d1 > 0.0) adj.g_x[j] = g1 * (states[N].x[j] - ref.x[j]) / d.d1;
        if (d.d2 > 0.0) adj.g_xi[j] = g2 * (states[N].xi[j] - ref.xi[j]) / d.d2;
    }

    grad.assign(N * nu, 0.0);
    Vector gu(nu);
    for (std::size_t i = N; i-- > 0;) {
        const auto ui = U.subspan(i * nu, nu);
        std::fill(gu.begin(), gu.end(), 0.0);
        adj.g_u = &gu;
        step_adjoint(p, states[i], ui, acts[i], adj);
        // Stage term on chi(i): 2 Q (chi(i) - chi_bar).
        const Vector dev = stacked_deviation(states[i], ref);
        Vector qd(2 * nx, 0.0);
        matvec_acc(cfg.Q, dev, qd);
        for (std::size_t j = 0; j < nx; ++j) {
            adj.g_x[j] += 2.0 * qd[j];
            adj.g_xi[j] += 2.0 * qd[nx + j];
        }
        for (std::size_t k = 0; k < nu; ++k) du[k] = ui[k] - u_bar[k];
        Vector rd(nu, 0.0);
        matvec_acc(cfg.R, du, rd);
        for (std::size_t k = 0; k < nu; ++k) grad[i * nu + k] = gu[k] + 2.0 * rd[k];
    }
    return J;
}

Vector ocp_gradient(const LstmParams& p, const MpcConfig& cfg, const LstmState& chi0, std::span<const double> U) {
    Vector g;
    ocp_cost_gradient(p, cfg, chi0, U, g);
    return g;
}

OcpSolution solve_ocp(const LstmParams& p, const MpcConfig& cfg, const LstmState& chi0,
                      const std::optional<Vector>& warm, const OcpOptions& opt) {
    const std::size_t nu = p.n_u;
    const std::size_t dim = static_cast<std::size_t>(cfg.horizon) * nu;
    Vector ubar_seq(dim);
    for (std::size_t i = 0; i < dim; ++i) ubar_seq[i] = cfg.equilibrium.u_bar[i % nu];

    Vector x = ubar_seq;
    double J = ocp_cost(p, cfg, chi0, x);
    if (warm) {
        if (warm->size() != dim) throw DimensionError("warm", "warm start length must be horizon * n_u");
        Vector w = *warm;
        for (double& v : w) v = cfg.box.project(v);
        const double Jw = ocp_cost(p, cfg, chi0, w);
        if (std::isfinite(Jw) && Jw <= J) {
            x = std::move(w);
            J = Jw;
        }
    }

    OcpSolution sol;
    Vector g, trial(dim);
    double t = 1.0;
    constexpr double kArmijo = 1e-4;
    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        J = ocp_cost_gradient(p, cfg, chi0, x, g);
        double pg = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            const double d = cfg.box.project(x[k] - g[k]) - x[k];
            pg += d * d;
        }
        if (std::sqrt(pg) < opt.tolerance) {
            sol.converged = true;
            break;
        }
        t = std::min(1.0, 4.0 * t);
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            double decrease = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                trial[k] = cfg.box.project(x[k] - t * g[k]);
                decrease += g[k] * (trial[k] - x[k]);
            }
            const double Jt = ocp_cost(p, cfg, chi0, trial);
            if (std::isfinite(Jt) && Jt <= J + kArmijo * decrease) {
                x.swap(trial);
                J = Jt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            // No descent available at machine precision: stationary for practical purposes.
            sol.converged = true;
            break;
        }
    }
    if (!std::isfinite(J)) throw NumericalError("solve_ocp: non-finite cost");
    sol.U = std::move(x);
    sol.J = ocp_cost(p, cfg, chi0, sol.U);
    sol.iterations = it;
    return sol;
}

MpcStepResult mpc_step(const LstmParams& p, const MpcConfig& cfg, const LstmState& chi_hat,
                       const OcpSolution* previous, const OcpOptions& opt) {
    std::optional<Vector> warm;
    const std::size_t nu = p.n_u;
    if (previous != nullptr && previous->U.size() == static_cast<std::size_t>(cfg.horizon) * nu) {
        Vector w(previous->U.begin() + static_cast<std::ptrdiff_t>(nu), previous->U.end());
        for (std::size_t k = 0; k < nu; ++k) w.push_back(cfg.equilibrium.u_bar[k]);
        warm = std::move(w);
    }
    MpcStepResult r;
    r.solution = solve_ocp(p, cfg, chi_hat, warm, opt);
    r.u_applied.assign(r.solution.U.begin(), r.solution.U.begin() + static_cast<std::ptrdiff_t>(nu));
    return r;
}

}  // namespace lstmctl
