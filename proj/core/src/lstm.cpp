#include "lstmctl/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lstmctl/errors.hpp"

namespace lstmctl {
namespace {

void check_matrix(const Matrix& m, std::size_t rows, std::size_t cols, const char* field) {
    if (m.rows() != rows || m.cols() != cols) {
        throw DimensionError(field, "expected " + std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
                                        std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
    for (double v : m.data())
        if (!std::isfinite(v)) throw InvalidArgument(std::string("non-finite entry in '") + field + "'");
}

void check_vector(const Vector& v, std::size_t n, const char* field) {
    if (v.size() != n) {
        throw DimensionError(field, "expected length " + std::to_string(n) + ", got " + std::to_string(v.size()));
    }
    for (double x : v)
        if (!std::isfinite(x)) throw InvalidArgument(std::string("non-finite entry in '") + field + "'");
}

void check_gate(const GateWeights& g, std::size_t n_x, std::size_t n_u, char tag) {
    const std::string w = std::string("W_") + tag;
    const std::string u = std::string("U_") + tag;
    const std::string b = std::string("b_") + tag;
    check_matrix(g.input, n_x, n_u, w.c_str());
    check_matrix(g.recurrent, n_x, n_x, u.c_str());
    check_vector(g.bias, n_x, b.c_str());
}

void check_state(const LstmParams& p, const LstmState& s) {
    if (s.x.size() != p.n_x) throw DimensionError("x", "state length " + std::to_string(s.x.size()) +
                                                         " != n_x " + std::to_string(p.n_x));
    if (s.xi.size() != p.n_x) throw DimensionError("xi", "state length " + std::to_string(s.xi.size()) +
                                                           " != n_x " + std::to_string(p.n_x));
}

void check_input(const LstmParams& p, std::span<const double> u) {
    if (u.size() != p.n_u)
        throw DimensionError("u", "input length " + std::to_string(u.size()) + " != n_u " + std::to_string(p.n_u));
    for (double v : u)
        if (!std::isfinite(v)) throw InvalidArgument("non-finite input");
}

void preactivation(const GateWeights& g, std::span<const double> u, std::span<const double> xi,
                   std::span<double> out) {
    std::copy(g.bias.begin(), g.bias.end(), out.begin());
    matvec_acc(g.input, u, out);
    matvec_acc(g.recurrent, xi, out);
}

GateWeights zero_gate(std::size_t n_x, std::size_t n_u) {
    return {Matrix(n_x, n_u), Matrix(n_x, n_x), Vector(n_x, 0.0)};
}

}  // namespace

double logistic(double t) noexcept { return 1.0 / (1.0 + std::exp(-t)); }

LstmParams LstmParams::zeros(std::size_t n_x, std::size_t n_u, std::size_t n_y) {
    LstmParams p;
    p.n_x = n_x;
    p.n_u = n_u;
    p.n_y = n_y;
    p.forget = zero_gate(n_x, n_u);
    p.input = zero_gate(n_x, n_u);
    p.output = zero_gate(n_x, n_u);
    p.cell = zero_gate(n_x, n_u);
    p.readout = Matrix(n_y, n_x);
    p.readout_bias = Vector(n_y, 0.0);
    return p;
}

void LstmParams::validate() const {
    if (n_x == 0 || n_u == 0 || n_y == 0) throw InvalidArgument("n_x, n_u and n_y must be positive");
    check_gate(forget, n_x, n_u, 'f');
    check_gate(input, n_x, n_u, 'i');
    check_gate(output, n_x, n_u, 'o');
    check_gate(cell, n_x, n_u, 'c');
    check_matrix(readout, n_y, n_x, "C");
    check_vector(readout_bias, n_y, "b_y");
}

double state_norm(const LstmState& s) {
    double acc = dot(s.x, s.x) + dot(s.xi, s.xi);
    return std::sqrt(acc);
}

double state_distance(const LstmState& a, const LstmState& b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.x.size(); ++k) acc += (a.x[k] - b.x[k]) * (a.x[k] - b.x[k]);
    for (std::size_t k = 0; k < a.xi.size(); ++k) acc += (a.xi[k] - b.xi[k]) * (a.xi[k] - b.xi[k]);
    return std::sqrt(acc);
}

LstmState step_record(const LstmParams& p, const LstmState& s, std::span<const double> u,
                      StepActivations& act) {
    check_state(p, s);
    check_input(p, u);
    const std::size_t n = p.n_x;
    act.f.resize(n);
    act.i.resize(n);
    act.o.resize(n);
    act.c.resize(n);
    act.tanh_x.resize(n);
    preactivation(p.forget, u, s.xi, act.f);
    preactivation(p.input, u, s.xi, act.i);
    preactivation(p.output, u, s.xi, act.o);
    preactivation(p.cell, u, s.xi, act.c);

    LstmState next{Vector(n), Vector(n)};
    for (std::size_t j = 0; j < n; ++j) {
        act.f[j] = logistic(act.f[j]);
        act.i[j] = logistic(act.i[j]);
        act.o[j] = logistic(act.o[j]);
        act.c[j] = std::tanh(act.c[j]);
        next.x[j] = act.f[j] * s.x[j] + act.i[j] * act.c[j];
        act.tanh_x[j] = std::tanh(next.x[j]);
        next.xi[j] = act.o[j] * act.tanh_x[j];
    }
    return next;
}

LstmState step(const LstmParams& p, const LstmState& s, std::span<const double> u) {
    StepActivations act;
    return step_record(p, s, u, act);
}

Vector output(const LstmParams& p, const LstmState& s) {
    check_state(p, s);
    Vector y = p.readout_bias;
    matvec_acc(p.readout, s.xi, y);
    return y;
}

std::vector<TrajectoryPoint> simulate(const LstmParams& p, const LstmState& s0,
                                      const std::vector<Vector>& inputs) {
    std::vector<TrajectoryPoint> traj;
    traj.reserve(inputs.size());
    LstmState s = s0;
    for (const Vector& u : inputs) {
        s = step(p, s, u);
        traj.push_back({s, output(p, s)});
    }
    return traj;
}

Vector predict_outputs(const LstmParams& p, const LstmState& s0, std::span<const double> u) {
    if (p.n_u != 1 || p.n_y != 1) throw DimensionError("n_u/n_y", "predict_outputs expects a SISO model");
    Vector y(u.size());
    LstmState s = s0;
    StepActivations act;
    for (std::size_t k = 0; k < u.size(); ++k) {
        y[k] = p.readout_bias[0] + dot(p.readout.row(0), s.xi);
        s = step_record(p, s, u.subspan(k, 1), act);
    }
    return y;
}

double gate_row_norm(const GateWeights& g, double u_max) {
    double best = 0.0;
    for (std::size_t r = 0; r < g.recurrent.rows(); ++r) {
        double s = std::abs(g.bias[r]);
        for (double w : g.input.row(r)) s += std::abs(w) * u_max;
        for (double w : g.recurrent.row(r)) s += std::abs(w);
        best = std::max(best, s);
    }
    return best;
}

GateBounds gate_bounds(const LstmParams& p, const InputBox& box) {
    if (!(box.u_max > 0.0)) throw InvalidArgument("u_max must be positive");
    GateBounds b;
    b.sigma_f = logistic(gate_row_norm(p.forget, box.u_max));
    b.sigma_i = logistic(gate_row_norm(p.input, box.u_max));
    b.sigma_o = logistic(gate_row_norm(p.output, box.u_max));
    b.sigma_c = std::tanh(gate_row_norm(p.cell, box.u_max));
    b.x_radius = b.sigma_i * b.sigma_c / (1.0 - b.sigma_f);
    b.sigma_x = std::tanh(b.x_radius);
    return b;
}

LstmState steady_state(const LstmParams& p, std::span<const double> u, const LstmState& start,
                       double* residual) {
    constexpr int kMaxIter = 100000;
    constexpr double kTol = 1e-13;
    LstmState s = start;
    double res = 0.0;
    for (int it = 0; it < kMaxIter; ++it) {
        LstmState next = step(p, s, u);
        res = 0.0;
        for (std::size_t j = 0; j < p.n_x; ++j) {
            res = std::max(res, std::abs(next.x[j] - s.x[j]));
            res = std::max(res, std::abs(next.xi[j] - s.xi[j]));
        }
        s = std::move(next);
        if (res <= kTol) break;
    }
    if (residual != nullptr) *residual = res;
    return s;
}

EquilibriumTriple find_equilibrium(const LstmParams& p, const InputBox& box, double y_bar) {
    if (p.n_u != 1 || p.n_y != 1) throw DimensionError("n_u/n_y", "equilibrium search supports SISO models only");
    if (!(box.u_max > 0.0)) throw InvalidArgument("u_max must be positive");

    LstmState warm = LstmState::zeros(p.n_x);
    auto evaluate = [&](double u, LstmState& chi) {
        const double uu[1] = {u};
        chi = steady_state(p, uu, warm, nullptr);
        warm = chi;
        return output(p, chi)[0];
    };

    constexpr double kOutputTol = 1e-11;
    LstmState chi_mid;
    const double y0 = evaluate(0.0, chi_mid);
    if (std::abs(y0 - y_bar) <= kOutputTol) return {{0.0}, chi_mid, {y0}};

    LstmState chi_lo, chi_hi;
    double lo = -box.u_max, hi = box.u_max;
    double y_lo = evaluate(lo, chi_lo);
    double y_hi = evaluate(hi, chi_hi);
    const double reach_lo = std::min(y_lo, y_hi), reach_hi = std::max(y_lo, y_hi);
    if (std::abs(y_lo - y_bar) <= kOutputTol) return {{lo}, chi_lo, {y_lo}};
    if (std::abs(y_hi - y_bar) <= kOutputTol) return {{hi}, chi_hi, {y_hi}};
    if ((y_lo - y_bar) * (y_hi - y_bar) > 0.0) throw InfeasibleReference(y_bar, reach_lo, reach_hi);

    // Keep the bracket on 0 when the zero-input output already splits it.
    if ((y0 - y_bar) * (y_lo - y_bar) < 0.0) {
        hi = 0.0;
        y_hi = y0;
    } else {
        lo = 0.0;
        y_lo = y0;
    }

    double u_mid = 0.5 * (lo + hi);
    double y_mid = y0;
    for (int it = 0; it < 200; ++it) {
        u_mid = 0.5 * (lo + hi);
        y_mid = evaluate(u_mid, chi_mid);
        if (std::abs(y_mid - y_bar) <= kOutputTol || hi - lo <= 1e-15) break;
        if ((y_mid - y_bar) * (y_lo - y_bar) < 0.0) {
            hi = u_mid;
            y_hi = y_mid;
        } else {
            lo = u_mid;
            y_lo = y_mid;
        }
    }
    return {{u_mid}, chi_mid, {y_mid}};
}

void step_adjoint(const LstmParams& p, const LstmState& prev, std::span<const double> u,
                  const StepActivations& act, StepAdjoint& adj) {
    const std::size_t n = p.n_x;
    Vector d_f(n), d_i(n), d_o(n), d_c(n), g_x_prev(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double t = act.tanh_x[j];
        const double g_o = adj.g_xi[j] * t;
        const double g_xp = adj.g_x[j] + adj.g_xi[j] * act.o[j] * (1.0 - t * t);
        d_f[j] = g_xp * prev.x[j] * act.f[j] * (1.0 - act.f[j]);
        d_i[j] = g_xp * act.c[j] * act.i[j] * (1.0 - act.i[j]);
        d_c[j] = g_xp * act.i[j] * (1.0 - act.c[j] * act.c[j]);
        d_o[j] = g_o * act.o[j] * (1.0 - act.o[j]);
        g_x_prev[j] = g_xp * act.f[j];
    }
    Vector g_xi_prev(n, 0.0);
    matvec_t_acc(p.forget.recurrent, d_f, g_xi_prev);
    matvec_t_acc(p.input.recurrent, d_i, g_xi_prev);
    matvec_t_acc(p.output.recurrent, d_o, g_xi_prev);
    matvec_t_acc(p.cell.recurrent, d_c, g_xi_prev);

    if (adj.g_u != nullptr) {
        Vector& gu = *adj.g_u;
        matvec_t_acc(p.forget.input, d_f, gu);
        matvec_t_acc(p.input.input, d_i, gu);
        matvec_t_acc(p.output.input, d_o, gu);
        matvec_t_acc(p.cell.input, d_c, gu);
    }
    if (adj.g_params != nullptr) {
        LstmParams& g = *adj.g_params;
        auto acc = [&](GateWeights& gw, const Vector& d) {
            outer_acc(gw.input, d, u);
            outer_acc(gw.recurrent, d, prev.xi);
            for (std::size_t j = 0; j < n; ++j) gw.bias[j] += d[j];
        };
        acc(g.forget, d_f);
        acc(g.input, d_i);
        acc(g.output, d_o);
        acc(g.cell, d_c);
    }
    adj.g_x = std::move(g_x_prev);
    adj.g_xi = std::move(g_xi_prev);
}

}  // namespace lstmctl
