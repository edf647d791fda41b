#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lstmctl/linalg.hpp"

namespace lstmctl {

// Weights of one LSTM gate: preactivation = input * u + recurrent * xi + bias.
struct GateWeights {
    Matrix input;      // n_x x n_u
    Matrix recurrent;  // n_x x n_x
    Vector bias;       // n_x

    friend bool operator==(const GateWeights&, const GateWeights&) = default;
};

// Single-layer LSTM written as a discrete-time state-space model
//
//   x+  = sg(f) . x + sg(i) . tanh(c)
//   xi+ = sg(o) . tanh(x+)
//   y   = C xi + b_y
//
// with sg the logistic function and '.' the Hadamard product.
// Immutable once built; all free functions below are pure.
struct LstmParams {
    std::size_t n_x = 0;
    std::size_t n_u = 0;
    std::size_t n_y = 0;

    GateWeights forget;
    GateWeights input;
    GateWeights output;
    GateWeights cell;

    Matrix readout;       // C, n_y x n_x
    Vector readout_bias;  // b_y, n_y

    static LstmParams zeros(std::size_t n_x, std::size_t n_u, std::size_t n_y);

    /// Throws DimensionError naming the offending field, or InvalidArgument
    /// for non-finite entries.
    void validate() const;

    friend bool operator==(const LstmParams&, const LstmParams&) = default;
};

struct LstmState {
    Vector x;   // hidden state
    Vector xi;  // output state, always in (-1, 1) after one step

    static LstmState zeros(std::size_t n_x) { return {Vector(n_x, 0.0), Vector(n_x, 0.0)}; }

    friend bool operator==(const LstmState&, const LstmState&) = default;
};

/// Euclidean norm of the stacked state [x; xi].
double state_norm(const LstmState& s);
/// Euclidean distance between stacked states.
double state_distance(const LstmState& a, const LstmState& b);

// Symmetric admissible input set [-u_max, u_max]^n_u.
struct InputBox {
    double u_max = 1.0;

    [[nodiscard]] double project(double u) const noexcept {
        return u > u_max ? u_max : (u < -u_max ? -u_max : u);
    }
    [[nodiscard]] bool contains(double u) const noexcept { return u >= -u_max && u <= u_max; }
};

// Worst-case gate magnitudes over the input box and the xi cube, and the
// radius of the invariant set of each hidden-state component.
struct GateBounds {
    double sigma_f = 0.5;
    double sigma_i = 0.5;
    double sigma_o = 0.5;
    double sigma_c = 0.0;   // tanh bound of the candidate cell
    double x_radius = 0.0;  // sigma_i * sigma_c / (1 - sigma_f)
    double sigma_x = 0.0;   // tanh(x_radius)
};

struct EquilibriumTriple {
    Vector u_bar;
    LstmState chi_bar;
    Vector y_bar;
};

double logistic(double t) noexcept;

LstmState step(const LstmParams& p, const LstmState& s, std::span<const double> u);
Vector output(const LstmParams& p, const LstmState& s);

struct TrajectoryPoint {
    LstmState state;
    Vector y;
};

/// Element k is the state after k+1 steps together with its output.
std::vector<TrajectoryPoint> simulate(const LstmParams& p, const LstmState& s0,
                                      const std::vector<Vector>& inputs);

/// Scalar-input scalar-output free response used for identification and
/// verification: returns y(k) = C xi(k) + b_y for k = 0..N-1, where chi(0) = s0
/// and chi(k+1) = f(chi(k), u(k)). y(k) depends on u(0..k-1) only.
Vector predict_outputs(const LstmParams& p, const LstmState& s0, std::span<const double> u);

/// sigma([W u_max | U | b]) per gate with the block matrix infinity norm.
GateBounds gate_bounds(const LstmParams& p, const InputBox& box);

/// Max absolute row sum of the block [W * u_max | U | b] for one gate.
double gate_row_norm(const GateWeights& g, double u_max);

/// Fixed point of the state map under a constant input, by contraction.
/// Returns the final residual |chi - f(chi, u)|_inf through `residual`.
LstmState steady_state(const LstmParams& p, std::span<const double> u, const LstmState& start,
                       double* residual = nullptr);

/// Scalar tracking equilibrium (u_bar, chi_bar, y_bar): bisection on u_bar over
/// the steady-state output map, inner fixed-point iteration on chi.
/// Throws InfeasibleReference when y_bar is not bracketed by the box.
EquilibriumTriple find_equilibrium(const LstmParams& p, const InputBox& box, double y_bar);

// ---------------------------------------------------------------------------
// Reverse-mode support shared by the MPC adjoint and the BPTT trainer.

struct StepActivations {
    Vector f, i, o, c;  // gate activations (c after tanh)
    Vector tanh_x;      // tanh(x+)
};

LstmState step_record(const LstmParams& p, const LstmState& s, std::span<const double> u,
                      StepActivations& act);

// Gradient accumulators with the shape of LstmParams; null members skip work.
struct StepAdjoint {
    Vector g_x;   // in: dL/dx+, out: dL/dx
    Vector g_xi;  // in: dL/dxi+, out: dL/dxi
    Vector* g_u = nullptr;          // accumulated dL/du
    LstmParams* g_params = nullptr;  // accumulated dL/dtheta (gates only)
};

/// Back-propagates through one step. `prev` is the state the step started from.
void step_adjoint(const LstmParams& p, const LstmState& prev, std::span<const double> u,
                  const StepActivations& act, StepAdjoint& adj);

}  // namespace lstmctl
