#pragma once

#include <cstdint>
#include <vector>

#include "lstmctl/stability.hpp"

namespace lstmctl {

// Output-injection gains of the LSTM observer; each is n_x x n_y.
struct ObserverGains {
    Matrix L_f, L_i, L_o;

    static ObserverGains zeros(std::size_t n_x, std::size_t n_y) {
        return {Matrix(n_x, n_y), Matrix(n_x, n_y), Matrix(n_x, n_y)};
    }

    friend bool operator==(const ObserverGains&, const ObserverGains&) = default;
};

// How the error-system matrix treats the invariant-set terms in alpha_hat.
//  AsPrinted: alpha_hat uses the open-loop sigma_i, sigma_c, sigma_f bounds.
//  FullyHatted: alpha_hat and the x-radius use the observer gate bounds.
enum class AlphaHatMode { AsPrinted, FullyHatted };

struct ObserverBounds {
    double sigma_f = 0.5;  // observer gate bounds (four-block row norms)
    double sigma_i = 0.5;
    double sigma_o = 0.5;
    double alpha_hat = 0.0;
    Gain2x2 A_hat;
    double norm_A_hat = 0.0;
    double rho_A_hat = 0.0;
    // Residuals of the tuning constraint: lhs - rhs and rhs - 1, both < 0 when feasible.
    double constraint_r1 = 0.0;
    double constraint_r2 = 0.0;
    // |A_hat| under the other AlphaHatMode, to expose the discrepancy.
    double norm_A_hat_alternate = 0.0;

    [[nodiscard]] bool feasible() const {
        return constraint_r1 < 0.0 && constraint_r2 < 0.0 && rho_A_hat < 1.0 - kSchurBoundaryBand;
    }
};

/// One step of the observer: the innovation y_meas - C xi_hat - b_y enters the
/// forget, input and output gate preactivations through L_f, L_i, L_o.
LstmState observer_step(const LstmParams& p, const ObserverGains& gains, const LstmState& est,
                        std::span<const double> u, std::span<const double> y_meas);

ObserverBounds observer_bounds(const LstmParams& p, const ObserverGains& gains, const InputBox& box,
                               const GateBounds& b, AlphaHatMode mode = AlphaHatMode::AsPrinted);

struct SynthesisOptions {
    std::uint64_t seed = 20210601;
    int random_starts = 8;
    double start_scale = 0.1;
    int max_evaluations_per_start = 4000;
    AlphaHatMode mode = AlphaHatMode::AsPrinted;
};

struct SynthesisResult {
    ObserverGains gains;
    ObserverBounds bounds;
    ObserverBounds open_loop;         // bounds at L = 0, equal to A_delta
    std::vector<double> incumbent;    // best feasible |A_hat| after each evaluation batch
    std::uint64_t seed = 0;
};

/// Minimizes |A_hat| over the gains subject to the strict tuning constraint.
/// Derivative-free Nelder-Mead, multi-start from L = 0 plus seeded random
/// starts; infeasible points carry a large finite penalty.
/// Throws CertificationError when the model is not delta-ISS certified.
SynthesisResult synthesize_gains(const LstmParams& p, const InputBox& box, const SynthesisOptions& opt = {});

// Generic Nelder-Mead minimizer used by the synthesis. Exposed for testing.
struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int evaluations = 0;
    std::vector<double> trace;  // best value after each iteration (nonincreasing)
};

template <class F>
NelderMeadResult nelder_mead(F&& f, std::vector<double> x0, double initial_step, int max_evals,
                             double f_tol = 1e-12);

}  // namespace lstmctl

#include "lstmctl/detail/nelder_mead.ipp"
