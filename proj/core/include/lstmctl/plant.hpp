#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lstmctl/linalg.hpp"
#include "lstmctl/scaler.hpp"

namespace lstmctl {

// pH neutralization reactor (reaction-invariant model). Concentrations in
// mol/L, lengths in cm, flows in mL/s. Defaults are the nominal operating
// point; the base stream invariant Wa3 is negative (-3.05e-3 M), which is the
// value the nominal mixing balance Wa4 = -4.32e-4 M requires.
struct PlantParams {
    double z = 11.5;
    double Cv4 = 4.59;
    double n_exp = 0.607;
    double pK1 = 6.35;
    double pK2 = 10.25;
    double Wa1 = 3.00e-3, Wb1 = 0.0;    // acid stream q1
    double Wa2 = -0.03, Wb2 = 0.03;     // buffer stream q2
    double Wa3 = -3.05e-3, Wb3 = 5.00e-5;  // base stream q3
    double A1 = 207.0;
    double q1 = 16.6;
    double q2 = 0.55;

    void validate() const;
};

inline constexpr double kNominalQ3 = 15.6;
inline constexpr double kNominalQ4 = 32.8;

struct PlantState {
    double x1 = -4.32e-4;  // Wa4
    double x2 = 5.28e-4;   // Wb4
    double x3 = 14.0;      // tank level h1

    static PlantState nominal() { return {}; }
};

using PlantDeriv = std::array<double, 3>;

/// f1(x) + f2(x) u + f3(x) d. Throws PlantError for x3 <= 0.
PlantDeriv plant_deriv(const PlantParams& p, const PlantState& s, double u, double d);

/// Charge balance c(x, y) = x1 + 10^(y-14) - 10^(-y) + x2 (1 + 2*10^(y-pK2)) / (1 + 10^(pK1-y) + 10^(y-pK2)).
double charge_balance(const PlantParams& p, double x1, double x2, double y);

/// Unique root of the charge balance on [0, 14]. Throws PlantError when the
/// balance does not change sign on the interval.
double ph_output(const PlantParams& p, const PlantState& s);

inline constexpr double kPlantSubstep = 0.1;  // s

/// Classical RK4 with zero-order-hold u, d and fixed substep h (dt must be a multiple of h).
PlantState integrate_step(const PlantParams& p, const PlantState& s, double u, double d, double dt,
                          double h = kPlantSubstep);

// Physical actuator range of the manipulated base flow q3 and its map onto
// the normalized input box [-1, 1].
struct ActuatorRange {
    double q3_min = 11.6;
    double q3_max = 19.6;

    [[nodiscard]] ChannelScaler scaler() const { return {q3_min, q3_max}; }
};

struct MprsConfig {
    double level_lo = -1.0;  // normalized
    double level_hi = 1.0;
    int hold_min = 15;  // samples
    int hold_max = 60;
};

/// Multilevel pseudo-random signal: piecewise constant, levels uniform in
/// [level_lo, level_hi], hold lengths uniform integers in [hold_min, hold_max].
Vector mprs_input(const MprsConfig& cfg, std::size_t length, std::uint64_t seed);

struct NoiseConfig {
    double std = 0.0;           // normalized units
    bool on_actuator = false;   // also perturb the command the plant receives
};

struct ExperimentRecord {
    Vector u_clean;  // normalized command
    Vector y_clean;  // normalized pH, noiseless
    Vector u_norm;   // recorded (noisy) normalized input
    Vector y_norm;   // recorded (noisy) normalized output
    Vector u_raw;    // recorded input in mL/s
    Vector y_raw;    // recorded pH
};

/// Drives the plant with a q3 profile (mL/s) under zero-order hold and samples
/// pH every Ts (y(k) is taken before u(k) is applied). Gaussian noise is added
/// to the normalized recordings; deterministic given the seed.
ExperimentRecord run_experiment(const PlantParams& p, std::span<const double> q3_profile, double Ts,
                                const NoiseConfig& noise, std::uint64_t seed, const Scalers& scalers,
                                const PlantState& initial = PlantState::nominal());

/// Clean raw pH response to a raw q3 profile (no noise, no normalization).
Vector plant_response(const PlantParams& p, std::span<const double> q3_profile, double Ts,
                      const PlantState& initial = PlantState::nominal());

}  // namespace lstmctl
