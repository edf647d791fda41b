#include "lstmctl/plant.hpp"

#include <cmath>
#include <random>
#include <string>

#include "lstmctl/errors.hpp"

namespace lstmctl {

void PlantParams::validate() const {
    if (!(A1 > 0.0)) throw InvalidArgument("plant: A1 must be positive");
    if (!(Cv4 > 0.0)) throw InvalidArgument("plant: Cv4 must be positive");
    if (!(n_exp > 0.0 && n_exp < 1.0)) throw InvalidArgument("plant: n must lie in (0, 1)");
    if (!(pK1 < pK2)) throw InvalidArgument("plant: pK1 must be below pK2");
}

PlantDeriv plant_deriv(const PlantParams& p, const PlantState& s, double u, double d) {
    if (!(s.x3 > 0.0)) throw PlantError("plant: tank level x3 = " + std::to_string(s.x3) + " is not positive");
    const double inv = 1.0 / (p.A1 * s.x3);
    const double outflow = p.Cv4 * std::pow(s.x3 + p.z, p.n_exp);
    PlantDeriv f{};
    f[0] = p.q1 * inv * (p.Wa1 - s.x1) + inv * (p.Wa3 - s.x1) * u + inv * (p.Wa2 - s.x1) * d;
    f[1] = p.q1 * inv * (p.Wb1 - s.x2) + inv * (p.Wb3 - s.x2) * u + inv * (p.Wb2 - s.x2) * d;
    f[2] = (p.q1 - outflow) / p.A1 + u / p.A1 + d / p.A1;
    return f;
}

double charge_balance(const PlantParams& p, double x1, double x2, double y) {
    const double num = 1.0 + 2.0 * std::pow(10.0, y - p.pK2);
    const double den = 1.0 + std::pow(10.0, p.pK1 - y) + std::pow(10.0, y - p.pK2);
    return x1 + std::pow(10.0, y - 14.0) - std::pow(10.0, -y) + x2 * num / den;
}

double ph_output(const PlantParams& p, const PlantState& s) {
    double lo = 0.0, hi = 14.0;
    const double c_lo = charge_balance(p, s.x1, s.x2, lo);
    const double c_hi = charge_balance(p, s.x1, s.x2, hi);
    if (c_lo == 0.0) return lo;
    if (c_hi == 0.0) return hi;
    if (c_lo > 0.0 || c_hi < 0.0) {
        throw PlantError("plant: charge balance has no root on [0, 14] (c(0) = " + std::to_string(c_lo) +
                         ", c(14) = " + std::to_string(c_hi) + ")");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double c = charge_balance(p, s.x1, s.x2, mid);
        if (c == 0.0) return mid;
        (c < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

PlantState integrate_step(const PlantParams& p, const PlantState& s, double u, double d, double dt, double h) {
    if (!(dt > 0.0) || !(h > 0.0)) throw InvalidArgument("integrate_step: dt and h must be positive");
    const double ratio = dt / h;
    const auto steps = static_cast<long>(std::llround(ratio));
    if (steps < 1 || std::abs(ratio - static_cast<double>(steps)) > 1e-9 * ratio)
        throw InvalidArgument("integrate_step: dt must be a multiple of the substep");

    auto shifted = [](const PlantState& a, const PlantDeriv& k, double c) {
        return PlantState{a.x1 + c * k[0], a.x2 + c * k[1], a.x3 + c * k[2]};
    };
    PlantState x = s;
    for (long i = 0; i < steps; ++i) {
        const PlantDeriv k1 = plant_deriv(p, x, u, d);
        const PlantDeriv k2 = plant_deriv(p, shifted(x, k1, 0.5 * h), u, d);
        const PlantDeriv k3 = plant_deriv(p, shifted(x, k2, 0.5 * h), u, d);
        const PlantDeriv k4 = plant_deriv(p, shifted(x, k3, h), u, d);
        x.x1 += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        x.x2 += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        x.x3 += h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]);
        if (!(x.x3 > 0.0) || !std::isfinite(x.x1) || !std::isfinite(x.x2))
            throw PlantError("plant: state left the admissible region during integration");
    }
    return x;
}

Vector mprs_input(const MprsConfig& cfg, std::size_t length, std::uint64_t seed) {
    if (cfg.hold_min < 1 || cfg.hold_max < cfg.hold_min) throw InvalidArgument("mprs: invalid hold range");
    if (!(cfg.level_hi >= cfg.level_lo)) throw InvalidArgument("mprs: invalid level range");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> level(cfg.level_lo, cfg.level_hi);
    std::uniform_int_distribution<int> hold(cfg.hold_min, cfg.hold_max);
    Vector u;
    u.reserve(length);
    while (u.size() < length) {
        const double v = cfg.level_hi > cfg.level_lo ? level(rng) : cfg.level_lo;
        const int h = hold(rng);
        for (int k = 0; k < h && u.size() < length; ++k) u.push_back(v);
    }
    return u;
}

ExperimentRecord run_experiment(const PlantParams& p, std::span<const double> q3_profile, double Ts,
                                const NoiseConfig& noise, std::uint64_t seed, const Scalers& scalers,
                                const PlantState& initial) {
    p.validate();
    const std::size_t n = q3_profile.size();
    ExperimentRecord rec;
    rec.u_clean.resize(n);
    rec.y_clean.resize(n);
    rec.u_norm.resize(n);
    rec.y_norm.resize(n);
    rec.u_raw.resize(n);
    rec.y_raw.resize(n);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    PlantState s = initial;
    for (std::size_t k = 0; k < n; ++k) {
        const double y_phys = ph_output(p, s);
        rec.u_clean[k] = scalers.u.normalize(q3_profile[k]);
        rec.y_clean[k] = scalers.y.normalize(y_phys);
        const double nu = noise.std > 0.0 ? noise.std * gauss(rng) : 0.0;
        const double ny = noise.std > 0.0 ? noise.std * gauss(rng) : 0.0;
        rec.u_norm[k] = rec.u_clean[k] + nu;
        rec.y_norm[k] = rec.y_clean[k] + ny;
        rec.u_raw[k] = scalers.u.denormalize(rec.u_norm[k]);
        rec.y_raw[k] = scalers.y.denormalize(rec.y_norm[k]);
        const double applied = noise.on_actuator ? rec.u_raw[k] : q3_profile[k];
        s = integrate_step(p, s, std::max(0.0, applied), p.q2, Ts);
    }
    return rec;
}

Vector plant_response(const PlantParams& p, std::span<const double> q3_profile, double Ts, const PlantState& initial) {
    Vector y(q3_profile.size());
    PlantState s = initial;
    for (std::size_t k = 0; k < q3_profile.size(); ++k) {
        y[k] = ph_output(p, s);
        s = integrate_step(p, s, q3_profile[k], p.q2, Ts);
    }
    return y;
}

}  // namespace lstmctl
