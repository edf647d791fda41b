#include "lstmctl/observer.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "lstmctl/errors.hpp"

namespace lstmctl {
namespace {

// Row norm of [W u_max | U - L C | b | L C].
double observer_row_norm(const GateWeights& g, const Matrix& LC, double u_max) {
    double best = 0.0;
    for (std::size_t r = 0; r < g.recurrent.rows(); ++r) {
        double s = std::abs(g.bias[r]);
        for (double w : g.input.row(r)) s += std::abs(w) * u_max;
        for (std::size_t c = 0; c < g.recurrent.cols(); ++c) {
            s += std::abs(g.recurrent(r, c) - LC(r, c));
            s += std::abs(LC(r, c));
        }
        best = std::max(best, s);
    }
    return best;
}

void check_gains(const LstmParams& p, const ObserverGains& g) {
    auto chk = [&](const Matrix& m, const char* name) {
        if (m.rows() != p.n_x || m.cols() != p.n_y)
            throw DimensionError(name, "observer gain must be n_x x n_y");
    };
    chk(g.L_f, "L_f");
    chk(g.L_i, "L_i");
    chk(g.L_o, "L_o");
}

struct AHat {
    double alpha_hat;
    Gain2x2 A;
    double r1, r2;
};

AHat assemble(const GateBounds& b, double hf, double hi, double ho, double nUf, double nUi, double nUc,
              double nUo, double alpha_open, AlphaHatMode mode) {
    AHat out{};
    double sigma_x = b.sigma_x;
    double alpha_constraint = alpha_open;
    if (mode == AlphaHatMode::AsPrinted) {
        out.alpha_hat = 0.25 * nUf * b.sigma_i * b.sigma_c / (1.0 - b.sigma_f) + b.sigma_i * nUc +
                        0.25 * nUi * b.sigma_c;
    } else {
        const double radius = hi * b.sigma_c / (1.0 - hf);
        out.alpha_hat = 0.25 * nUf * radius + hi * nUc + 0.25 * nUi * b.sigma_c;
        sigma_x = std::tanh(radius);
        alpha_constraint = out.alpha_hat;
    }
    out.A = {hf, out.alpha_hat, hf * ho, 0.25 * sigma_x * nUo + ho * out.alpha_hat};
    const double lhs = -1.0 + hf + alpha_constraint * ho + 0.25 * sigma_x * nUo;
    const double mid = 0.25 * hf * sigma_x * nUo;
    out.r1 = lhs - mid;
    out.r2 = mid - 1.0;
    return out;
}

}  // namespace

LstmState observer_step(const LstmParams& p, const ObserverGains& gains, const LstmState& est,
                        std::span<const double> u, std::span<const double> y_meas) {
    check_gains(p, gains);
    if (y_meas.size() != p.n_y) throw DimensionError("y_meas", "measurement length must equal n_y");
    if (u.size() != p.n_u) throw DimensionError("u", "input length must equal n_u");
    if (est.x.size() != p.n_x || est.xi.size() != p.n_x) throw DimensionError("est", "estimate must have n_x entries");

    Vector innov(y_meas.begin(), y_meas.end());
    const Vector y_hat = output(p, est);
    for (std::size_t k = 0; k < p.n_y; ++k) innov[k] -= y_hat[k];

    const std::size_t n = p.n_x;
    auto pre = [&](const GateWeights& g, const Matrix* L) {
        Vector a = g.bias;
        matvec_acc(g.input, u, a);
        matvec_acc(g.recurrent, est.xi, a);
        if (L != nullptr) matvec_acc(*L, innov, a);
        return a;
    };
    const Vector af = pre(p.forget, &gains.L_f);
    const Vector ai = pre(p.input, &gains.L_i);
    const Vector ao = pre(p.output, &gains.L_o);
    const Vector ac = pre(p.cell, nullptr);

    LstmState next{Vector(n), Vector(n)};
    for (std::size_t j = 0; j < n; ++j) {
        next.x[j] = logistic(af[j]) * est.x[j] + logistic(ai[j]) * std::tanh(ac[j]);
        next.xi[j] = logistic(ao[j]) * std::tanh(next.x[j]);
    }
    return next;
}

ObserverBounds observer_bounds(const LstmParams& p, const ObserverGains& gains, const InputBox& box,
                               const GateBounds& b, AlphaHatMode mode) {
    check_gains(p, gains);
    const Matrix LfC = gains.L_f * p.readout;
    const Matrix LiC = gains.L_i * p.readout;
    const Matrix LoC = gains.L_o * p.readout;

    ObserverBounds out;
    out.sigma_f = logistic(observer_row_norm(p.forget, LfC, box.u_max));
    out.sigma_i = logistic(observer_row_norm(p.input, LiC, box.u_max));
    out.sigma_o = logistic(observer_row_norm(p.output, LoC, box.u_max));

    const double nUf = spectral_norm(p.forget.recurrent - LfC);
    const double nUi = spectral_norm(p.input.recurrent - LiC);
    const double nUo = spectral_norm(p.output.recurrent - LoC);
    const double nUc = spectral_norm(p.cell.recurrent);
    const double alpha_open = delta_alpha(b, spectral_norm(p.forget.recurrent), nUc, spectral_norm(p.input.recurrent));

    const AHat primary = assemble(b, out.sigma_f, out.sigma_i, out.sigma_o, nUf, nUi, nUc, nUo, alpha_open, mode);
    const AlphaHatMode other = mode == AlphaHatMode::AsPrinted ? AlphaHatMode::FullyHatted : AlphaHatMode::AsPrinted;
    const AHat alternate = assemble(b, out.sigma_f, out.sigma_i, out.sigma_o, nUf, nUi, nUc, nUo, alpha_open, other);

    out.alpha_hat = primary.alpha_hat;
    out.A_hat = primary.A;
    out.norm_A_hat = spectral_norm(primary.A);
    out.rho_A_hat = spectral_radius(primary.A);
    out.constraint_r1 = primary.r1;
    out.constraint_r2 = primary.r2;
    out.norm_A_hat_alternate = spectral_norm(alternate.A);
    return out;
}

namespace {

ObserverGains unpack(const std::vector<double>& z, std::size_t n_x, std::size_t n_y) {
    ObserverGains g = ObserverGains::zeros(n_x, n_y);
    const std::size_t m = n_x * n_y;
    std::copy(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(m), g.L_f.data().begin());
    std::copy(z.begin() + static_cast<std::ptrdiff_t>(m), z.begin() + static_cast<std::ptrdiff_t>(2 * m),
              g.L_i.data().begin());
    std::copy(z.begin() + static_cast<std::ptrdiff_t>(2 * m), z.end(), g.L_o.data().begin());
    return g;
}

}  // namespace

SynthesisResult synthesize_gains(const LstmParams& p, const InputBox& box, const SynthesisOptions& opt) {
    p.validate();
    const CertificatePair cert = certify(p, box);
    if (!cert.delta_iss.certified()) {
        throw CertificationError("observer synthesis requires a delta-ISS certified model (r1 = " +
                                 std::to_string(cert.delta_iss.residuals[0]) +
                                 ", r2 = " + std::to_string(cert.delta_iss.residuals[1]) +
                                 ", rho(A_delta) = " + std::to_string(cert.delta_iss.spectral_radius) + ")");
    }
    const GateBounds& b = cert.delta_iss.bounds;
    const std::size_t dim = 3 * p.n_x * p.n_y;

    constexpr double kPenalty = 1e3;
    auto objective = [&](const std::vector<double>& z) {
        const ObserverBounds ob = observer_bounds(p, unpack(z, p.n_x, p.n_y), box, b, opt.mode);
        if (ob.feasible()) return ob.norm_A_hat;
        double viol = std::max(0.0, ob.constraint_r1) + std::max(0.0, ob.constraint_r2) +
                      std::max(0.0, ob.rho_A_hat - 1.0 + kSchurBoundaryBand);
        return kPenalty * (1.0 + viol);
    };

    SynthesisResult result;
    result.seed = opt.seed;
    result.open_loop = observer_bounds(p, ObserverGains::zeros(p.n_x, p.n_y), box, b, opt.mode);

    std::vector<double> best_z(dim, 0.0);
    double best_val = objective(best_z);
    result.incumbent.push_back(best_val);

    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int start = 0; start <= opt.random_starts; ++start) {
        std::vector<double> z0(dim, 0.0);
        if (start > 0)
            for (double& v : z0) v = opt.start_scale * dist(rng);
        const NelderMeadResult nm =
            nelder_mead(objective, z0, 0.5 * opt.start_scale, opt.max_evaluations_per_start);
        for (double v : nm.trace) result.incumbent.push_back(std::min(result.incumbent.back(), v));
        if (nm.value < best_val) {
            const ObserverBounds check = observer_bounds(p, unpack(nm.x, p.n_x, p.n_y), box, b, opt.mode);
            if (check.feasible()) {
                best_val = nm.value;
                best_z = nm.x;
            }
        }
    }

    result.gains = unpack(best_z, p.n_x, p.n_y);
    result.bounds = observer_bounds(p, result.gains, box, b, opt.mode);
    if (!result.bounds.feasible()) {
        result.gains = ObserverGains::zeros(p.n_x, p.n_y);
        result.bounds = result.open_loop;
    }
    return result;
}

}  // namespace lstmctl
