#include "lstmctl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "lstmctl/errors.hpp"

namespace lstmctl {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw InvalidArgument("train: learning_rate must be positive");
    if (!(rmsprop_decay >= 0.0 && rmsprop_decay < 1.0)) throw InvalidArgument("train: rmsprop_decay must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw InvalidArgument("train: epsilon must be positive");
    if (max_epochs < 1) throw InvalidArgument("train: max_epochs must be at least 1");
    if (patience < 0) throw InvalidArgument("train: patience must be nonnegative");
    if (rho1_plus < 0 || rho1_minus < 0 || rho2_plus < 0 || rho2_minus < 0)
        throw InvalidArgument("train: penalty weights must be nonnegative");
    if (washout < 0) throw InvalidArgument("train: washout must be nonnegative");
    if (n_x == 0) throw InvalidArgument("train: n_x must be positive");
}

namespace {

template <class P, class Fn>
void for_each_block(P& p, Fn&& fn) {
    for (auto* g : {&p.forget, &p.input, &p.output, &p.cell}) {
        fn(g->input.data());
        fn(g->recurrent.data());
        fn(g->bias);
    }
    fn(p.readout.data());
    fn(p.readout_bias);
}

// Adds scale * d(row norm)/d(weights) for the argmax row of [W u_max | U | b].
void row_norm_subgradient(const GateWeights& g, double u_max, double scale, GateWeights& out) {
    std::size_t best_row = 0;
    double best = -1.0;
    for (std::size_t r = 0; r < g.recurrent.rows(); ++r) {
        double s = std::abs(g.bias[r]);
        for (double w : g.input.row(r)) s += std::abs(w) * u_max;
        for (double w : g.recurrent.row(r)) s += std::abs(w);
        if (s > best) {
            best = s;
            best_row = r;
        }
    }
    auto sgn = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
    for (std::size_t j = 0; j < g.input.cols(); ++j)
        out.input(best_row, j) += scale * u_max * sgn(g.input(best_row, j));
    for (std::size_t j = 0; j < g.recurrent.cols(); ++j)
        out.recurrent(best_row, j) += scale * sgn(g.recurrent(best_row, j));
    out.bias[best_row] += scale * sgn(g.bias[best_row]);
}

void spectral_subgradient(const Matrix& m, double scale, Matrix& out) {
    const SingularPair sp = top_singular(m);
    if (sp.sigma == 0.0) return;
    outer_acc(out, sp.u, sp.v, scale);
}

}  // namespace

std::size_t parameter_count(const LstmParams& p) {
    const std::size_t per_gate = p.n_x * p.n_u + p.n_x * p.n_x + p.n_x;
    return 4 * per_gate + p.n_y * p.n_x + p.n_y;
}

Vector flatten(const LstmParams& p) {
    Vector theta;
    theta.reserve(parameter_count(p));
    for_each_block(p, [&](std::span<const double> blk) { theta.insert(theta.end(), blk.begin(), blk.end()); });
    return theta;
}

void unflatten(std::span<const double> theta, LstmParams& p) {
    if (theta.size() != parameter_count(p)) throw DimensionError("theta", "length does not match parameter count");
    std::size_t pos = 0;
    for_each_block(p, [&](std::span<double> blk) {
        std::copy_n(theta.begin() + static_cast<std::ptrdiff_t>(pos), blk.size(), blk.begin());
        pos += blk.size();
    });
}

LstmParams init_params(std::size_t n_x, std::size_t n_u, std::size_t n_y, double scale, std::uint64_t seed) {
    LstmParams p = LstmParams::zeros(n_x, n_u, n_y);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-scale, scale);
    for_each_block(p, [&](std::span<double> blk) {
        for (double& v : blk) v = dist(rng);
    });
    return p;
}

double penalty_value(double r, double rho_plus, double rho_minus, PenaltyConvention c) {
    const double v = rho_plus * std::max(r, 0.0) + rho_minus * std::min(r, 0.0);
    return c == PenaltyConvention::Corrected ? v : -v;
}

double penalty_slope(double r, double rho_plus, double rho_minus, PenaltyConvention c) {
    const double s = r > 0.0 ? rho_plus : rho_minus;
    return c == PenaltyConvention::Corrected ? s : -s;
}

double sequence_mse(const LstmParams& p, const Experiment& e, int washout) {
    if (e.u.size() != e.y.size()) throw DimensionError("experiment", "u and y lengths differ");
    const std::size_t n = e.u.size();
    const auto w = static_cast<std::size_t>(std::max(washout, 0));
    if (n <= w) throw InvalidArgument("sequence shorter than the washout");
    const Vector y = predict_outputs(p, LstmState::zeros(p.n_x), e.u);
    double acc = 0.0;
    for (std::size_t k = w; k < n; ++k) acc += (y[k] - e.y[k]) * (y[k] - e.y[k]);
    return acc / static_cast<double>(n - w);
}

LossBreakdown loss(const LstmParams& p, const Experiment& batch, const TrainConfig& cfg, const InputBox& box) {
    LossBreakdown out;
    out.mse = sequence_mse(p, batch, cfg.washout);
    const CertificatePair cert = certify(p, box);
    out.r1 = cert.delta_iss.residuals[0];
    out.r2 = cert.delta_iss.residuals[1];
    out.penalty_r1 = penalty_value(out.r1, cfg.rho1_plus, cfg.rho1_minus, cfg.convention);
    out.penalty_r2 = penalty_value(out.r2, cfg.rho2_plus, cfg.rho2_minus, cfg.convention);
    out.total = out.mse + out.penalty_r1 + out.penalty_r2;
    return out;
}

LstmParams mse_gradient(const LstmParams& p, const Experiment& e, int washout, double* mse) {
    if (p.n_u != 1 || p.n_y != 1) throw DimensionError("params", "trainer expects a SISO model");
    if (e.u.size() != e.y.size()) throw DimensionError("experiment", "u and y lengths differ");
    const std::size_t n = e.u.size();
    const auto w = static_cast<std::size_t>(std::max(washout, 0));
    if (n <= w) throw InvalidArgument("sequence shorter than the washout");
    const double inv_m = 1.0 / static_cast<double>(n - w);

    std::vector<LstmState> states;
    std::vector<StepActivations> acts(n);
    states.reserve(n);
    states.push_back(LstmState::zeros(p.n_x));
    for (std::size_t k = 0; k + 1 < n; ++k)
        states.push_back(step_record(p, states[k], std::span<const double>(&e.u[k], 1), acts[k]));

    LstmParams g = LstmParams::zeros(p.n_x, p.n_u, p.n_y);
    StepAdjoint adj{Vector(p.n_x, 0.0), Vector(p.n_x, 0.0), nullptr, &g};
    double acc = 0.0;
    for (std::size_t k = n; k-- > 0;) {
        if (k >= w) {
            const double yk = dot(p.readout.row(0), states[k].xi) + p.readout_bias[0];
            const double err = yk - e.y[k];
            acc += err * err;
            const double ge = 2.0 * err * inv_m;
            for (std::size_t j = 0; j < p.n_x; ++j) {
                g.readout(0, j) += ge * states[k].xi[j];
                adj.g_xi[j] += ge * p.readout(0, j);
            }
            g.readout_bias[0] += ge;
        }
        if (k > 0) step_adjoint(p, states[k - 1], std::span<const double>(&e.u[k - 1], 1), acts[k - 1], adj);
    }
    if (mse != nullptr) *mse = acc * inv_m;
    return g;
}

LstmParams residual_gradient(const LstmParams& p, const InputBox& box, double a1, double a2) {
    LstmParams g = LstmParams::zeros(p.n_x, p.n_u, p.n_y);
    if (a1 == 0.0 && a2 == 0.0) return g;

    const GateBounds b = gate_bounds(p, box);
    const WeightNorms nrm = weight_norms(p);
    const double sf = b.sigma_f, si = b.sigma_i, so = b.sigma_o, sc = b.sigma_c, sx = b.sigma_x;
    const double alpha = delta_alpha(b, nrm.U_f, nrm.U_c, nrm.U_i);

    // r1 = -1 + sf + alpha so + sx nUo / 4 - sf sx nUo / 4,  r2 = sf sx nUo / 4 - 1
    double g_sf = a1 * (1.0 - 0.25 * sx * nrm.U_o) + a2 * 0.25 * sx * nrm.U_o;
    const double g_alpha = a1 * so;
    const double g_so = a1 * alpha;
    const double g_sx = a1 * 0.25 * nrm.U_o * (1.0 - sf) + a2 * 0.25 * sf * nrm.U_o;
    const double g_nUo = a1 * 0.25 * sx * (1.0 - sf) + a2 * 0.25 * sf * sx;

    // alpha = nUf x_rad / 4 + si nUc + nUi sc / 4
    double g_xrad = g_alpha * 0.25 * nrm.U_f;
    double g_si = g_alpha * nrm.U_c;
    double g_sc = g_alpha * 0.25 * nrm.U_i;
    const double g_nUf = g_alpha * 0.25 * b.x_radius;
    const double g_nUc = g_alpha * si;
    const double g_nUi = g_alpha * 0.25 * sc;

    g_xrad += g_sx * (1.0 - sx * sx);
    const double one_m = 1.0 - sf;
    g_si += g_xrad * sc / one_m;
    g_sc += g_xrad * si / one_m;
    g_sf += g_xrad * si * sc / (one_m * one_m);

    row_norm_subgradient(p.forget, box.u_max, g_sf * sf * (1.0 - sf), g.forget);
    row_norm_subgradient(p.input, box.u_max, g_si * si * (1.0 - si), g.input);
    row_norm_subgradient(p.output, box.u_max, g_so * so * (1.0 - so), g.output);
    row_norm_subgradient(p.cell, box.u_max, g_sc * (1.0 - sc * sc), g.cell);

    spectral_subgradient(p.forget.recurrent, g_nUf, g.forget.recurrent);
    spectral_subgradient(p.input.recurrent, g_nUi, g.input.recurrent);
    spectral_subgradient(p.output.recurrent, g_nUo, g.output.recurrent);
    spectral_subgradient(p.cell.recurrent, g_nUc, g.cell.recurrent);
    return g;
}

LstmParams loss_gradient(const LstmParams& p, const Experiment& batch, const TrainConfig& cfg,
                         const InputBox& box, LossBreakdown* out) {
    double mse = 0.0;
    LstmParams g = mse_gradient(p, batch, cfg.washout, &mse);

    const CertificatePair cert = certify(p, box);
    const double r1 = cert.delta_iss.residuals[0];
    const double r2 = cert.delta_iss.residuals[1];
    const double a1 = penalty_slope(r1, cfg.rho1_plus, cfg.rho1_minus, cfg.convention);
    const double a2 = penalty_slope(r2, cfg.rho2_plus, cfg.rho2_minus, cfg.convention);
    const LstmParams gr = residual_gradient(p, box, a1, a2);

    Vector tg = flatten(g);
    const Vector tr = flatten(gr);
    for (std::size_t j = 0; j < tg.size(); ++j) tg[j] += tr[j];
    unflatten(tg, g);

    if (out != nullptr) {
        out->mse = mse;
        out->r1 = r1;
        out->r2 = r2;
        out->penalty_r1 = penalty_value(r1, cfg.rho1_plus, cfg.rho1_minus, cfg.convention);
        out->penalty_r2 = penalty_value(r2, cfg.rho2_plus, cfg.rho2_minus, cfg.convention);
        out->total = mse + out->penalty_r1 + out->penalty_r2;
    }
    return g;
}

namespace {

bool all_finite(const Vector& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

TrainResult rmsprop_train(const Dataset& ds, const TrainConfig& cfg, const InputBox& box, const LstmParams* init,
                          const EpochCallback& on_epoch) {
    cfg.validate();
    const std::vector<const Experiment*> train = ds.select(Split::Train);
    const std::vector<const Experiment*> val = ds.select(Split::Validation);
    if (train.empty()) throw InvalidArgument("train: dataset has no training experiments");
    if (val.empty()) throw InvalidArgument("train: dataset has no validation experiments");

    std::mt19937_64 rng(cfg.seed);
    LstmParams params = init != nullptr ? *init : init_params(cfg.n_x, 1, 1, cfg.init_scale, rng());
    params.validate();

    Vector theta = flatten(params);
    Vector accum(theta.size(), 0.0);
    double lr = cfg.learning_rate;

    TrainResult res;
    res.params = params;
    double best_any = std::numeric_limits<double>::infinity();
    double best_cert = std::numeric_limits<double>::infinity();
    LstmParams best_params = params, cert_params;
    int best_epoch = -1, cert_epoch = -1;
    int since_improve = 0;

    std::vector<std::size_t> order(train.size());
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const Vector theta_epoch = theta;
        const Vector accum_epoch = accum;
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0.0;
        bool bad = false;
        for (std::size_t idx : order) {
            LossBreakdown lb;
            const LstmParams g = loss_gradient(params, *train[idx], cfg, box, &lb);
            const Vector gv = flatten(g);
            if (!std::isfinite(lb.total) || !all_finite(gv)) {
                bad = true;
                break;
            }
            loss_sum += lb.total;
            for (std::size_t j = 0; j < theta.size(); ++j) {
                accum[j] = cfg.rmsprop_decay * accum[j] + (1.0 - cfg.rmsprop_decay) * gv[j] * gv[j];
                theta[j] -= lr * gv[j] / (std::sqrt(accum[j]) + cfg.epsilon);
            }
            unflatten(theta, params);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        if (!bad) {
            rec.train_loss = loss_sum / static_cast<double>(order.size());
            double vm = 0.0;
            for (const Experiment* e : val) vm += sequence_mse(params, *e, cfg.washout);
            rec.val_mse = vm / static_cast<double>(val.size());
            if (!std::isfinite(rec.val_mse) || !all_finite(theta)) bad = true;
        }
        if (bad) {
            if (res.learning_rate_halved) {
                res.diverged = true;
                break;
            }
            res.learning_rate_halved = true;
            lr *= 0.5;
            theta = theta_epoch;
            accum = accum_epoch;
            unflatten(theta, params);
            --epoch;  // repeat the epoch at the reduced rate
            continue;
        }

        const CertificatePair cert = certify(params, box);
        rec.r1 = cert.delta_iss.residuals[0];
        rec.r2 = cert.delta_iss.residuals[1];
        rec.certified = cert.delta_iss.certified();
        res.history.push_back(rec);
        if (on_epoch) on_epoch(rec);

        if (rec.val_mse < best_any) {
            best_params = params;
            best_epoch = epoch;
        }
        if (rec.certified && rec.val_mse < best_cert) {
            best_cert = rec.val_mse;
            cert_params = params;
            cert_epoch = epoch;
        }

        if (rec.val_mse < best_any) {
            best_any = rec.val_mse;
            since_improve = 0;
        } else if (++since_improve > cfg.patience) {
            break;
        }
    }
    const bool use_cert = cfg.prefer_certified && cert_epoch >= 0 && best_cert <= cfg.certified_tolerance * best_any;
    res.params = use_cert ? cert_params : best_params;
    res.best_epoch = use_cert ? cert_epoch : best_epoch;
    return res;
}

CertifiedTrainResult train_certified(const Dataset& ds, const TrainConfig& cfg, const InputBox& box,
                                     int max_attempts, const EpochCallback& on_epoch) {
    CertifiedTrainResult out;
    out.final_config = cfg;
    for (int a = 0; a < std::max(1, max_attempts); ++a) {
        out.attempts = a + 1;
        out.result = rmsprop_train(ds, out.final_config, box, nullptr, on_epoch);
        out.certified = certify(out.result.params, box).delta_iss.certified();
        if (out.certified || a + 1 == std::max(1, max_attempts)) break;
        out.final_config.rho1_plus *= 2.0;
        out.final_config.rho2_plus *= 2.0;
    }
    return out;
}

}  // namespace lstmctl
