#include <doctest.h>

#include <random>

#include "lstmctl/errors.hpp"
#include "lstmctl/mpc.hpp"
#include "lstmctl/observer.hpp"
#include "lstmctl/scenario.hpp"
#include "lstmctl/serialization.hpp"
#include "oracles.hpp"

using namespace lstmctl;

namespace {

const ModelBundle& shipped() {
    static const ModelBundle mb = load_model(LSTMCTL_TEST_DATA "/ph_model.json");
    return mb;
}

ObserverGains random_gains(std::size_t n_x, std::size_t n_y, double scale, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-scale, scale);
    ObserverGains g = ObserverGains::zeros(n_x, n_y);
    for (Matrix* m : {&g.L_f, &g.L_i, &g.L_o})
        for (double& v : m->data()) v = d(rng);
    return g;
}

}  // namespace

TEST_SUITE("observer") {

TEST_CASE("zero gains reduce the observer to the model") {
    const LstmParams p = oracle::random_params(3, 1, 1, 1.0, 10);
    std::mt19937_64 rng(1);
    const LstmState s = oracle::random_state(3, 1.0, rng);
    const std::vector<double> u{0.4};
    for (double y : {-5.0, 0.0, 3.0}) CHECK(observer_step(p, ObserverGains::zeros(3, 1), s, u, std::vector<double>{y}) == step(p, s, u));
}

TEST_CASE("zero innovation gives the model step") {
    const LstmParams p = oracle::random_params(3, 1, 1, 1.0, 11);
    const ObserverGains g = random_gains(3, 1, 1.0, 2);
    std::mt19937_64 rng(2);
    const LstmState s = oracle::random_state(3, 1.0, rng);
    const std::vector<double> u{-0.2};
    CHECK(observer_step(p, g, s, u, output(p, s)) == step(p, s, u));
}

TEST_CASE("observer step matches the scalar transcription") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        const LstmParams p = oracle::random_params(3, 2, 2, 1.0, 40 + t);
        const ObserverGains g = random_gains(3, 2, 1.0, 60 + t);
        const LstmState s = oracle::random_state(3, 1.0, rng);
        const std::vector<double> u{0.3, -0.7}, y{0.5, -1.2};
        const LstmState a = observer_step(p, g, s, u, y), b = oracle::observer_step(p, g, s, u, y);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(std::abs(a.x[j] - b.x[j]) <= 1e-12);
            CHECK(std::abs(a.xi[j] - b.xi[j]) <= 1e-12);
        }
    }
}

TEST_CASE("observer rejects mismatched gains") {
    const LstmParams p = oracle::random_params(3, 1, 1, 1.0, 12);
    CHECK_THROWS_AS(observer_step(p, ObserverGains::zeros(2, 1), LstmState::zeros(3), std::vector<double>{0.0},
                                  std::vector<double>{0.0}),
                    DimensionError);
}

TEST_CASE("zero gains reproduce A_delta exactly") {
    for (int s = 0; s < 10; ++s) {
        const LstmParams p = oracle::random_params(4, 1, 1, 0.2, 70 + s);
        const InputBox box{};
        const CertificatePair c = certify(p, box);
        const ObserverBounds ob = observer_bounds(p, ObserverGains::zeros(4, 1), box, c.delta_iss.bounds);
        CHECK(ob.A_hat.a11 == c.delta_iss.matrix.a11);
        CHECK(ob.A_hat.a12 == c.delta_iss.matrix.a12);
        CHECK(ob.A_hat.a21 == c.delta_iss.matrix.a21);
        CHECK(ob.A_hat.a22 == c.delta_iss.matrix.a22);
        CHECK(ob.sigma_f == c.delta_iss.bounds.sigma_f);
        CHECK(ob.sigma_i == c.delta_iss.bounds.sigma_i);
        CHECK(ob.sigma_o == c.delta_iss.bounds.sigma_o);
        CHECK(ob.constraint_r1 == c.delta_iss.residuals[0]);
        CHECK(ob.constraint_r2 == c.delta_iss.residuals[1]);
    }
}

TEST_CASE("observer bounds follow the four-block construction") {
    const LstmParams p = oracle::random_params(4, 1, 1, 0.3, 80);
    const ObserverGains g = random_gains(4, 1, 0.5, 81);
    const InputBox box{};
    const GateBounds b = gate_bounds(p, box);
    const ObserverBounds ob = observer_bounds(p, g, box, b);

    auto four_block = [&](const GateWeights& w, const Matrix& L) {
        double best = 0.0;
        for (std::size_t r = 0; r < 4; ++r) {
            double s = std::abs(w.bias[r]) + std::abs(w.input(r, 0));
            for (std::size_t c = 0; c < 4; ++c) {
                const double lc = L(r, 0) * p.readout(0, c);
                s += std::abs(w.recurrent(r, c) - lc) + std::abs(lc);
            }
            best = std::max(best, s);
        }
        return oracle::sig(best);
    };
    CHECK(ob.sigma_f == doctest::Approx(four_block(p.forget, g.L_f)).epsilon(1e-14));
    CHECK(ob.sigma_i == doctest::Approx(four_block(p.input, g.L_i)).epsilon(1e-14));
    CHECK(ob.sigma_o == doctest::Approx(four_block(p.output, g.L_o)).epsilon(1e-14));
    CHECK(ob.sigma_f >= b.sigma_f);

    auto minus_lc = [&](const Matrix& U, const Matrix& L) {
        Matrix m = U;
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 4; ++c) m(r, c) -= L(r, 0) * p.readout(0, c);
        return oracle::spectral_norm(m);
    };
    const double alpha_hat = 0.25 * minus_lc(p.forget.recurrent, g.L_f) * b.sigma_i * b.sigma_c / (1.0 - b.sigma_f) +
                             b.sigma_i * oracle::spectral_norm(p.cell.recurrent) +
                             0.25 * minus_lc(p.input.recurrent, g.L_i) * b.sigma_c;
    CHECK(ob.alpha_hat == doctest::Approx(alpha_hat).epsilon(1e-9));
    CHECK(ob.A_hat.a11 == ob.sigma_f);
    CHECK(ob.A_hat.a12 == ob.alpha_hat);
    CHECK(ob.A_hat.a21 == doctest::Approx(ob.sigma_f * ob.sigma_o).epsilon(1e-15));
    CHECK(ob.A_hat.a22 ==
          doctest::Approx(0.25 * b.sigma_x * minus_lc(p.output.recurrent, g.L_o) + ob.sigma_o * ob.alpha_hat)
              .epsilon(1e-9));
    CHECK(ob.norm_A_hat == doctest::Approx(oracle::spectral_norm(ob.A_hat.to_matrix())).epsilon(1e-9));
    CHECK(ob.rho_A_hat == doctest::Approx(oracle::eig_radius(ob.A_hat)).epsilon(1e-12));
}

TEST_CASE("synthesis refuses an uncertified model") {
    LstmParams p = oracle::random_params(3, 1, 1, 2.0, 90);
    REQUIRE_FALSE(certify(p, InputBox{}).delta_iss.certified());
    CHECK_THROWS_AS(synthesize_gains(p, InputBox{}), CertificationError);
}

TEST_CASE("synthesized gains on a small network") {
    const LstmParams p = oracle::random_params(3, 1, 1, 0.2, 91);
    REQUIRE(certify(p, InputBox{}).delta_iss.certified());
    SynthesisOptions opt;
    opt.random_starts = 2;
    opt.max_evaluations_per_start = 800;
    const SynthesisResult a = synthesize_gains(p, InputBox{}, opt);
    const SynthesisResult b = synthesize_gains(p, InputBox{}, opt);
    CHECK(a.gains == b.gains);
    CHECK(a.seed == opt.seed);
    CHECK(a.bounds.norm_A_hat <= a.open_loop.norm_A_hat);
    CHECK(a.bounds.feasible());
    for (std::size_t k = 1; k < a.incumbent.size(); ++k) CHECK(a.incumbent[k] <= a.incumbent[k - 1]);
    // Re-evaluated from scratch, the tuning residuals stay negative.
    const ObserverBounds again = observer_bounds(p, a.gains, InputBox{}, certify(p, InputBox{}).delta_iss.bounds);
    CHECK(again.constraint_r1 < 0.0);
    CHECK(again.constraint_r2 < 0.0);
}

TEST_CASE("fully hatted mode reports the alternate norm") {
    const LstmParams p = oracle::random_params(3, 1, 1, 0.3, 92);
    const ObserverGains g = random_gains(3, 1, 0.2, 93);
    const GateBounds b = gate_bounds(p, InputBox{});
    const ObserverBounds printed = observer_bounds(p, g, InputBox{}, b, AlphaHatMode::AsPrinted);
    const ObserverBounds hatted = observer_bounds(p, g, InputBox{}, b, AlphaHatMode::FullyHatted);
    CHECK(printed.norm_A_hat_alternate == doctest::Approx(hatted.norm_A_hat).epsilon(1e-14));
    CHECK(hatted.norm_A_hat_alternate == doctest::Approx(printed.norm_A_hat).epsilon(1e-14));
}

TEST_CASE("shipped observer gains contract the estimation error") {
    const ModelBundle& mb = shipped();
    REQUIRE(mb.observer.has_value());
    const LstmParams& p = mb.params;
    const CertificatePair c = certify(p, mb.box);
    const ObserverBounds ob = observer_bounds(p, *mb.observer, mb.box, c.delta_iss.bounds);
    CHECK(ob.feasible());
    CHECK(ob.norm_A_hat <= spectral_norm(c.delta_iss.matrix));

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    const Gain2x2 A = ob.A_hat;
    for (int trial = 0; trial < 100; ++trial) {
        LstmState truth = sample_invariant_state(p, mb.box, rng);
        LstmState est = sample_invariant_state(p, mb.box, rng);
        // Step once so both xi lie in the cube the bounds assume.
        const std::vector<double> u0{ud(rng)};
        est = observer_step(p, *mb.observer, est, u0, output(p, truth));
        truth = step(p, truth, u0);
        double v1 = 0.0, v2 = 0.0;
        for (std::size_t j = 0; j < p.n_x; ++j) {
            v1 += (truth.x[j] - est.x[j]) * (truth.x[j] - est.x[j]);
            v2 += (truth.xi[j] - est.xi[j]) * (truth.xi[j] - est.xi[j]);
        }
        v1 = std::sqrt(v1);
        v2 = std::sqrt(v2);
        bool inside = true;
        for (int k = 0; k < 300; ++k) {
            const std::vector<double> u{ud(rng)};
            est = observer_step(p, *mb.observer, est, u, output(p, truth));
            truth = step(p, truth, u);
            const double n1 = A.a11 * v1 + A.a12 * v2, n2 = A.a21 * v1 + A.a22 * v2;
            v1 = n1;
            v2 = n2;
            const DeltaVec d = delta_vec(est, truth);
            inside = inside && d.d1 <= v1 * (1.0 + 1e-9) + 1e-15 && d.d2 <= v2 * (1.0 + 1e-9) + 1e-15;
        }
        CHECK(inside);
        CHECK(state_distance(truth, est) < 1e-4);
    }
}

TEST_CASE("error envelope does not depend on the input") {
    const ModelBundle& mb = shipped();
    const LstmParams& p = mb.params;
    const ObserverBounds ob = observer_bounds(p, *mb.observer, mb.box, certify(p, mb.box).delta_iss.bounds);
    std::mt19937_64 rng(23);
    const LstmState truth0 = sample_invariant_state(p, mb.box, rng);
    const LstmState est0 = sample_invariant_state(p, mb.box, rng);
    const double e0 = state_distance(truth0, est0);
    const double lambda = 0.5 * (1.0 + ob.rho_A_hat);
    double mu = 1.0;
    {
        // mu bounds |A_hat^k| / lambda^k, which makes mu lambda^k |e(0)| a common envelope.
        Gain2x2 pw{1, 0, 0, 1};
        for (int k = 1; k <= 2000; ++k) {
            pw = pw * ob.A_hat;
            mu = std::max(mu, spectral_norm(pw) / std::pow(lambda, k));
        }
    }
    for (double level : {-0.9, 0.6}) {
        std::mt19937_64 r2(static_cast<std::uint64_t>(level * 100 + 200));
        std::uniform_real_distribution<double> jitter(-0.1, 0.1);
        LstmState truth = truth0, est = est0;
        // First step puts xi in the cube; the envelope is anchored there.
        const std::vector<double> u0{level};
        est = observer_step(p, *mb.observer, est, u0, output(p, truth));
        truth = step(p, truth, u0);
        const double e1 = std::max(state_distance(truth, est), 1e-300);
        for (int k = 1; k <= 300; ++k) {
            const std::vector<double> u{level + jitter(r2)};
            est = observer_step(p, *mb.observer, est, u, output(p, truth));
            truth = step(p, truth, u);
            CHECK(state_distance(truth, est) <= mu * std::pow(lambda, k) * e1 * (1.0 + 1e-9) + 1e-15);
        }
    }
    CHECK(e0 > 0.0);
}

TEST_CASE("nelder-mead minimizes a quadratic and logs a nonincreasing trace") {
    auto f = [](const std::vector<double>& x) { return (x[0] - 1.0) * (x[0] - 1.0) + 3.0 * (x[1] + 2.0) * (x[1] + 2.0); };
    const NelderMeadResult r = nelder_mead(f, {0.0, 0.0}, 0.5, 4000);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(r.x[1] == doctest::Approx(-2.0).epsilon(1e-4));
    for (std::size_t k = 1; k < r.trace.size(); ++k) CHECK(r.trace[k] <= r.trace[k - 1]);
}

}
