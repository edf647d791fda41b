#include <doctest.h>

#include <random>

#include "lstmctl/errors.hpp"
#include "lstmctl/plant.hpp"
#include "oracles.hpp"

using namespace lstmctl;

TEST_SUITE("plant") {

TEST_CASE("nominal state is near a hydraulic equilibrium") {
    const PlantParams p;
    const PlantDeriv f = plant_deriv(p, PlantState::nominal(), kNominalQ3, p.q2);
    CHECK(std::abs(f[2]) < 2e-4);
    const double q4 = p.Cv4 * std::pow(14.0 + p.z, p.n_exp);
    CHECK(std::abs(q4 - kNominalQ4) / kNominalQ4 < 0.002);
    CHECK(std::abs(q4 - (p.q1 + p.q2 + kNominalQ3)) / q4 < 0.002);
}

TEST_CASE("nominal invariants give pH 7") {
    const PlantParams p;
    CHECK(std::abs(ph_output(p, PlantState::nominal()) - 7.0) <= 0.1);
}

TEST_CASE("pure water has pH exactly 7") {
    const PlantParams p;
    CHECK(ph_output(p, PlantState{0.0, 0.0, 14.0}) == 7.0);
}

TEST_CASE("acid inflow alone leaves x1 = Wa1 unchanged") {
    const PlantParams p;
    const PlantDeriv f = plant_deriv(p, PlantState{p.Wa1, 0.0, 10.0}, 0.0, 0.0);
    CHECK(f[0] == 0.0);
}

TEST_CASE("derivative matches the term-by-term transcription") {
    const PlantParams p;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> a(-3e-3, 3e-3), b(0.0, 3e-3), h(1.0, 30.0), q(0.0, 30.0);
    for (int k = 0; k < 100; ++k) {
        const PlantState s{a(rng), b(rng), h(rng)};
        const double q3 = q(rng), q2 = q(rng) * 0.1;
        const PlantDeriv f = plant_deriv(p, s, q3, q2);
        const auto o = oracle::plant_rhs(p, s.x1, s.x2, s.x3, q3, q2);
        for (int i = 0; i < 3; ++i) CHECK(std::abs(f[i] - o[i]) <= 1e-12 * std::max(1.0, std::abs(o[i])));
    }
}

TEST_CASE("empty tank is rejected") {
    const PlantParams p;
    CHECK_THROWS_AS(plant_deriv(p, PlantState{0.0, 0.0, 0.0}, 15.0, 0.55), PlantError);
    CHECK_THROWS_AS(plant_deriv(p, PlantState{0.0, 0.0, -1.0}, 15.0, 0.55), PlantError);
}

TEST_CASE("charge balance is increasing and the root is accurate") {
    const PlantParams p;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> a(-3e-3, 3e-3), b(0.0, 1e-3);
    for (int k = 0; k < 100; ++k) {
        const PlantState s{a(rng), b(rng), 14.0};
        const double y = ph_output(p, s);
        CHECK(y >= 0.0);
        CHECK(y <= 14.0);
        CHECK(std::abs(oracle::charge(p, s.x1, s.x2, y)) <= 1e-12);
        CHECK(charge_balance(p, s.x1, s.x2, y) == doctest::Approx(oracle::charge(p, s.x1, s.x2, y)));
        double prev = charge_balance(p, s.x1, s.x2, 0.0);
        for (int i = 1; i <= 1400; ++i) {
            const double c = charge_balance(p, s.x1, s.x2, i * 0.01);
            REQUIRE(c > prev);
            prev = c;
        }
    }
}

TEST_CASE("no root reports both ends") {
    const PlantParams p;
    try {
        ph_output(p, PlantState{5.0, 0.0, 14.0});
        FAIL("expected a plant error");
    } catch (const PlantError& e) {
        CHECK(std::string(e.what()).find("c(0)") != std::string::npos);
        CHECK(std::string(e.what()).find("c(14)") != std::string::npos);
    }
}

TEST_CASE("nominal operation stays close to the start for 100 s") {
    const PlantParams p;
    const PlantState s0 = PlantState::nominal();
    const PlantState s = integrate_step(p, s0, kNominalQ3, p.q2, 100.0);
    // x1 relaxes toward the flow-weighted mix of the inlet concentrations.
    const double x1_mix = (p.q1 * p.Wa1 + kNominalQ3 * p.Wa3 + p.q2 * p.Wa2) / (p.q1 + kNominalQ3 + p.q2);
    CHECK(std::abs(s.x1 - x1_mix) <= std::abs(s0.x1 - x1_mix));
    CHECK(std::abs(s.x1 - s0.x1) <= 0.01 * std::abs(s0.x1));
    CHECK(std::abs(s.x2 - s0.x2) <= 0.005 * std::abs(s0.x2));
    CHECK(std::abs(s.x3 - s0.x3) <= 0.005 * std::abs(s0.x3));
}

TEST_CASE("two short steps agree with one long step") {
    const PlantParams p;
    const PlantState s0{-1e-3, 4e-4, 12.0};
    const PlantState once = integrate_step(p, s0, 19.0, p.q2, 0.2, 0.2);
    const PlantState twice = integrate_step(p, integrate_step(p, s0, 19.0, p.q2, 0.1, 0.1), 19.0, p.q2, 0.1, 0.1);
    CHECK(std::abs(once.x1 - twice.x1) <= 1e-8 * std::abs(twice.x1));
    CHECK(std::abs(once.x2 - twice.x2) <= 1e-8 * std::abs(twice.x2));
    CHECK(std::abs(once.x3 - twice.x3) <= 1e-8 * std::abs(twice.x3));
}

TEST_CASE("halving the substep barely moves the 100 s state") {
    const PlantParams p;
    const PlantState s0{-1e-3, 4e-4, 12.0};
    const PlantState a = integrate_step(p, s0, 19.0, p.q2, 100.0, 0.1);
    const PlantState b = integrate_step(p, s0, 19.0, p.q2, 100.0, 0.05);
    CHECK(std::abs(a.x1 - b.x1) <= 1e-6 * std::abs(b.x1));
    CHECK(std::abs(a.x2 - b.x2) <= 1e-6 * std::abs(b.x2));
    CHECK(std::abs(a.x3 - b.x3) <= 1e-6 * std::abs(b.x3));
}

TEST_CASE("invariants stay in the mixing hull") {
    const PlantParams p;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> q(11.6, 19.6);
    PlantState s = PlantState::nominal();
    const double a_lo = std::min({p.Wa1, p.Wa2, p.Wa3}), a_hi = std::max({p.Wa1, p.Wa2, p.Wa3});
    const double b_lo = std::min({p.Wb1, p.Wb2, p.Wb3}), b_hi = std::max({p.Wb1, p.Wb2, p.Wb3});
    for (int k = 0; k < 300; ++k) {
        s = integrate_step(p, s, q(rng), p.q2, 10.0);
        CHECK(s.x1 >= a_lo);
        CHECK(s.x1 <= a_hi);
        CHECK(s.x2 >= b_lo);
        CHECK(s.x2 <= b_hi);
        CHECK(s.x3 > 0.0);
    }
}

TEST_CASE("constant nominal input gives a constant pH record") {
    const PlantParams p;
    const Vector q3(200, kNominalQ3);
    const Scalers sc{ActuatorRange{}.scaler(), ChannelScaler{5.0, 9.0}};
    const ExperimentRecord r = run_experiment(p, q3, 10.0, NoiseConfig{}, 1, sc);
    for (std::size_t k = 150; k < 200; ++k) CHECK(std::abs(r.y_raw[k] - r.y_raw[199]) < 1e-6);
    CHECK(r.u_norm == r.u_clean);
}

TEST_CASE("experiments are deterministic per seed") {
    const PlantParams p;
    const Vector u = mprs_input(MprsConfig{}, 300, 5);
    Vector q3(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) q3[k] = ActuatorRange{}.scaler().denormalize(u[k]);
    const Scalers sc{ActuatorRange{}.scaler(), ChannelScaler{5.0, 9.0}};
    const ExperimentRecord a = run_experiment(p, q3, 10.0, NoiseConfig{0.02}, 77, sc);
    const ExperimentRecord b = run_experiment(p, q3, 10.0, NoiseConfig{0.02}, 77, sc);
    const ExperimentRecord c = run_experiment(p, q3, 10.0, NoiseConfig{0.02}, 78, sc);
    CHECK(a.y_norm == b.y_norm);
    CHECK(a.u_norm == b.u_norm);
    CHECK(a.y_norm != c.y_norm);
}

TEST_CASE("measurement noise has the requested variance") {
    const PlantParams p;
    const Vector u = mprs_input(MprsConfig{}, 2000, 9);
    Vector q3(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) q3[k] = ActuatorRange{}.scaler().denormalize(u[k]);
    const Scalers sc{ActuatorRange{}.scaler(), ChannelScaler{5.0, 9.0}};
    const ExperimentRecord r = run_experiment(p, q3, 10.0, NoiseConfig{0.02}, 13, sc);
    for (const auto& [rec, clean] : {std::pair{&r.y_norm, &r.y_clean}, std::pair{&r.u_norm, &r.u_clean}}) {
        double m = 0.0, v = 0.0;
        for (std::size_t k = 0; k < rec->size(); ++k) m += (*rec)[k] - (*clean)[k];
        m /= static_cast<double>(rec->size());
        for (std::size_t k = 0; k < rec->size(); ++k) v += std::pow((*rec)[k] - (*clean)[k] - m, 2);
        v /= static_cast<double>(rec->size() - 1);
        CHECK(std::abs(v - 4e-4) <= 0.1 * 4e-4);
    }
}

TEST_CASE("mprs with a full-length hold is constant") {
    MprsConfig c;
    c.hold_min = c.hold_max = 100;
    const Vector u = mprs_input(c, 100, 3);
    for (double v : u) CHECK(v == u[0]);
}

TEST_CASE("mprs levels are in range and uniform") {
    MprsConfig c;
    c.hold_min = c.hold_max = 1;
    const Vector u = mprs_input(c, 100000, 4);
    constexpr int bins = 20;
    std::vector<int> counts(bins, 0);
    for (double v : u) {
        REQUIRE(v >= c.level_lo);
        REQUIRE(v <= c.level_hi);
        ++counts[std::min(bins - 1, static_cast<int>((v - c.level_lo) / (c.level_hi - c.level_lo) * bins))];
    }
    double chi2 = 0.0;
    const double expect = 100000.0 / bins;
    for (int n : counts) chi2 += (n - expect) * (n - expect) / expect;
    CHECK(chi2 < 36.19);  // chi-square 0.99 quantile, 19 degrees of freedom
}

TEST_CASE("mprs hold lengths respect the bounds") {
    MprsConfig c;
    c.hold_min = 5;
    c.hold_max = 9;
    const Vector u = mprs_input(c, 5000, 6);
    std::size_t run = 1;
    for (std::size_t k = 1; k < u.size(); ++k) {
        if (u[k] == u[k - 1]) {
            ++run;
        } else {
            CHECK(run >= 5);
            CHECK(run <= 9);
            run = 1;
        }
    }
}

TEST_CASE("actuator range covers the reference set") {
    const PlantParams p;
    const double lo = plant_response(p, Vector(300, ActuatorRange{}.q3_min), 10.0).back();
    const double hi = plant_response(p, Vector(300, ActuatorRange{}.q3_max), 10.0).back();
    CHECK(lo < 6.0);
    CHECK(hi > 8.0);
}

TEST_CASE("parameter validation") {
    PlantParams p;
    p.n_exp = 1.5;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    p = PlantParams{};
    p.pK1 = 11.0;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
}

}
