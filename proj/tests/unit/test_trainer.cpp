#include <doctest.h>

#include <random>

#include "lstmctl/errors.hpp"
#include "lstmctl/trainer.hpp"
#include "oracles.hpp"
#include "teacher.hpp"

using namespace lstmctl;

namespace {

Experiment random_experiment(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Experiment e;
    for (std::size_t k = 0; k < n; ++k) {
        e.u.push_back(d(rng));
        e.y.push_back(0.5 * d(rng));
    }
    return e;
}

std::vector<double> flat_fd(const LstmParams& p, double h, const std::function<double(const LstmParams&)>& f) {
    return oracle::central_diff(
        [&](const std::vector<double>& th) {
            LstmParams q = p;
            unflatten(th, q);
            return f(q);
        },
        flatten(p), h);
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("penalty conventions") {
    CHECK(penalty_value(0.5, 4e-3, 2e-5, PenaltyConvention::Corrected) == 4e-3 * 0.5);
    CHECK(penalty_value(-0.5, 4e-3, 2e-5, PenaltyConvention::Corrected) == 2e-5 * -0.5);
    CHECK(penalty_value(0.5, 4e-3, 2e-5, PenaltyConvention::AsPrinted) == -4e-3 * 0.5);
    CHECK(penalty_slope(0.5, 4e-3, 2e-5, PenaltyConvention::Corrected) == 4e-3);
    CHECK(penalty_slope(-0.5, 4e-3, 2e-5, PenaltyConvention::Corrected) == 2e-5);
    CHECK(penalty_slope(-0.5, 4e-3, 2e-5, PenaltyConvention::AsPrinted) == -2e-5);
}

TEST_CASE("zero network on zero data") {
    Experiment e;
    e.u.assign(100, 0.3);
    e.y.assign(100, 0.0);
    const TrainConfig cfg;
    const LossBreakdown lb = loss(LstmParams::zeros(3, 1, 1), e, cfg, InputBox{});
    CHECK(lb.mse == 0.0);
    CHECK(lb.r1 == -0.5);
    CHECK(lb.r2 == -1.0);
    CHECK(lb.total == doctest::Approx(cfg.rho1_minus * -0.5 + cfg.rho2_minus * -1.0).epsilon(1e-15));
    CHECK(lb.total == lb.mse + lb.penalty_r1 + lb.penalty_r2);
}

TEST_CASE("sequence mse matches an unrolled recomputation") {
    const LstmParams p = oracle::random_params(3, 1, 1, 0.7, 5);
    const Experiment e = random_experiment(80, 6);
    LstmState s = LstmState::zeros(3);
    double acc = 0.0;
    for (std::size_t k = 0; k < 80; ++k) {
        if (k >= 10) acc += std::pow(oracle::output(p, s)[0] - e.y[k], 2);
        s = oracle::step(p, s, {e.u[k]});
    }
    CHECK(std::abs(sequence_mse(p, e, 10) - acc / 70.0) <= 1e-10);
    CHECK_THROWS_AS(sequence_mse(p, e, 80), InvalidArgument);
}

TEST_CASE("flatten and unflatten are inverse and ordered") {
    const LstmParams p = oracle::random_params(3, 2, 1, 1.0, 7);
    const Vector th = flatten(p);
    CHECK(th.size() == parameter_count(p));
    CHECK(th.size() == 4 * (3 * 2 + 9 + 3) + 3 + 1);
    CHECK(th.front() == p.forget.input(0, 0));
    CHECK(th.back() == p.readout_bias[0]);
    CHECK(th[6] == p.forget.recurrent(0, 0));
    LstmParams q = LstmParams::zeros(3, 2, 1);
    unflatten(th, q);
    CHECK(q == p);
    CHECK_THROWS_AS(unflatten(Vector(3, 0.0), q), DimensionError);
}

TEST_CASE("initialization is uniform in the scale and seeded") {
    const LstmParams a = init_params(4, 1, 1, 0.1, 3), b = init_params(4, 1, 1, 0.1, 3);
    CHECK(a == b);
    for (double v : flatten(a)) CHECK(std::abs(v) <= 0.1);
    CHECK(certify(a, InputBox{}).delta_iss.certified());
}

TEST_CASE("BPTT gradient matches central differences") {
    for (int t = 0; t < 10; ++t) {
        const LstmParams p = oracle::random_params(3, 1, 1, 0.6, 20 + t);
        const Experiment e = random_experiment(30, 40 + t);
        double mse = 0.0;
        const Vector g = flatten(mse_gradient(p, e, 5, &mse));
        CHECK(mse == doctest::Approx(sequence_mse(p, e, 5)).epsilon(1e-14));
        const auto fd = flat_fd(p, 1e-6, [&](const LstmParams& q) { return sequence_mse(q, e, 5); });
        CHECK(oracle::max_rel_error(g, fd) < 1e-5);
    }
}

TEST_CASE("residual subgradient matches differences away from ties") {
    for (int t = 0; t < 10; ++t) {
        const LstmParams p = oracle::random_params(4, 1, 1, 0.5, 60 + t);
        const InputBox box{};
        const Vector g1 = flatten(residual_gradient(p, box, 1.0, 0.0));
        const Vector g2 = flatten(residual_gradient(p, box, 0.0, 1.0));
        const auto fd1 = flat_fd(p, 1e-5, [&](const LstmParams& q) { return certify(q, box).delta_iss.residuals[0]; });
        const auto fd2 = flat_fd(p, 1e-5, [&](const LstmParams& q) { return certify(q, box).delta_iss.residuals[1]; });
        CHECK(oracle::max_rel_error(g1, fd1) < 1e-4);
        CHECK(oracle::max_rel_error(g2, fd2) < 1e-4);
    }
}

TEST_CASE("full loss gradient matches differences") {
    TrainConfig cfg;
    cfg.washout = 5;
    for (int t = 0; t < 5; ++t) {
        const LstmParams p = oracle::random_params(3, 1, 1, 0.6, 80 + t);
        const Experiment e = random_experiment(30, 90 + t);
        for (PenaltyConvention c : {PenaltyConvention::Corrected, PenaltyConvention::AsPrinted}) {
            cfg.convention = c;
            const Vector g = flatten(loss_gradient(p, e, cfg, InputBox{}));
            const auto fd = flat_fd(p, 1e-5, [&](const LstmParams& q) { return loss(q, e, cfg, InputBox{}).total; });
            CHECK(oracle::max_rel_error(g, fd) < 1e-5);
        }
    }
}

TEST_CASE("perfect fit leaves only the reward slope times the residual gradient") {
    const LstmParams p = init_params(3, 1, 1, 0.1, 9);
    Experiment e;
    e.u = random_experiment(60, 10).u;
    e.y = predict_outputs(p, LstmState::zeros(3), e.u);
    TrainConfig cfg;
    LossBreakdown lb;
    const Vector g = flatten(loss_gradient(p, e, cfg, InputBox{}, &lb));
    REQUIRE(lb.r1 < 0.0);
    REQUIRE(lb.r2 < 0.0);
    CHECK(lb.mse == 0.0);
    const Vector expect = flatten(residual_gradient(p, InputBox{}, cfg.rho1_minus, cfg.rho2_minus));
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(g[k] == doctest::Approx(expect[k]).epsilon(1e-12));
}

TEST_CASE("training needs both splits") {
    Dataset ds = teacher::dataset(60);
    for (Experiment& e : ds.experiments) e.split = Split::Train;
    CHECK_THROWS_AS(rmsprop_train(ds, teacher::config(), InputBox{}), InvalidArgument);
    for (Experiment& e : ds.experiments) e.split = Split::Validation;
    CHECK_THROWS_AS(rmsprop_train(ds, teacher::config(), InputBox{}), InvalidArgument);
}

TEST_CASE("patience zero stops at the first non-improving epoch") {
    const Dataset ds = teacher::dataset(100);
    TrainConfig cfg = teacher::config();
    cfg.patience = 0;
    cfg.learning_rate = 0.05;
    const TrainResult r = rmsprop_train(ds, cfg, InputBox{});
    REQUIRE(r.history.size() >= 2);
    double best = r.history.front().val_mse;
    for (std::size_t k = 1; k + 1 < r.history.size(); ++k) {
        CHECK(r.history[k].val_mse < best);
        best = r.history[k].val_mse;
    }
    CHECK(r.history.back().val_mse >= best);
    CHECK(static_cast<int>(r.history.size()) < cfg.max_epochs);
}

TEST_CASE("training is deterministic and lowers the loss early") {
    const Dataset ds = teacher::dataset(150);
    TrainConfig cfg = teacher::config();
    cfg.max_epochs = 30;
    const TrainResult a = rmsprop_train(ds, cfg, InputBox{});
    const TrainResult b = rmsprop_train(ds, cfg, InputBox{});
    CHECK(a.params == b.params);
    REQUIRE(a.history.size() >= 10);
    CHECK(a.history[9].train_loss < a.history[0].train_loss);
    for (std::size_t k = 1; k < 10; ++k) CHECK(a.history[k].epoch == a.history[k - 1].epoch + 1);
}

TEST_CASE("teacher-student identification") {
    const Dataset ds = teacher::dataset();
    const TrainResult r = rmsprop_train(ds, teacher::config(), InputBox{});
    REQUIRE(r.best_epoch >= 1);
    double val = 0.0;
    for (const Experiment* e : ds.select(Split::Validation)) val += sequence_mse(r.params, *e, 20);
    CHECK(val < 1e-4);
    CHECK_FALSE(r.diverged);
}

TEST_CASE("certified retraining keeps the config of the released model") {
    const Dataset ds = teacher::dataset(60);
    TrainConfig cfg = teacher::config();
    cfg.n_x = 4;
    cfg.init_scale = 3.0;
    cfg.max_epochs = 1;
    cfg.learning_rate = 1e-6;
    const CertifiedTrainResult r = train_certified(ds, cfg, InputBox{}, 3);
    CHECK_FALSE(r.certified);
    CHECK(r.attempts == 3);
    CHECK(r.final_config.rho1_plus == 4.0 * cfg.rho1_plus);
    CHECK(r.final_config.rho2_plus == 4.0 * cfg.rho2_plus);

    TrainConfig ok = teacher::config();
    ok.max_epochs = 5;
    const CertifiedTrainResult s = train_certified(ds, ok, InputBox{}, 3);
    CHECK(s.certified);
    CHECK(s.attempts == 1);
    CHECK(s.final_config.rho1_plus == ok.rho1_plus);
}

TEST_CASE("config validation") {
    TrainConfig c;
    c.learning_rate = 0.0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = TrainConfig{};
    c.rho1_minus = -1.0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

}
