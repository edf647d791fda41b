#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "lstmctl/errors.hpp"
#include "lstmctl/pipeline.hpp"

using namespace lstmctl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("lstmctl_pipe_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

PipelineConfig small_config() {
    PipelineConfig c;
    c.samples = 120;
    c.train.max_epochs = 3;
    c.train.n_x = 3;
    c.train.washout = 10;
    c.certify_retries = 1;
    return c;
}

// Closed-loop trace whose plant tracks every setpoint exactly.
ClosedLoopTrace perfect_trace() {
    ClosedLoopTrace tr;
    const double refs[] = {7.0, 8.0};
    for (int k = 0; k < 60; ++k) {
        TraceRecord r;
        r.t = 10.0 * k;
        r.segment = k < 10 ? -1 : (k < 35 ? 0 : 1);
        r.ref = r.segment < 0 ? std::nan("") : refs[r.segment];
        r.y_plant = r.segment < 0 ? 6.9 : r.ref;
        r.J_star = r.segment < 0 ? std::nan("") : 1.0 / (1.0 + k);
        r.u = 0.01 * k - 0.3;
        r.obs_error_norm = k < 5 ? 0.5 : 0.0;
        r.chi_hat = LstmState::zeros(2);
        r.chi_hat.x[1] = 0.1 * k;
        tr.records.push_back(r);
    }
    return tr;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("dataset generation is deterministic and scaled") {
    const PipelineConfig c = small_config();
    const GeneratedData a = generate_dataset(c);
    const GeneratedData b = generate_dataset(c);
    REQUIRE(a.raw.size() == 20);
    for (std::size_t e = 0; e < a.raw.size(); ++e) {
        CHECK(a.raw[e].y == b.raw[e].y);
        CHECK(a.raw[e].u.size() == 120);
        for (double u : a.dataset.experiments[e].u) CHECK(std::abs(u) <= 1.0 + 1e-12);
        for (double q : a.raw[e].u) {
            CHECK(q >= 11.6 - 1e-12);
            CHECK(q <= 19.6 + 1e-12);
        }
    }
    CHECK(a.dataset.select(Split::Train).size() == 15);
    CHECK(a.dataset.select(Split::Validation).size() == 4);
    CHECK(a.dataset.select(Split::Test).size() == 1);

    PipelineConfig other = c;
    other.seed = 2;
    CHECK(generate_dataset(other).raw[0].u != a.raw[0].u);
}

TEST_CASE("noise-free data has training outputs inside [-1, 1]") {
    PipelineConfig c = small_config();
    c.noise_std = 0.0;
    const GeneratedData g = generate_dataset(c);
    double lo = 1.0, hi = -1.0;
    for (const Experiment* e : g.dataset.select(Split::Train))
        for (double y : e->y) {
            lo = std::min(lo, y);
            hi = std::max(hi, y);
        }
    CHECK(lo == doctest::Approx(-1.0));
    CHECK(hi == doctest::Approx(1.0));
}

TEST_CASE("dataset files round trip") {
    const PipelineConfig c = small_config();
    const GeneratedData g = generate_dataset(c);
    const fs::path dir = scratch("data");
    write_dataset(dir, g, c);
    int csvs = 0;
    for (const auto& e : fs::directory_iterator(dir)) csvs += e.path().extension() == ".csv";
    CHECK(csvs == 20);
    const Dataset back = load_dataset(dir / "manifest.json");
    CHECK(back.scalers == g.dataset.scalers);
    REQUIRE(back.experiments.size() == g.dataset.experiments.size());
    for (std::size_t e = 0; e < back.experiments.size(); ++e) {
        CHECK(back.experiments[e].u == g.dataset.experiments[e].u);
        CHECK(back.experiments[e].y == g.dataset.experiments[e].y);
        CHECK(back.experiments[e].split == g.dataset.experiments[e].split);
    }
}

TEST_CASE("metrics of a perfect trace") {
    const Metrics m = compute_metrics(perfect_trace(), 100.0);
    REQUIRE(m.setpoints.size() == 2);
    CHECK(m.setpoints[0].ref == 7.0);
    CHECK(m.setpoints[0].t_start == 100.0);
    CHECK(m.setpoints[0].t_end == 340.0);
    CHECK(m.setpoints[1].ref == 8.0);
    for (const SetpointMetric& s : m.setpoints) {
        CHECK(s.ss_error_mean == 0.0);
        CHECK(s.ss_error_max == 0.0);
        CHECK(s.j_star_end < s.j_star_start);
    }
    CHECK(m.max_abs_u == doctest::Approx(0.3));
    REQUIRE(m.observer_decay_time.has_value());
    CHECK(*m.observer_decay_time == 50.0);
}

TEST_CASE("trace CSV round trip") {
    const ClosedLoopTrace tr = perfect_trace();
    const ClosedLoopTrace back = trace_from_csv(parse_csv(to_csv(trace_to_csv(tr))));
    REQUIRE(back.records.size() == tr.records.size());
    for (std::size_t k = 0; k < tr.records.size(); ++k) {
        const TraceRecord &a = tr.records[k], &b = back.records[k];
        CHECK(b.t == a.t);
        CHECK(b.segment == a.segment);
        CHECK(b.y_plant == a.y_plant);
        CHECK(b.u == a.u);
        CHECK((std::isnan(a.ref) ? std::isnan(b.ref) : b.ref == a.ref));
        CHECK(b.chi_hat.x == a.chi_hat.x);
        CHECK(b.chi_hat.xi == a.chi_hat.xi);
    }
}

TEST_CASE("commands report missing inputs and certification failures") {
    const fs::path dir = scratch("cmd");
    CommandContext ctx;
    ctx.cfg = small_config();
    ctx.out = dir;
    std::ostringstream log;
    ctx.log = &log;
    CHECK_THROWS_AS(cmd_certify(ctx), IoError);
    CHECK_THROWS_AS(cmd_train(ctx), IoError);

    CHECK(cmd_generate_data(ctx) == kExitOk);
    CHECK(fs::exists(dir / "data" / "manifest.json"));
    CHECK(fs::exists(dir / "generate-data.manifest.json"));

    ctx.inputs["model"] = LSTMCTL_TEST_DATA "/ph_model.json";
    CHECK(cmd_certify(ctx) == kExitOk);
    const nlohmann::json cert = read_json(dir / "certificate.json");
    CHECK(cert.is_object());
    const nlohmann::json man = read_json(dir / "certify.manifest.json");
    CHECK(man.dump().find(file_hash(LSTMCTL_TEST_DATA "/ph_model.json")) != std::string::npos);

    // An inflated recurrent cell matrix breaks the certificate.
    ModelBundle mb = load_model(LSTMCTL_TEST_DATA "/ph_model.json");
    for (double& v : mb.params.cell.recurrent.data()) v *= 10.0;
    save_model(dir / "bad.json", mb);
    ctx.inputs["model"] = dir / "bad.json";
    CHECK(cmd_certify(ctx) == kExitCertification);
    CHECK(cmd_simulate_closed_loop(ctx) == kExitCertification);
}

TEST_CASE("infeasible setpoint is skipped with exit code 3") {
    const fs::path dir = scratch("infeasible");
    CommandContext ctx;
    ctx.cfg = small_config();
    ctx.cfg.closed_loop.start_time = 50.0;
    ctx.cfg.closed_loop.hold = 100.0;
    ctx.cfg.closed_loop.setpoints = {7.0, 13.5};
    ctx.out = dir;
    ctx.inputs["model"] = LSTMCTL_TEST_DATA "/ph_model.json";
    CHECK(cmd_simulate_closed_loop(ctx) == kExitInfeasible);
    const ClosedLoopTrace tr = trace_from_csv(read_csv(dir / "closed_loop.csv"));
    REQUIRE(!tr.records.empty());
    // The second segment keeps driving toward the first setpoint.
    CHECK(std::abs(tr.records.back().y_plant - 7.0) < 0.5);
    const nlohmann::json s = read_json(dir / "closed_loop_summary.json");
    CHECK(s.at("infeasible_setpoints").size() == 1);
}

TEST_CASE("report FIT matches a direct recomputation") {
    const fs::path dir = scratch("report");
    CommandContext ctx;
    ctx.cfg = small_config();
    ctx.cfg.closed_loop.start_time = 50.0;
    ctx.cfg.closed_loop.hold = 100.0;
    ctx.cfg.closed_loop.setpoints = {7.0};
    ctx.out = dir;
    REQUIRE(cmd_generate_data(ctx) == kExitOk);
    ctx.inputs["model"] = LSTMCTL_TEST_DATA "/ph_model.json";
    REQUIRE(cmd_simulate_closed_loop(ctx) == kExitOk);
    REQUIRE(cmd_report(ctx) == kExitOk);
    const Metrics m = Metrics::from_json(read_json(dir / "metrics.json"));
    REQUIRE(m.test_fit.has_value());
    const ModelBundle mb = load_model(LSTMCTL_TEST_DATA "/ph_model.json");
    const Dataset ds = load_dataset(dir / "data" / "manifest.json");
    CHECK(*m.test_fit == experiment_fit(mb.params, *ds.select(Split::Test).front(), ctx.cfg.train.washout));
    for (const char* f : {"closed_loop_ph.svg", "closed_loop_u.svg", "closed_loop_observer.svg", "closed_loop_cost.svg"})
        CHECK(fs::exists(dir / f));
}

}
