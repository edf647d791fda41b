#include "lstmctl/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

#include "lstmctl/errors.hpp"
#include "lstmctl/svg.hpp"

namespace lstmctl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kDatasetFormat = "lstm-ctrl-dataset/v1";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) { return scenario_seed(master, 0x10000 + tag); }

template <class T>
void opt(const json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

std::ostream& logger(const CommandContext& ctx) {
    struct NullBuf : std::streambuf {
        int overflow(int c) override { return c; }
    };
    static NullBuf nb;
    static std::ostream null_stream(&nb);
    return ctx.log != nullptr ? *ctx.log : null_stream;
}

json manifest(const std::string& command, const CommandContext& ctx, const std::vector<fs::path>& inputs,
              const std::vector<fs::path>& outputs) {
    json in = json::object(), out = json::object();
    for (const fs::path& p : inputs) in[p.string()] = file_hash(p);
    for (const fs::path& p : outputs) out[p.string()] = file_hash(p);
    return {{"command", command}, {"config", ctx.cfg.to_json()}, {"inputs", in}, {"outputs", out}};
}

void write_manifest(const std::string& command, const CommandContext& ctx, const std::vector<fs::path>& inputs,
                    const std::vector<fs::path>& outputs) {
    write_json(ctx.out / (command + ".manifest.json"), manifest(command, ctx, inputs, outputs));
}

fs::path input_path(const CommandContext& ctx, const std::string& key, const fs::path& fallback) {
    auto it = ctx.inputs.find(key);
    const fs::path p = it != ctx.inputs.end() ? it->second : fallback;
    if (!fs::exists(p)) throw IoError(key + " input not found: " + p.string());
    return p;
}

}  // namespace

// ---------------------------------------------------------------------------

void PipelineConfig::validate() const {
    if (!(Ts > 0.0)) throw InvalidArgument("config: Ts must be positive");
    if (samples < 2) throw InvalidArgument("config: samples must be at least 2");
    if (counts.train < 1 || counts.val < 1 || counts.test < 0)
        throw InvalidArgument("config: need at least one training and one validation experiment");
    if (!(noise_std >= 0.0)) throw InvalidArgument("config: noise_std must be nonnegative");
    if (!(actuator.q3_max > actuator.q3_min) || actuator.q3_min < 0.0)
        throw InvalidArgument("config: invalid actuator range");
    if (mprs.level_lo < -1.0 || mprs.level_hi > 1.0)
        throw InvalidArgument("config: MPRS levels must stay inside the normalized box [-1, 1]");
    plant.validate();
    train.validate();
    if (closed_loop.horizon < 1) throw InvalidArgument("config: horizon must be positive");
    if (!(closed_loop.hold > 0.0) || !(closed_loop.start_time >= 0.0))
        throw InvalidArgument("config: setpoint schedule times must be positive and increasing");
    if (closed_loop.setpoints.empty()) throw InvalidArgument("config: empty setpoint schedule");
}

PipelineConfig PipelineConfig::from_json(const json& j) {
    if (!j.is_object()) throw InvalidArgument("config: expected a JSON object");
    PipelineConfig c;
    opt(j, "seed", c.seed);
    opt(j, "Ts", c.Ts);
    opt(j, "samples", c.samples);
    opt(j, "noise_std", c.noise_std);
    opt(j, "threads", c.threads);
    opt(j, "certify_retries", c.certify_retries);
    if (j.contains("experiments")) {
        const json& e = j.at("experiments");
        opt(e, "train", c.counts.train);
        opt(e, "val", c.counts.val);
        opt(e, "test", c.counts.test);
    }
    if (j.contains("mprs")) {
        const json& m = j.at("mprs");
        opt(m, "level_lo", c.mprs.level_lo);
        opt(m, "level_hi", c.mprs.level_hi);
        opt(m, "hold_min", c.mprs.hold_min);
        opt(m, "hold_max", c.mprs.hold_max);
    }
    if (j.contains("actuator")) {
        opt(j.at("actuator"), "q3_min", c.actuator.q3_min);
        opt(j.at("actuator"), "q3_max", c.actuator.q3_max);
    }
    if (j.contains("plant")) {
        const json& p = j.at("plant");
        opt(p, "z", c.plant.z);
        opt(p, "Cv4", c.plant.Cv4);
        opt(p, "n", c.plant.n_exp);
        opt(p, "pK1", c.plant.pK1);
        opt(p, "pK2", c.plant.pK2);
        opt(p, "Wa1", c.plant.Wa1);
        opt(p, "Wb1", c.plant.Wb1);
        opt(p, "Wa2", c.plant.Wa2);
        opt(p, "Wb2", c.plant.Wb2);
        opt(p, "Wa3", c.plant.Wa3);
        opt(p, "Wb3", c.plant.Wb3);
        opt(p, "A1", c.plant.A1);
        opt(p, "q1", c.plant.q1);
        opt(p, "q2", c.plant.q2);
    }
    c.train.seed = derive_seed(c.seed, 1);
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"), c.train);
    c.observer.seed = derive_seed(c.seed, 2);
    if (j.contains("observer")) {
        const json& o = j.at("observer");
        opt(o, "seed", c.observer.seed);
        opt(o, "random_starts", c.observer.random_starts);
        opt(o, "start_scale", c.observer.start_scale);
        opt(o, "max_evaluations_per_start", c.observer.max_evaluations_per_start);
        if (o.contains("alpha_hat")) {
            const std::string m = o.at("alpha_hat").get<std::string>();
            if (m == "as_printed") c.observer.mode = AlphaHatMode::AsPrinted;
            else if (m == "fully_hatted") c.observer.mode = AlphaHatMode::FullyHatted;
            else throw InvalidArgument("config: unknown observer.alpha_hat '" + m + "'");
        }
    }
    if (j.contains("closed_loop")) {
        const json& m = j.at("closed_loop");
        opt(m, "horizon", c.closed_loop.horizon);
        opt(m, "q_scale", c.closed_loop.q_scale);
        opt(m, "r", c.closed_loop.r);
        opt(m, "start_time", c.closed_loop.start_time);
        opt(m, "hold", c.closed_loop.hold);
        opt(m, "setpoints", c.closed_loop.setpoints);
        opt(m, "pre_q3", c.closed_loop.pre_q3);
        opt(m, "noise_std", c.closed_loop.noise_std);
        opt(m, "steady_window", c.closed_loop.steady_window);
        opt(m, "max_iterations", c.closed_loop.ocp.max_iterations);
        opt(m, "tolerance", c.closed_loop.ocp.tolerance);
    }
    c.scenario.seed = derive_seed(c.seed, 3);
    if (j.contains("scenario")) {
        const json& s = j.at("scenario");
        opt(s, "epsilon", c.scenario.epsilon);
        opt(s, "beta", c.scenario.beta);
        opt(s, "d", c.scenario.d);
        opt(s, "tau", c.scenario.tau);
        opt(s, "K", c.scenario.K);
        opt(s, "seed", c.scenario.seed);
        opt(s, "plant_spread", c.scenario.plant_spread);
        if (s.contains("mprs")) {
            opt(s.at("mprs"), "level_lo", c.scenario.inputs.level_lo);
            opt(s.at("mprs"), "level_hi", c.scenario.inputs.level_hi);
            opt(s.at("mprs"), "hold_min", c.scenario.inputs.hold_min);
            opt(s.at("mprs"), "hold_max", c.scenario.inputs.hold_max);
        }
    }
    c.validate();
    return c;
}

json PipelineConfig::to_json() const {
    const PlantParams& p = plant;
    return {{"seed", seed},
            {"Ts", Ts},
            {"samples", samples},
            {"noise_std", noise_std},
            {"threads", threads},
            {"certify_retries", certify_retries},
            {"experiments", {{"train", counts.train}, {"val", counts.val}, {"test", counts.test}}},
            {"mprs",
             {{"level_lo", mprs.level_lo},
              {"level_hi", mprs.level_hi},
              {"hold_min", mprs.hold_min},
              {"hold_max", mprs.hold_max}}},
            {"actuator", {{"q3_min", actuator.q3_min}, {"q3_max", actuator.q3_max}}},
            {"plant",
             {{"z", p.z}, {"Cv4", p.Cv4}, {"n", p.n_exp}, {"pK1", p.pK1}, {"pK2", p.pK2}, {"Wa1", p.Wa1},
              {"Wb1", p.Wb1}, {"Wa2", p.Wa2}, {"Wb2", p.Wb2}, {"Wa3", p.Wa3}, {"Wb3", p.Wb3}, {"A1", p.A1},
              {"q1", p.q1}, {"q2", p.q2}}},
            {"train", lstmctl::to_json(train)},
            {"observer",
             {{"seed", observer.seed},
              {"random_starts", observer.random_starts},
              {"start_scale", observer.start_scale},
              {"max_evaluations_per_start", observer.max_evaluations_per_start},
              {"alpha_hat", observer.mode == AlphaHatMode::AsPrinted ? "as_printed" : "fully_hatted"}}},
            {"closed_loop",
             {{"horizon", closed_loop.horizon},
              {"q_scale", closed_loop.q_scale},
              {"r", closed_loop.r},
              {"start_time", closed_loop.start_time},
              {"hold", closed_loop.hold},
              {"setpoints", closed_loop.setpoints},
              {"pre_q3", closed_loop.pre_q3},
              {"noise_std", closed_loop.noise_std},
              {"steady_window", closed_loop.steady_window},
              {"max_iterations", closed_loop.ocp.max_iterations},
              {"tolerance", closed_loop.ocp.tolerance}}},
            {"scenario",
             {{"epsilon", scenario.epsilon},
              {"beta", scenario.beta},
              {"d", scenario.d},
              {"tau", scenario.tau},
              {"K", scenario.K},
              {"seed", scenario.seed},
              {"plant_spread", scenario.plant_spread},
              {"mprs",
               {{"level_lo", scenario.inputs.level_lo},
                {"level_hi", scenario.inputs.level_hi},
                {"hold_min", scenario.inputs.hold_min},
                {"hold_max", scenario.inputs.hold_max}}}}}};
}

// ---------------------------------------------------------------------------

GeneratedData generate_dataset(const PipelineConfig& cfg) {
    cfg.validate();
    const int total = cfg.counts.train + cfg.counts.val + cfg.counts.test;
    const auto n = static_cast<std::size_t>(cfg.samples);
    const ChannelScaler u_scaler = cfg.actuator.scaler();

    GeneratedData g;
    std::vector<Vector> q3(static_cast<std::size_t>(total));
    Vector y_train_clean;
    for (int e = 0; e < total; ++e) {
        const std::uint64_t seed = derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(e));
        g.seeds.push_back(seed);
        const Vector u = mprs_input(cfg.mprs, n, seed);
        Vector& q = q3[static_cast<std::size_t>(e)];
        q.resize(n);
        for (std::size_t k = 0; k < n; ++k) q[k] = u_scaler.denormalize(u[k]);
        if (e < cfg.counts.train) {
            const Vector y = plant_response(cfg.plant, q, cfg.Ts);
            y_train_clean.insert(y_train_clean.end(), y.begin(), y.end());
        }
    }
    g.dataset.scalers = {u_scaler, ChannelScaler::fit(y_train_clean)};

    for (int e = 0; e < total; ++e) {
        const Split split = e < cfg.counts.train                     ? Split::Train
                            : e < cfg.counts.train + cfg.counts.val ? Split::Validation
                                                                    : Split::Test;
        const ExperimentRecord rec = run_experiment(cfg.plant, q3[static_cast<std::size_t>(e)], cfg.Ts,
                                                    NoiseConfig{cfg.noise_std, false},
                                                    g.seeds[static_cast<std::size_t>(e)] ^ 0x5a5a5a5aULL,
                                                    g.dataset.scalers);
        g.raw.push_back({rec.u_raw, rec.y_raw, split});
        g.dataset.experiments.push_back({rec.u_norm, rec.y_norm, split});
    }
    return g;
}

void write_dataset(const fs::path& dir, const GeneratedData& data, const PipelineConfig& cfg) {
    json exps = json::array();
    for (std::size_t e = 0; e < data.raw.size(); ++e) {
        char name[32];
        std::snprintf(name, sizeof name, "exp_%02zu.csv", e);
        CsvTable t;
        t.header = {"k", "u_raw", "y_raw", "u_norm", "y_norm"};
        const RawExperiment& r = data.raw[e];
        const Experiment& x = data.dataset.experiments[e];
        for (std::size_t k = 0; k < r.u.size(); ++k)
            t.rows.push_back({static_cast<double>(k), r.u[k], r.y[k], x.u[k], x.y[k]});
        write_csv(dir / name, t);
        exps.push_back({{"file", name}, {"split", to_string(r.split)}, {"seed", data.seeds[e]},
                        {"hash", file_hash(dir / name)}});
    }
    const Scalers& s = data.dataset.scalers;
    json m = {{"format", kDatasetFormat},
              {"Ts", cfg.Ts},
              {"samples", cfg.samples},
              {"noise_std", cfg.noise_std},
              {"scalers", {{"u", {{"lo", s.u.lo}, {"hi", s.u.hi}}}, {"y", {{"lo", s.y.lo}, {"hi", s.y.hi}}}}},
              {"experiments", exps},
              {"config", cfg.to_json()}};
    write_json(dir / "manifest.json", m);
}

Dataset load_dataset(const fs::path& manifest_path) {
    const json m = read_json(manifest_path);
    if (m.value("format", std::string()) != kDatasetFormat)
        throw IoError(manifest_path.string() + ": not a dataset manifest");
    Dataset ds;
    const json& s = m.at("scalers");
    ds.scalers.u = {s.at("u").at("lo").get<double>(), s.at("u").at("hi").get<double>()};
    ds.scalers.y = {s.at("y").at("lo").get<double>(), s.at("y").at("hi").get<double>()};
    const fs::path dir = manifest_path.parent_path();
    for (const json& e : m.at("experiments")) {
        const fs::path file = dir / e.at("file").get<std::string>();
        const CsvTable t = read_csv(file);
        ds.experiments.push_back({t.col("u_norm"), t.col("y_norm"), split_from_string(e.at("split").get<std::string>())});
    }
    return ds;
}

double experiment_fit(const LstmParams& p, const Experiment& e, int washout) {
    const Vector y = predict_outputs(p, LstmState::zeros(p.n_x), e.u);
    const auto w = static_cast<std::ptrdiff_t>(std::max(washout, 0));
    return fit_metric(std::span<const double>(e.y).subspan(static_cast<std::size_t>(w)),
                      std::span<const double>(y).subspan(static_cast<std::size_t>(w)));
}

// ---------------------------------------------------------------------------

ClosedLoopTrace run_closed_loop(const ModelBundle& model, const ObserverGains& gains, const PipelineConfig& cfg) {
    const LstmParams& p = model.params;
    const ClosedLoopSettings& cl = cfg.closed_loop;
    const Scalers& sc = model.scalers;
    const InputBox box = model.box;
    if (p.n_u != 1 || p.n_y != 1) throw DimensionError("params", "closed loop expects a SISO model");

    const CertificatePair cert = certify(p, box);
    const Gain2x2 A_delta = cert.delta_iss.matrix;

    const double t_end = cl.start_time + cl.hold * static_cast<double>(cl.setpoints.size());
    const auto steps = static_cast<std::size_t>(std::llround(t_end / cfg.Ts));

    ClosedLoopTrace trace;
    PlantState plant = PlantState::nominal();
    LstmState est = LstmState::zeros(p.n_x);
    std::mt19937_64 rng(derive_seed(cfg.seed, 4));
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::optional<MpcConfig> mpc;
    std::optional<OcpSolution> prev;
    int active_segment = -1;

    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * cfg.Ts;
        TraceRecord rec;
        rec.t = t;
        rec.y_plant = ph_output(cfg.plant, plant);
        double y_meas = sc.y.normalize(rec.y_plant);
        if (cl.noise_std > 0.0) y_meas += cl.noise_std * gauss(rng);
        const double y_hat = output(p, est)[0];
        rec.y_model_est = sc.y.denormalize(y_hat);
        rec.obs_error_norm = std::abs(y_meas - y_hat);
        rec.chi_hat = est;

        double u = sc.u.normalize(cl.pre_q3);
        rec.J_star = kNaN;
        rec.ref = kNaN;
        if (t + 1e-9 >= cl.start_time) {
            const int seg = std::min(static_cast<int>((t + 1e-9 - cl.start_time) / cl.hold),
                                     static_cast<int>(cl.setpoints.size()) - 1);
            rec.segment = seg;
            rec.ref = cl.setpoints[static_cast<std::size_t>(seg)];
            if (seg != active_segment) {
                active_segment = seg;
                try {
                    EquilibriumTriple eq = find_equilibrium(p, box, sc.y.normalize(rec.ref));
                    mpc = make_mpc_config(p, A_delta, cl.horizon, cl.q_scale, cl.r, box, std::move(eq));
                    prev.reset();
                } catch (const InfeasibleReference& e) {
                    trace.infeasible_setpoints.push_back(rec.ref);
                    trace.warnings.push_back("setpoint pH " + std::to_string(rec.ref) + " at t = " +
                                             std::to_string(t) + " s skipped: " + e.what());
                }
            }
            if (mpc) {
                const MpcStepResult r = mpc_step(p, *mpc, est, prev ? &*prev : nullptr, cl.ocp);
                u = r.u_applied[0];
                rec.J_star = r.solution.J;
                prev = r.solution;
            }
        }
        u = box.project(u);
        rec.u = u;
        rec.u_saturated = std::abs(u) >= box.u_max;
        rec.u_raw = sc.u.denormalize(u);
        trace.records.push_back(std::move(rec));

        const double uv[1] = {u};
        const double yv[1] = {y_meas};
        est = observer_step(p, gains, est, uv, yv);
        plant = integrate_step(cfg.plant, plant, trace.records.back().u_raw, cfg.plant.q2, cfg.Ts);
    }
    return trace;
}

CsvTable trace_to_csv(const ClosedLoopTrace& trace) {
    CsvTable t;
    t.header = {"t", "ref", "y_plant", "y_model_est", "u", "J_star", "obs_error_norm", "u_raw", "u_saturated",
                "segment"};
    const std::size_t n_x = trace.records.empty() ? 0 : trace.records.front().chi_hat.x.size();
    for (std::size_t j = 0; j < n_x; ++j) t.header.push_back("x_hat_" + std::to_string(j));
    for (std::size_t j = 0; j < n_x; ++j) t.header.push_back("xi_hat_" + std::to_string(j));
    for (const TraceRecord& r : trace.records) {
        Vector row{r.t,     r.ref,   r.y_plant, r.y_model_est, r.u, r.J_star, r.obs_error_norm,
                   r.u_raw, r.u_saturated ? 1.0 : 0.0, static_cast<double>(r.segment)};
        row.insert(row.end(), r.chi_hat.x.begin(), r.chi_hat.x.end());
        row.insert(row.end(), r.chi_hat.xi.begin(), r.chi_hat.xi.end());
        t.rows.push_back(std::move(row));
    }
    return t;
}

ClosedLoopTrace trace_from_csv(const CsvTable& t) {
    ClosedLoopTrace trace;
    const std::size_t it = t.column("t"), iref = t.column("ref"), iy = t.column("y_plant"),
                      iym = t.column("y_model_est"), iu = t.column("u"), ij = t.column("J_star"),
                      ie = t.column("obs_error_norm");
    auto has = [&](const std::string& n) { return std::find(t.header.begin(), t.header.end(), n) != t.header.end(); };
    std::size_t n_x = 0;
    while (has("x_hat_" + std::to_string(n_x))) ++n_x;
    for (const Vector& row : t.rows) {
        TraceRecord r;
        r.t = row[it];
        r.ref = row[iref];
        r.y_plant = row[iy];
        r.y_model_est = row[iym];
        r.u = row[iu];
        r.J_star = row[ij];
        r.obs_error_norm = row[ie];
        r.u_raw = has("u_raw") ? row[t.column("u_raw")] : kNaN;
        r.u_saturated = has("u_saturated") && row[t.column("u_saturated")] != 0.0;
        r.segment = has("segment") ? static_cast<int>(row[t.column("segment")]) : -1;
        r.chi_hat = LstmState::zeros(n_x);
        for (std::size_t j = 0; j < n_x; ++j) {
            r.chi_hat.x[j] = row[t.column("x_hat_" + std::to_string(j))];
            r.chi_hat.xi[j] = row[t.column("xi_hat_" + std::to_string(j))];
        }
        trace.records.push_back(std::move(r));
    }
    return trace;
}

// ---------------------------------------------------------------------------

json Metrics::to_json() const {
    json sp = json::array();
    for (const SetpointMetric& s : setpoints)
        sp.push_back({{"ref", s.ref},
                      {"t_start", s.t_start},
                      {"t_end", s.t_end},
                      {"ss_error_mean", s.ss_error_mean},
                      {"ss_error_max", s.ss_error_max},
                      {"j_star_start", s.j_star_start},
                      {"j_star_end", s.j_star_end}});
    return {{"test_fit", test_fit ? json(*test_fit) : json(nullptr)},
            {"setpoints", sp},
            {"max_abs_u", max_abs_u},
            {"observer_decay_time", observer_decay_time ? json(*observer_decay_time) : json(nullptr)},
            {"certificate", certificate}};
}

Metrics Metrics::from_json(const json& j) {
    Metrics m;
    if (!j.at("test_fit").is_null()) m.test_fit = j.at("test_fit").get<double>();
    for (const json& s : j.at("setpoints"))
        m.setpoints.push_back({s.at("ref").get<double>(), s.at("t_start").get<double>(), s.at("t_end").get<double>(),
                               s.at("ss_error_mean").get<double>(), s.at("ss_error_max").get<double>(),
                               s.at("j_star_start").get<double>(), s.at("j_star_end").get<double>()});
    m.max_abs_u = j.at("max_abs_u").get<double>();
    if (!j.at("observer_decay_time").is_null()) m.observer_decay_time = j.at("observer_decay_time").get<double>();
    m.certificate = j.value("certificate", json::object());
    return m;
}

Metrics compute_metrics(const ClosedLoopTrace& trace, double steady_window, double observer_threshold) {
    Metrics m;
    const auto& rs = trace.records;
    for (const TraceRecord& r : rs) m.max_abs_u = std::max(m.max_abs_u, std::abs(r.u));

    // Observer convergence: first time after which the output error stays below the threshold.
    std::optional<double> decay;
    for (std::size_t k = rs.size(); k-- > 0;) {
        if (rs[k].obs_error_norm > observer_threshold) break;
        decay = rs[k].t;
    }
    m.observer_decay_time = decay;

    std::size_t k = 0;
    while (k < rs.size()) {
        if (rs[k].segment < 0) {
            ++k;
            continue;
        }
        const std::size_t begin = k;
        while (k < rs.size() && rs[k].segment == rs[begin].segment) ++k;
        const std::size_t end = k;  // exclusive
        SetpointMetric s;
        s.ref = rs[begin].ref;
        s.t_start = rs[begin].t;
        s.t_end = rs[end - 1].t;
        double sum = 0.0, jsum = 0.0;
        std::size_t cnt = 0, jcnt = 0;
        for (std::size_t i = begin; i < end; ++i) {
            if (rs[i].t < s.t_end - steady_window + 1e-9) continue;
            const double err = std::abs(rs[i].y_plant - s.ref);
            sum += err;
            s.ss_error_max = std::max(s.ss_error_max, err);
            ++cnt;
            if (std::isfinite(rs[i].J_star)) {
                jsum += rs[i].J_star;
                ++jcnt;
            }
        }
        s.ss_error_mean = cnt ? sum / static_cast<double>(cnt) : kNaN;
        s.j_star_end = jcnt ? jsum / static_cast<double>(jcnt) : kNaN;
        s.j_star_start = rs[begin].J_star;
        m.setpoints.push_back(s);
    }
    return m;
}

// ---------------------------------------------------------------------------

int cmd_generate_data(const CommandContext& ctx) {
    std::ostream& log = logger(ctx);
    const fs::path dir = ctx.out / "data";
    const GeneratedData g = generate_dataset(ctx.cfg);
    write_dataset(dir, g, ctx.cfg);
    std::vector<fs::path> outs{dir / "manifest.json"};
    for (std::size_t e = 0; e < g.raw.size(); ++e) {
        char name[32];
        std::snprintf(name, sizeof name, "exp_%02zu.csv", e);
        outs.push_back(dir / name);
    }
    write_manifest("generate-data", ctx, {}, outs);
    log << "wrote " << g.raw.size() << " experiments to " << dir.string() << "\n";
    return kExitOk;
}

int cmd_train(const CommandContext& ctx) {
    std::ostream& log = logger(ctx);
    const fs::path ds_path = input_path(ctx, "dataset", ctx.out / "data" / "manifest.json");
    const Dataset ds = load_dataset(ds_path);
    const InputBox box{1.0};

    CsvTable hist;
    hist.header = {"epoch", "train_loss", "val_mse", "r1", "r2"};
    int attempt = 1;
    auto on_epoch = [&](const EpochRecord& r) {
        if (r.epoch == 1 && !hist.rows.empty()) ++attempt;
        hist.rows.push_back({static_cast<double>(r.epoch), r.train_loss, r.val_mse, r.r1, r.r2});
        if (r.epoch % 25 == 0)
            log << "attempt " << attempt << " epoch " << r.epoch << " loss " << r.train_loss << " val_mse "
                << r.val_mse << " r1 " << r.r1 << " r2 " << r.r2 << "\n";
    };
    const CertifiedTrainResult tr = train_certified(ds, ctx.cfg.train, box, ctx.cfg.certify_retries, on_epoch);

    ModelBundle mb;
    mb.params = tr.result.params;
    mb.box = box;
    mb.scalers = ds.scalers;
    std::optional<double> fit;
    for (const Experiment* e : ds.select(Split::Test)) fit = experiment_fit(mb.params, *e, ctx.cfg.train.washout);
    mb.metadata = {{"best_epoch", tr.result.best_epoch},
                   {"attempts", tr.attempts},
                   {"certified", tr.certified},
                   {"diverged", tr.result.diverged},
                   {"train_config", to_json(tr.final_config)},
                   {"dataset_hash", file_hash(ds_path)},
                   {"test_fit", fit ? json(*fit) : json(nullptr)}};

    const fs::path model_path = ctx.out / "model.json";
    const fs::path hist_path = ctx.out / "train_history.csv";
    const fs::path cert_path = ctx.out / "certificate.json";
    save_model(model_path, mb);
    write_csv(hist_path, hist);
    write_json(cert_path, to_json(certify(mb.params, box)));
    write_manifest("train", ctx, {ds_path}, {model_path, hist_path, cert_path});
    if (fit) log << "test FIT " << *fit << " %\n";
    if (!tr.certified) {
        log << "trained model is not delta-ISS certified after " << tr.attempts << " attempts\n";
        return kExitCertification;
    }
    return kExitOk;
}

int cmd_certify(const CommandContext& ctx) {
    std::ostream& log = logger(ctx);
    const fs::path model_path = input_path(ctx, "model", ctx.out / "model.json");
    const ModelBundle mb = load_model(model_path);
    const CertificatePair c = certify(mb.params, mb.box);
    const fs::path out = ctx.out / "certificate.json";
    write_json(out, to_json(c));
    write_manifest("certify", ctx, {model_path}, {out});
    const auto& d = c.delta_iss;
    log << "ISS " << (c.iss.certified() ? "certified" : "NOT certified") << ", rho(A) = " << c.iss.spectral_radius
        << "\n";
    log << "deltaISS " << (d.certified() ? "certified" : "NOT certified") << ", rho(A_delta) = " << d.spectral_radius
        << ", r1 = " << d.residuals[0] << ", r2 = " << d.residuals[1] << "\n";
    return d.certified() ? kExitOk : kExitCertification;
}

int cmd_synth_observer(const CommandContext& ctx) {
    std::ostream& log = logger(ctx);
    const fs::path model_path = input_path(ctx, "model", ctx.out / "model.json");
    ModelBundle mb = load_model(model_path);
    SynthesisResult sr;
    try {
        sr = synthesize_gains(mb.params, mb.box, ctx.cfg.observer);
    } catch (const CertificationError& e) {
        log << e.what() << "\n";
        return kExitCertification;
    }
    mb.observer = sr.gains;
    const fs::path obs_path = ctx.out / "observer.json";
    const fs::path model_out = ctx.out / "model_observer.json";
    write_json(obs_path, {{"gains", gains_to_json(sr.gains)},
                          {"bounds", to_json(sr.bounds)},
                          {"open_loop", to_json(sr.open_loop)},
                          {"incumbent", sr.incumbent},
                          {"seed", sr.seed}});
    save_model(model_out, mb);
    write_manifest("synth-observer", ctx, {model_path}, {obs_path, model_out});
    log << "|A_hat| = " << sr.bounds.norm_A_hat << " (open loop |A_delta| = " << sr.open_loop.norm_A_hat << ")\n";
    return kExitOk;
}

int cmd_simulate_closed_loop(const CommandContext& ctx) {
    std::ostream& log = logger(ctx);
    fs::path fallback = ctx.out / "model_observer.json";
    if (!fs::exists(fallback)) fallback = ctx.out / "model.json";
    const fs::path model_path = input_path(ctx, "model", fallback);
    const ModelBundle mb = load_model(model_path);
    if (!certify(mb.params, mb.box).delta_iss.certified()) {
        log << "model is not delta-ISS certified\n";
        return kExitCertification;
    }
    ObserverGains gains;
    if (mb.observer) {
        gains = *mb.observer;
    } else {
        log << "model carries no observer gains, synthesizing\n";
        gains = synthesize_gains(mb.params, mb.box, ctx.cfg.observer).gains;
    }
    const ClosedLoopTrace trace = run_closed_loop(mb, gains, ctx.cfg);
    const fs::path trace_path = ctx.out / "closed_loop.csv";
    const fs::path summary_path = ctx.out / "closed_loop_summary.json";
    write_csv(trace_path, trace_to_csv(trace));
    write_json(summary_path, {{"warnings", trace.warnings},
                              {"infeasible_setpoints", trace.infeasible_setpoints},
                              {"metrics", compute_metrics(trace, ctx.cfg.closed_loop.steady_window).to_json()}});
    write_manifest("simulate-closed-loop", ctx, {model_path}, {trace_path, summary_path});
    for (const std::string& w : trace.warnings) log << "warning: " << w << "\n";
    return trace.infeasible_setpoints.empty() ? kExitOk : kExitInfeasible;
}

int cmd_scenario_bound(const CommandContext& ctx) {
    std::ostream& log = logger(ctx);
    const fs::path model_path = input_path(ctx, "model", ctx.out / "model.json");
    const ModelBundle mb = load_model(model_path);
    ScenarioConfig sc = ctx.cfg.scenario;
    sc.threads = std::max(1u, ctx.cfg.threads);
    const PhScenarioPlant plant(ctx.cfg.plant, mb.scalers, ctx.cfg.Ts, sc.plant_spread);
    const MismatchBound b = estimate_rho_w(mb.params, plant, sc, mb.box);
    const fs::path json_path = ctx.out / "scenario_bound.json";
    const fs::path csv_path = ctx.out / "scenario_samples.csv";
    CsvTable t;
    t.header = {"i", "seed", "w_inf_norm"};
    for (const ScenarioSample& s : b.samples)
        t.rows.push_back({static_cast<double>(s.index), static_cast<double>(s.seed), s.w_inf_norm});
    write_json(json_path, to_json(b, sc));
    write_csv(csv_path, t);
    write_manifest("scenario-bound", ctx, {model_path}, {json_path, csv_path});
    log << "rho_w* = " << b.rho_w_star << " over K = " << b.K_used << " scenarios\n";
    return kExitOk;
}

int cmd_report(const CommandContext& ctx) {
    std::ostream& log = logger(ctx);
    const fs::path trace_path = input_path(ctx, "trace", ctx.out / "closed_loop.csv");
    const ClosedLoopTrace trace = trace_from_csv(read_csv(trace_path));
    Metrics m = compute_metrics(trace, ctx.cfg.closed_loop.steady_window);
    std::vector<fs::path> inputs{trace_path};

    fs::path model_fallback = ctx.out / "model.json";
    const auto mit = ctx.inputs.find("model");
    const fs::path model_path = mit != ctx.inputs.end() ? mit->second : model_fallback;
    if (fs::exists(model_path)) {
        const ModelBundle mb = load_model(model_path);
        inputs.push_back(model_path);
        m.certificate = to_json(certify(mb.params, mb.box));
        const auto dit = ctx.inputs.find("dataset");
        const fs::path ds_path = dit != ctx.inputs.end() ? dit->second : ctx.out / "data" / "manifest.json";
        if (fs::exists(ds_path)) {
            inputs.push_back(ds_path);
            const Dataset ds = load_dataset(ds_path);
            for (const Experiment* e : ds.select(Split::Test))
                m.test_fit = experiment_fit(mb.params, *e, ctx.cfg.train.washout);
        }
    }

    const fs::path metrics_path = ctx.out / "metrics.json";
    write_json(metrics_path, m.to_json());
    std::vector<fs::path> outs{metrics_path};

    Vector t, ref, y, ym, u, obs, js;
    for (const TraceRecord& r : trace.records) {
        t.push_back(r.t);
        ref.push_back(r.ref);
        y.push_back(r.y_plant);
        ym.push_back(r.y_model_est);
        u.push_back(r.u);
        obs.push_back(r.obs_error_norm);
        js.push_back(r.J_star);
    }
    const std::pair<const char*, std::string> plots[] = {
        {"closed_loop_ph.svg",
         svg_line_plot("Closed-loop pH", t,
                       {{"reference", ref, "#d62728", true}, {"plant", y, "#1f77b4"}, {"model estimate", ym, "#2ca02c"}},
                       "t [s]", "pH")},
        {"closed_loop_u.svg", svg_line_plot("Applied input", t, {{"u (normalized)", u, "#9467bd", true}}, "t [s]", "u")},
        {"closed_loop_observer.svg",
         svg_line_plot("Observer output error", t, {{"|y - y_hat|", obs, "#ff7f0e"}}, "t [s]", "normalized")},
        {"closed_loop_cost.svg", svg_line_plot("Optimal cost", t, {{"J*", js, "#8c564b"}}, "t [s]", "J*")},
    };
    for (const auto& [name, svg] : plots) {
        write_file_atomic(ctx.out / name, svg);
        outs.push_back(ctx.out / name);
    }
    write_manifest("report", ctx, inputs, outs);
    if (m.test_fit) log << "test FIT " << *m.test_fit << " %\n";
    for (const SetpointMetric& s : m.setpoints)
        log << "setpoint " << s.ref << ": steady-state |e| mean " << s.ss_error_mean << ", max " << s.ss_error_max
            << "\n";
    return kExitOk;
}

}  // namespace lstmctl
