// lstmctl: command line front end for the identification / certification /
// control pipeline. Every subcommand reads a pipeline config (JSON, optional)
// and writes new files under --out.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "lstmctl/errors.hpp"
#include "lstmctl/pipeline.hpp"

namespace {

using namespace lstmctl;

struct Options {
    std::string config;
    std::string out = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    unsigned threads = 1;
    std::string dataset, model, trace;
    bool quiet = false;
};

CommandContext make_context(const Options& o) {
    nlohmann::json j = nlohmann::json::object();
    if (!o.config.empty()) j = read_json(o.config);
    if (o.seed_set) {
        j["seed"] = o.seed;
        // an explicit master seed re-derives the per-stage seeds
        for (const char* sec : {"train", "observer", "scenario"})
            if (j.contains(sec) && j[sec].is_object()) j[sec].erase("seed");
    }
    CommandContext ctx;
    ctx.cfg = PipelineConfig::from_json(j);
    ctx.cfg.threads = o.threads;
    ctx.out = o.out;
    if (!o.dataset.empty()) ctx.inputs["dataset"] = o.dataset;
    if (!o.model.empty()) ctx.inputs["model"] = o.model;
    if (!o.trace.empty()) ctx.inputs["trace"] = o.trace;
    ctx.log = o.quiet ? nullptr : &std::cerr;
    return ctx;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stable LSTM identification, certification and MPC for the pH benchmark"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "pipeline config JSON")->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "output directory");
        sub->add_option_function<std::uint64_t>(
            "--seed", [&](const std::uint64_t& s) { o.seed = s, o.seed_set = true; }, "master seed");
        sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("-q,--quiet", o.quiet, "no progress output");
    };

    std::map<std::string, int (*)(const CommandContext&)> commands;
    auto add = [&](const char* name, const char* help, int (*fn)(const CommandContext&)) {
        CLI::App* sub = app.add_subcommand(name, help);
        common(sub);
        commands[name] = fn;
        return sub;
    };

    add("generate-data", "simulate MPRS identification experiments on the pH plant", cmd_generate_data);
    add("train", "train a delta-ISS LSTM on a dataset", cmd_train)
        ->add_option("--dataset", o.dataset, "dataset manifest.json");
    add("certify", "evaluate the ISS and delta-ISS certificates of a model", cmd_certify)
        ->add_option("--model", o.model, "model JSON");
    add("synth-observer", "tune the observer gains of a certified model", cmd_synth_observer)
        ->add_option("--model", o.model, "model JSON");
    add("simulate-closed-loop", "run the MPC against the plant simulator", cmd_simulate_closed_loop)
        ->add_option("--model", o.model, "model JSON (with observer gains)");
    add("scenario-bound", "estimate the model-plant mismatch bound", cmd_scenario_bound)
        ->add_option("--model", o.model, "model JSON");
    CLI::App* rep = add("report", "metrics and plots from a closed-loop trace", cmd_report);
    rep->add_option("--trace", o.trace, "closed-loop CSV");
    rep->add_option("--model", o.model, "model JSON");
    rep->add_option("--dataset", o.dataset, "dataset manifest.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        for (const auto& [name, fn] : commands)
            if (app.got_subcommand(name)) return fn(make_context(o));
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const CertificationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCertification;
    } catch (const InfeasibleReference& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
