#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lstmctl/csv.hpp"
#include "lstmctl/dataset.hpp"
#include "lstmctl/mpc.hpp"
#include "lstmctl/observer.hpp"
#include "lstmctl/plant.hpp"
#include "lstmctl/scenario.hpp"
#include "lstmctl/serialization.hpp"
#include "lstmctl/trainer.hpp"

namespace lstmctl {

struct ExperimentCounts {
    int train = 15;
    int val = 4;
    int test = 1;
};

struct ClosedLoopSettings {
    int horizon = 10;
    double q_scale = 1.0;  // Q = q_scale * I
    double r = 5.0;        // R = r * I
    double start_time = 500.0;  // s, controller engaged
    double hold = 1500.0;       // s per setpoint
    std::vector<double> setpoints{7.0, 8.0, 6.5, 6.0, 7.5};  // pH
    double pre_q3 = kNominalQ3;  // mL/s applied before start_time
    double noise_std = 0.0;      // measurement noise, normalized units
    double steady_window = 300.0;  // s at the end of each segment used for steady-state metrics
    OcpOptions ocp;
};

struct PipelineConfig {
    std::uint64_t seed = 1;
    double Ts = 10.0;
    int samples = 2000;
    ExperimentCounts counts;
    double noise_std = 0.02;
    MprsConfig mprs;
    ActuatorRange actuator;
    PlantParams plant;
    TrainConfig train;
    int certify_retries = 6;
    SynthesisOptions observer;
    ClosedLoopSettings closed_loop;
    ScenarioConfig scenario;
    unsigned threads = 1;

    void validate() const;
    /// Missing keys keep their defaults. The master seed also seeds training,
    /// synthesis and scenarios unless those sections set their own.
    static PipelineConfig from_json(const nlohmann::json& j);
    [[nodiscard]] nlohmann::json to_json() const;
};

// ---------------------------------------------------------------------------
// Data

struct GeneratedData {
    std::vector<RawExperiment> raw;  // recorded, physical units
    Dataset dataset;                 // recorded, normalized
    std::vector<std::uint64_t> seeds;
};

/// MPRS experiments on the pH plant. u is scaled by the actuator range and y
/// by the clean training-split min/max; noise is added to the normalized
/// recordings.
GeneratedData generate_dataset(const PipelineConfig& cfg);

/// Writes exp_XX.csv files (k,u_raw,y_raw,u_norm,y_norm) and manifest.json.
void write_dataset(const std::filesystem::path& dir, const GeneratedData& data, const PipelineConfig& cfg);

/// Reads the normalized channels and scalers back from a manifest.
Dataset load_dataset(const std::filesystem::path& manifest);

/// FIT of the free response from chi(0) = 0, samples k >= washout.
double experiment_fit(const LstmParams& p, const Experiment& e, int washout);

// ---------------------------------------------------------------------------
// Closed loop

struct TraceRecord {
    double t = 0.0;
    double ref = 0.0;          // pH, NaN before the controller starts
    double y_plant = 0.0;      // pH
    double y_model_est = 0.0;  // pH, C xi_hat + b_y
    double u = 0.0;            // normalized applied input
    double u_raw = 0.0;        // mL/s
    bool u_saturated = false;
    double J_star = 0.0;       // NaN when the controller is off
    double obs_error_norm = 0.0;  // |y_meas - y_hat| in normalized units
    int segment = -1;
    LstmState chi_hat;
};

struct ClosedLoopTrace {
    std::vector<TraceRecord> records;
    std::vector<std::string> warnings;
    std::vector<double> infeasible_setpoints;
};

/// Plant at pre_q3 until start_time with the observer running, then MPC on
/// the observer estimate with the setpoint schedule. An infeasible setpoint is
/// reported and the previous equilibrium is kept.
ClosedLoopTrace run_closed_loop(const ModelBundle& model, const ObserverGains& gains, const PipelineConfig& cfg);

CsvTable trace_to_csv(const ClosedLoopTrace& trace);
ClosedLoopTrace trace_from_csv(const CsvTable& t);

// ---------------------------------------------------------------------------
// Metrics

struct SetpointMetric {
    double ref = 0.0;
    double t_start = 0.0;
    double t_end = 0.0;
    double ss_error_mean = 0.0;  // mean |pH - ref| over the steady window
    double ss_error_max = 0.0;
    double j_star_start = 0.0;   // J* right after observer burn-in
    double j_star_end = 0.0;     // mean J* over the steady window
};

struct Metrics {
    std::optional<double> test_fit;
    std::vector<SetpointMetric> setpoints;
    double max_abs_u = 0.0;
    std::optional<double> observer_decay_time;  // s
    nlohmann::json certificate = nlohmann::json::object();

    [[nodiscard]] nlohmann::json to_json() const;
    static Metrics from_json(const nlohmann::json& j);
};

/// observer_threshold: normalized output error below which the observer is
/// considered converged for the rest of the trace.
Metrics compute_metrics(const ClosedLoopTrace& trace, double steady_window, double observer_threshold = 0.05);

// ---------------------------------------------------------------------------
// Commands. Each writes new files under `out` and a <command>.manifest.json
// recording the input file hashes. Return value is the process exit code.

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitCertification = 2, kExitInfeasible = 3, kExitIo = 4 };

struct CommandContext {
    PipelineConfig cfg;
    std::filesystem::path out = ".";
    std::map<std::string, std::filesystem::path> inputs;  // "dataset", "model", "trace"
    std::ostream* log = nullptr;
};

int cmd_generate_data(const CommandContext& ctx);
int cmd_train(const CommandContext& ctx);
int cmd_certify(const CommandContext& ctx);
int cmd_synth_observer(const CommandContext& ctx);
int cmd_simulate_closed_loop(const CommandContext& ctx);
int cmd_scenario_bound(const CommandContext& ctx);
int cmd_report(const CommandContext& ctx);

}  // namespace lstmctl
