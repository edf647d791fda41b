#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "lstmctl/lstm.hpp"
#include "lstmctl/plant.hpp"
#include "lstmctl/scaler.hpp"

namespace lstmctl {

/// ceil((2 / eps) (ln(1 / beta) + d)). Throws InvalidArgument outside
/// 0 < eps < 1, 0 < beta < 1, d >= 1.
std::uint64_t required_scenarios(double epsilon, double beta, int d);

struct ScenarioConfig {
    double epsilon = 0.05;
    double beta = 1e-6;
    int d = 1;
    int tau = 500;          // samples per scenario
    std::uint64_t K = 0;    // 0 selects required_scenarios(epsilon, beta, d)
    std::uint64_t seed = 7;
    MprsConfig inputs;      // normalized levels, must lie inside the box
    double plant_spread = 0.1;  // relative perturbation of the nominal plant state
    unsigned threads = 1;

    [[nodiscard]] std::uint64_t scenario_count() const;
    /// Throws InvalidArgument if K violates the sample-size bound or the
    /// input sampler can leave the box.
    void validate(const InputBox& box) const;
};

// The system the model is compared against. outputs() returns the normalized
// output sequence y_m(0..tau-1) under the normalized input u. `model_init` is
// the initial state drawn for the model in the same scenario; an adapter may
// reuse it or draw its own initial condition from `rng`.
class ScenarioPlant {
public:
    virtual ~ScenarioPlant() = default;
    virtual Vector outputs(std::span<const double> u, const LstmState& model_init, std::mt19937_64& rng) const = 0;
};

// pH reactor. Initial state uniform in nominal * (1 +- spread) per component.
class PhScenarioPlant final : public ScenarioPlant {
public:
    PhScenarioPlant(PlantParams params, Scalers scalers, double Ts, double spread);
    Vector outputs(std::span<const double> u, const LstmState& model_init, std::mt19937_64& rng) const override;

private:
    PlantParams params_;
    Scalers scalers_;
    double Ts_;
    double spread_;
};

// Another LSTM acting as the plant, optionally with a constant output offset.
// With matched_init the plant starts from the model's initial state.
class LstmScenarioPlant final : public ScenarioPlant {
public:
    LstmScenarioPlant(LstmParams params, double offset, bool matched_init);
    Vector outputs(std::span<const double> u, const LstmState& model_init, std::mt19937_64& rng) const override;

private:
    LstmParams params_;
    double offset_;
    bool matched_;
};

struct ScenarioSample {
    std::uint64_t index = 0;
    std::uint64_t seed = 0;
    double w_inf_norm = 0.0;
};

struct MismatchBound {
    double rho_w_star = 0.0;
    std::uint64_t K_used = 0;
    double epsilon = 0.0;
    double beta = 0.0;
    std::uint64_t worst_seed = 0;
    std::uint64_t worst_index = 0;
    std::vector<ScenarioSample> samples;
};

/// Seed of scenario i under master seed s. Depends on (s, i) only, so the
/// first K scenarios are the same for every larger K.
std::uint64_t scenario_seed(std::uint64_t master, std::uint64_t index);

/// Uniform draw from the invariant set: x in [-x_rad, x_rad]^n, xi in (-1, 1)^n.
LstmState sample_invariant_state(const LstmParams& p, const InputBox& box, std::mt19937_64& rng);

/// |y_m - y|_inf for one scenario.
ScenarioSample run_scenario(const LstmParams& model, const ScenarioPlant& plant, const ScenarioConfig& cfg,
                            const InputBox& box, std::uint64_t master_seed, std::uint64_t index);

/// Evaluates scenarios [first, first + count) on cfg.threads workers.
std::vector<ScenarioSample> run_scenarios(const LstmParams& model, const ScenarioPlant& plant,
                                          const ScenarioConfig& cfg, const InputBox& box,
                                          std::uint64_t master_seed, std::uint64_t first, std::uint64_t count);

/// max_i |w^i|_inf over K scenarios.
MismatchBound estimate_rho_w(const LstmParams& model, const ScenarioPlant& plant, const ScenarioConfig& cfg,
                             const InputBox& box);

}  // namespace lstmctl
