#include "lstmctl/scenario.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "lstmctl/errors.hpp"

namespace lstmctl {

std::uint64_t required_scenarios(double epsilon, double beta, int d) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("scenario: epsilon must lie in (0, 1)");
    if (!(beta > 0.0 && beta < 1.0)) throw InvalidArgument("scenario: beta must lie in (0, 1)");
    if (d < 1) throw InvalidArgument("scenario: d must be at least 1");
    const double k = (2.0 / epsilon) * (std::log(1.0 / beta) + static_cast<double>(d));
    return static_cast<std::uint64_t>(std::ceil(k - 1e-12 * k));
}

std::uint64_t ScenarioConfig::scenario_count() const { return K != 0 ? K : required_scenarios(epsilon, beta, d); }

void ScenarioConfig::validate(const InputBox& box) const {
    const std::uint64_t need = required_scenarios(epsilon, beta, d);
    if (K != 0 && K < need)
        throw InvalidArgument("scenario: K = " + std::to_string(K) + " is below the required " + std::to_string(need));
    if (tau < 1) throw InvalidArgument("scenario: tau must be positive");
    if (!box.contains(inputs.level_lo) || !box.contains(inputs.level_hi))
        throw InvalidArgument("scenario: input sampler levels [" + std::to_string(inputs.level_lo) + ", " +
                              std::to_string(inputs.level_hi) + "] leave the input box");
    if (!(plant_spread >= 0.0 && plant_spread < 1.0)) throw InvalidArgument("scenario: plant_spread must lie in [0, 1)");
}

std::uint64_t scenario_seed(std::uint64_t master, std::uint64_t index) {
    // splitmix64 finalizer over the pair
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return (z ^ (z >> 31)) >> 11;  // 53 bits, exact as a double in CSV output
}

LstmState sample_invariant_state(const LstmParams& p, const InputBox& box, std::mt19937_64& rng) {
    const GateBounds b = gate_bounds(p, box);
    std::uniform_real_distribution<double> ux(-b.x_radius, b.x_radius);
    std::uniform_real_distribution<double> uxi(-1.0, 1.0);
    LstmState s = LstmState::zeros(p.n_x);
    for (double& v : s.x) v = ux(rng);
    for (double& v : s.xi) v = uxi(rng);
    return s;
}

PhScenarioPlant::PhScenarioPlant(PlantParams params, Scalers scalers, double Ts, double spread)
    : params_(params), scalers_(scalers), Ts_(Ts), spread_(spread) {}

Vector PhScenarioPlant::outputs(std::span<const double> u, const LstmState&, std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> pert(1.0 - spread_, 1.0 + spread_);
    PlantState s = PlantState::nominal();
    s.x1 *= pert(rng);
    s.x2 *= pert(rng);
    s.x3 *= pert(rng);
    Vector q3(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) q3[k] = scalers_.u.denormalize(u[k]);
    Vector y = plant_response(params_, q3, Ts_, s);
    for (double& v : y) v = scalers_.y.normalize(v);
    return y;
}

LstmScenarioPlant::LstmScenarioPlant(LstmParams params, double offset, bool matched_init)
    : params_(std::move(params)), offset_(offset), matched_(matched_init) {}

Vector LstmScenarioPlant::outputs(std::span<const double> u, const LstmState& model_init,
                                  std::mt19937_64& rng) const {
    const LstmState s0 = matched_ ? model_init : sample_invariant_state(params_, InputBox{}, rng);
    Vector y = predict_outputs(params_, s0, u);
    for (double& v : y) v += offset_;
    return y;
}

ScenarioSample run_scenario(const LstmParams& model, const ScenarioPlant& plant, const ScenarioConfig& cfg,
                            const InputBox& box, std::uint64_t master_seed, std::uint64_t index) {
    ScenarioSample out;
    out.index = index;
    out.seed = scenario_seed(master_seed, index);
    std::mt19937_64 rng(out.seed);
    const LstmState chi0 = sample_invariant_state(model, box, rng);
    const Vector u = mprs_input(cfg.inputs, static_cast<std::size_t>(cfg.tau), rng());
    for (double v : u)
        if (!box.contains(v))
            throw InvalidArgument("scenario " + std::to_string(index) + ": sampled input " + std::to_string(v) +
                                  " is outside the box");
    const Vector y = predict_outputs(model, chi0, u);
    const Vector ym = plant.outputs(u, chi0, rng);
    if (ym.size() != y.size()) throw DimensionError("plant outputs", "length differs from the input sequence");
    double w = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) w = std::max(w, std::abs(ym[k] - y[k]));
    out.w_inf_norm = w;
    return out;
}

std::vector<ScenarioSample> run_scenarios(const LstmParams& model, const ScenarioPlant& plant,
                                          const ScenarioConfig& cfg, const InputBox& box,
                                          std::uint64_t master_seed, std::uint64_t first, std::uint64_t count) {
    std::vector<ScenarioSample> out(count);
    const unsigned workers = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(count)));
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto work = [&] {
        for (std::uint64_t j = next++; j < count; j = next++) {
            try {
                out[j] = run_scenario(model, plant, cfg, box, master_seed, first + j);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
                next = count;
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

MismatchBound estimate_rho_w(const LstmParams& model, const ScenarioPlant& plant, const ScenarioConfig& cfg,
                             const InputBox& box) {
    cfg.validate(box);
    MismatchBound mb;
    mb.K_used = cfg.scenario_count();
    mb.epsilon = cfg.epsilon;
    mb.beta = cfg.beta;
    mb.samples = run_scenarios(model, plant, cfg, box, cfg.seed, 0, mb.K_used);
    for (const ScenarioSample& s : mb.samples) {
        if (s.w_inf_norm > mb.rho_w_star || (s.index == 0 && mb.rho_w_star == 0.0)) {
            mb.rho_w_star = s.w_inf_norm;
            mb.worst_seed = s.seed;
            mb.worst_index = s.index;
        }
    }
    return mb;
}

}  // namespace lstmctl
