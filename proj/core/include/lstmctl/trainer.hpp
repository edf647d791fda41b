#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lstmctl/dataset.hpp"
#include "lstmctl/lstm.hpp"
#include "lstmctl/stability.hpp"

namespace lstmctl {

// Corrected: L = mse + sum_r (rho+ max(r, 0) + rho- min(r, 0)).
// AsPrinted keeps the minus signs in front of both penalty terms, which
// rewards violation. Only useful for comparison runs.
enum class PenaltyConvention { Corrected, AsPrinted };

struct TrainConfig {
    double learning_rate = 1e-3;
    double rmsprop_decay = 0.9;
    double epsilon = 1e-8;
    int max_epochs = 2000;
    int patience = 20;
    double rho1_plus = 4e-3;
    double rho1_minus = 2e-5;
    double rho2_plus = 4e-3;
    double rho2_minus = 2e-5;
    int washout = 50;
    std::uint64_t seed = 1;

    std::size_t n_x = 7;
    double init_scale = 0.1;
    PenaltyConvention convention = PenaltyConvention::Corrected;
    // Release the best certified snapshot instead of the overall best one when
    // its validation MSE is within certified_tolerance times the best.
    bool prefer_certified = true;
    double certified_tolerance = 1.5;

    void validate() const;
};

struct LossBreakdown {
    double mse = 0.0;
    double penalty_r1 = 0.0;
    double penalty_r2 = 0.0;
    double total = 0.0;
    double r1 = 0.0;
    double r2 = 0.0;
};

/// Mean squared output error of the free response from chi(0) = 0, averaged
/// over samples k >= washout.
double sequence_mse(const LstmParams& p, const Experiment& e, int washout);

LossBreakdown loss(const LstmParams& p, const Experiment& batch, const TrainConfig& cfg, const InputBox& box);

/// Gradient of loss() with the shape of LstmParams. BPTT through the whole
/// sequence for the MSE, subgradients of the certificate residuals for the
/// penalty. Optionally returns the breakdown evaluated on the way.
LstmParams loss_gradient(const LstmParams& p, const Experiment& batch, const TrainConfig& cfg,
                         const InputBox& box, LossBreakdown* out = nullptr);

/// Gradient of the MSE term only.
LstmParams mse_gradient(const LstmParams& p, const Experiment& batch, int washout, double* mse = nullptr);

/// Subgradient of a1 * r1 + a2 * r2 with respect to the weights.
LstmParams residual_gradient(const LstmParams& p, const InputBox& box, double a1, double a2);

/// Slope of the penalty term at residual r.
double penalty_slope(double r, double rho_plus, double rho_minus, PenaltyConvention c);
double penalty_value(double r, double rho_plus, double rho_minus, PenaltyConvention c);

// Flat parameter vector in the order forget, input, output, cell (W, U, b
// each), then C and b_y.
std::size_t parameter_count(const LstmParams& p);
Vector flatten(const LstmParams& p);
void unflatten(std::span<const double> theta, LstmParams& p);

/// Every entry uniform in [-scale, scale].
LstmParams init_params(std::size_t n_x, std::size_t n_u, std::size_t n_y, double scale, std::uint64_t seed);

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_mse = 0.0;
    double r1 = 0.0;
    double r2 = 0.0;
    bool certified = false;
};

struct TrainResult {
    LstmParams params;
    std::vector<EpochRecord> history;
    int best_epoch = -1;
    bool diverged = false;
    bool learning_rate_halved = false;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// RMSProp with one randomly ordered training experiment per update.
/// Throws InvalidArgument if the training or validation split is empty.
TrainResult rmsprop_train(const Dataset& ds, const TrainConfig& cfg, const InputBox& box,
                          const LstmParams* init = nullptr, const EpochCallback& on_epoch = {});

struct CertifiedTrainResult {
    TrainResult result;
    TrainConfig final_config;
    int attempts = 0;
    bool certified = false;
};

/// Retrains with doubled rho+ until the released snapshot passes the delta-ISS
/// certificate or `max_attempts` runs are spent.
CertifiedTrainResult train_certified(const Dataset& ds, const TrainConfig& cfg, const InputBox& box,
                                     int max_attempts = 4, const EpochCallback& on_epoch = {});

}  // namespace lstmctl
