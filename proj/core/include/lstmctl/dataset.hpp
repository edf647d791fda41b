#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lstmctl/linalg.hpp"
#include "lstmctl/scaler.hpp"

namespace lstmctl {

enum class Split { Train, Validation, Test };

const char* to_string(Split s);
Split split_from_string(const std::string& s);

// One input/output record in physical units.
struct RawExperiment {
    Vector u;
    Vector y;
    Split split = Split::Train;
};

// Normalized experiment as seen by the trainer.
struct Experiment {
    Vector u;
    Vector y;
    Split split = Split::Train;
};

struct Dataset {
    std::vector<Experiment> experiments;
    Scalers scalers;

    [[nodiscard]] std::vector<const Experiment*> select(Split s) const;
};

/// Maps each channel onto [-1, 1] using the min/max of the training split only.
/// A channel with a known physical range can be pinned with fixed_u / fixed_y.
/// Throws InvalidArgument for an empty training split or a constant channel.
Dataset normalize(const std::vector<RawExperiment>& raw, std::optional<ChannelScaler> fixed_u = std::nullopt,
                  std::optional<ChannelScaler> fixed_y = std::nullopt);

RawExperiment denormalize(const Experiment& e, const Scalers& s);

/// 100 (1 - |y_meas - y_model| / |y_meas - mean(y_meas)|).
/// Throws InvalidArgument on length mismatch, fewer than 2 samples or constant y_meas.
double fit_metric(std::span<const double> y_meas, std::span<const double> y_model);

}  // namespace lstmctl
