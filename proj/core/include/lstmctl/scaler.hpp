#pragma once

#include <span>
#include <vector>

namespace lstmctl {

// Affine map of a physical channel onto [-1, 1]: lo -> -1, hi -> +1.
struct ChannelScaler {
    double lo = -1.0;
    double hi = 1.0;

    [[nodiscard]] double normalize(double v) const noexcept { return 2.0 * (v - lo) / (hi - lo) - 1.0; }
    [[nodiscard]] double denormalize(double z) const noexcept { return lo + 0.5 * (z + 1.0) * (hi - lo); }
    /// Scale factor from normalized to physical units.
    [[nodiscard]] double gain() const noexcept { return 0.5 * (hi - lo); }

    /// Fits the map to the min/max of the samples; throws InvalidArgument on a constant channel.
    static ChannelScaler fit(std::span<const double> samples);

    friend bool operator==(const ChannelScaler&, const ChannelScaler&) = default;
};

struct Scalers {
    ChannelScaler u;
    ChannelScaler y;

    friend bool operator==(const Scalers&, const Scalers&) = default;
};

}  // namespace lstmctl
