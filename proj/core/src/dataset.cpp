#include "lstmctl/dataset.hpp"

#include <cmath>

#include "lstmctl/errors.hpp"

namespace lstmctl {

const char* to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Validation: return "val";
        case Split::Test: return "test";
    }
    return "train";
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "val" || s == "validation") return Split::Validation;
    if (s == "test") return Split::Test;
    throw InvalidArgument("unknown split '" + s + "'");
}

ChannelScaler ChannelScaler::fit(std::span<const double> samples) {
    if (samples.empty()) throw InvalidArgument("scaler: empty channel");
    double lo = samples[0], hi = samples[0];
    for (double v : samples) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi > lo)) throw InvalidArgument("scaler: constant channel cannot be normalized");
    return {lo, hi};
}

std::vector<const Experiment*> Dataset::select(Split s) const {
    std::vector<const Experiment*> out;
    for (const Experiment& e : experiments)
        if (e.split == s) out.push_back(&e);
    return out;
}

Dataset normalize(const std::vector<RawExperiment>& raw, std::optional<ChannelScaler> fixed_u,
                  std::optional<ChannelScaler> fixed_y) {
    if (raw.empty()) throw InvalidArgument("normalize: empty dataset");
    Vector u_train, y_train;
    for (const RawExperiment& e : raw) {
        if (e.u.size() != e.y.size()) throw DimensionError("experiment", "u and y lengths differ");
        if (e.split != Split::Train) continue;
        u_train.insert(u_train.end(), e.u.begin(), e.u.end());
        y_train.insert(y_train.end(), e.y.begin(), e.y.end());
    }
    if (u_train.empty()) throw InvalidArgument("normalize: no training experiments");

    Dataset ds;
    ds.scalers.u = fixed_u ? *fixed_u : ChannelScaler::fit(u_train);
    ds.scalers.y = fixed_y ? *fixed_y : ChannelScaler::fit(y_train);
    ds.experiments.reserve(raw.size());
    for (const RawExperiment& e : raw) {
        Experiment n;
        n.split = e.split;
        n.u.reserve(e.u.size());
        n.y.reserve(e.y.size());
        for (double v : e.u) n.u.push_back(ds.scalers.u.normalize(v));
        for (double v : e.y) n.y.push_back(ds.scalers.y.normalize(v));
        ds.experiments.push_back(std::move(n));
    }
    return ds;
}

RawExperiment denormalize(const Experiment& e, const Scalers& s) {
    RawExperiment r;
    r.split = e.split;
    for (double v : e.u) r.u.push_back(s.u.denormalize(v));
    for (double v : e.y) r.y.push_back(s.y.denormalize(v));
    return r;
}

double fit_metric(std::span<const double> y_meas, std::span<const double> y_model) {
    if (y_meas.size() != y_model.size()) throw InvalidArgument("fit_metric: sequences differ in length");
    if (y_meas.size() < 2) throw InvalidArgument("fit_metric: need at least two samples");
    double mean = 0.0;
    for (double v : y_meas) mean += v;
    mean /= static_cast<double>(y_meas.size());
    double err = 0.0, spread = 0.0;
    for (std::size_t k = 0; k < y_meas.size(); ++k) {
        err += (y_meas[k] - y_model[k]) * (y_meas[k] - y_model[k]);
        spread += (y_meas[k] - mean) * (y_meas[k] - mean);
    }
    if (!(spread > 0.0)) throw InvalidArgument("fit_metric: measured output is constant");
    return 100.0 * (1.0 - std::sqrt(err) / std::sqrt(spread));
}

}  // namespace lstmctl
