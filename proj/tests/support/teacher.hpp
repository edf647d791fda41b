#pragma once

// Noiseless data from a fixed 2-state LSTM for identification checks.

#include "lstmctl/dataset.hpp"
#include "lstmctl/plant.hpp"
#include "lstmctl/trainer.hpp"

namespace teacher {

inline lstmctl::LstmParams network() {
    lstmctl::LstmParams t = lstmctl::init_params(2, 1, 1, 0.8, 11);
    t.readout(0, 0) = 1.5;
    t.readout(0, 1) = -1.0;
    return t;
}

// Six training, one validation and one test experiment of `length` samples.
inline lstmctl::Dataset dataset(std::size_t length = 300) {
    using namespace lstmctl;
    const LstmParams t = network();
    Dataset ds;
    ds.scalers = {ChannelScaler{-1.0, 1.0}, ChannelScaler{-1.0, 1.0}};
    for (int e = 0; e < 8; ++e) {
        Vector u = mprs_input(MprsConfig{}, length, 100 + static_cast<std::uint64_t>(e));
        Vector y = predict_outputs(t, LstmState::zeros(2), u);
        const Split s = e < 6 ? Split::Train : (e < 7 ? Split::Validation : Split::Test);
        ds.experiments.push_back({std::move(u), std::move(y), s});
    }
    return ds;
}

inline lstmctl::TrainConfig config() {
    lstmctl::TrainConfig c;
    c.n_x = 2;
    c.washout = 20;
    c.max_epochs = 3000;
    c.patience = 100;
    c.learning_rate = 3e-3;
    c.seed = 5;
    return c;
}

}  // namespace teacher
