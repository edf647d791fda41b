#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "lstmctl/lstm.hpp"
#include "lstmctl/observer.hpp"
#include "lstmctl/scaler.hpp"
#include "lstmctl/scenario.hpp"
#include "lstmctl/stability.hpp"
#include "lstmctl/trainer.hpp"

namespace lstmctl {

inline constexpr const char* kModelFormat = "lstm-ctrl/v1";

// Everything needed to use a trained model: weights, the input box it was
// certified for, the normalization it expects, and optionally observer gains.
struct ModelBundle {
    LstmParams params;
    InputBox box;
    Scalers scalers;
    std::optional<ObserverGains> observer;
    nlohmann::json metadata = nlohmann::json::object();
};

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j, const std::string& field);

nlohmann::json params_to_json(const LstmParams& p);
/// Throws DimensionError naming the field when shapes are inconsistent.
LstmParams params_from_json(const nlohmann::json& j);

nlohmann::json gains_to_json(const ObserverGains& g);
ObserverGains gains_from_json(const nlohmann::json& j, std::size_t n_x, std::size_t n_y);

nlohmann::json model_to_json(const ModelBundle& m);
ModelBundle model_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GateBounds& b);
nlohmann::json to_json(const CertificateReport& r);
nlohmann::json to_json(const CertificatePair& c);
nlohmann::json to_json(const ObserverBounds& b);
nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
nlohmann::json to_json(const MismatchBound& m, const ScenarioConfig& cfg);

/// Writes through a temporary file in the same directory and renames it over
/// the target. Throws IoError with the path on failure.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

ModelBundle load_model(const std::filesystem::path& path);
void save_model(const std::filesystem::path& path, const ModelBundle& m);

/// FNV-1a 64 of the file contents as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

}  // namespace lstmctl
