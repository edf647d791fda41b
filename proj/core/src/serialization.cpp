#include "lstmctl/serialization.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lstmctl/errors.hpp"

namespace lstmctl {

using nlohmann::json;

namespace {

const json& require(const json& j, const std::string& key) {
    if (!j.is_object() || !j.contains(key)) throw DimensionError(key, "missing field");
    return j.at(key);
}

Vector vector_from_json(const json& j, const std::string& field, std::size_t n) {
    if (!j.is_array()) throw DimensionError(field, "expected an array");
    Vector v = j.get<Vector>();
    if (v.size() != n)
        throw DimensionError(field, "expected " + std::to_string(n) + " entries, got " + std::to_string(v.size()));
    return v;
}

Matrix sized_matrix(const json& j, const std::string& field, std::size_t rows, std::size_t cols) {
    Matrix m = matrix_from_json(j, field);
    if (m.rows() != rows || m.cols() != cols)
        throw DimensionError(field, "expected " + std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
                                        std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    return m;
}

json scaler_to_json(const ChannelScaler& s) { return {{"lo", s.lo}, {"hi", s.hi}}; }

ChannelScaler scaler_from_json(const json& j) {
    return {require(j, "lo").get<double>(), require(j, "hi").get<double>()};
}

json gain_to_json(const Gain2x2& a) { return json::array({json::array({a.a11, a.a12}), json::array({a.a21, a.a22})}); }

}  // namespace

json matrix_to_json(const Matrix& m) { return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}}; }

Matrix matrix_from_json(const json& j, const std::string& field) {
    if (!j.is_object()) throw DimensionError(field, "expected an object with rows, cols, data");
    const auto rows = require(j, "rows").get<std::size_t>();
    const auto cols = require(j, "cols").get<std::size_t>();
    Vector data = require(j, "data").get<Vector>();
    if (data.size() != rows * cols)
        throw DimensionError(field, "data holds " + std::to_string(data.size()) + " entries for a " +
                                        std::to_string(rows) + "x" + std::to_string(cols) + " matrix");
    return Matrix(rows, cols, std::move(data));
}

json params_to_json(const LstmParams& p) {
    json w = json::object();
    auto gate = [&](const char* s, const GateWeights& g) {
        w[std::string("W_") + s] = matrix_to_json(g.input);
        w[std::string("U_") + s] = matrix_to_json(g.recurrent);
        w[std::string("b_") + s] = g.bias;
    };
    gate("f", p.forget);
    gate("i", p.input);
    gate("o", p.output);
    gate("c", p.cell);
    w["C"] = matrix_to_json(p.readout);
    w["b_y"] = p.readout_bias;
    return {{"dims", {{"n_x", p.n_x}, {"n_u", p.n_u}, {"n_y", p.n_y}}}, {"weights", w}};
}

LstmParams params_from_json(const json& j) {
    const json& dims = require(j, "dims");
    const auto n_x = require(dims, "n_x").get<std::size_t>();
    const auto n_u = require(dims, "n_u").get<std::size_t>();
    const auto n_y = require(dims, "n_y").get<std::size_t>();
    if (n_x == 0 || n_u == 0 || n_y == 0) throw DimensionError("dims", "dimensions must be positive");
    const json& w = require(j, "weights");
    LstmParams p;
    p.n_x = n_x;
    p.n_u = n_u;
    p.n_y = n_y;
    auto gate = [&](const char* s, GateWeights& g) {
        const std::string W = std::string("W_") + s, U = std::string("U_") + s, b = std::string("b_") + s;
        g.input = sized_matrix(require(w, W), W, n_x, n_u);
        g.recurrent = sized_matrix(require(w, U), U, n_x, n_x);
        g.bias = vector_from_json(require(w, b), b, n_x);
    };
    gate("f", p.forget);
    gate("i", p.input);
    gate("o", p.output);
    gate("c", p.cell);
    p.readout = sized_matrix(require(w, "C"), "C", n_y, n_x);
    p.readout_bias = vector_from_json(require(w, "b_y"), "b_y", n_y);
    p.validate();
    return p;
}

json gains_to_json(const ObserverGains& g) {
    return {{"L_f", matrix_to_json(g.L_f)}, {"L_i", matrix_to_json(g.L_i)}, {"L_o", matrix_to_json(g.L_o)}};
}

ObserverGains gains_from_json(const json& j, std::size_t n_x, std::size_t n_y) {
    return {sized_matrix(require(j, "L_f"), "L_f", n_x, n_y), sized_matrix(require(j, "L_i"), "L_i", n_x, n_y),
            sized_matrix(require(j, "L_o"), "L_o", n_x, n_y)};
}

json model_to_json(const ModelBundle& m) {
    json j = params_to_json(m.params);
    j["format"] = kModelFormat;
    j["input_box"] = {{"u_max", m.box.u_max}};
    j["normalization"] = {{"u", scaler_to_json(m.scalers.u)}, {"y", scaler_to_json(m.scalers.y)}};
    j["observer"] = m.observer ? gains_to_json(*m.observer) : json(nullptr);
    j["metadata"] = m.metadata;
    return j;
}

ModelBundle model_from_json(const json& j) {
    const std::string fmt = require(j, "format").get<std::string>();
    if (fmt != kModelFormat) throw InvalidArgument("model: unsupported format '" + fmt + "'");
    ModelBundle m;
    m.params = params_from_json(j);
    m.box.u_max = require(require(j, "input_box"), "u_max").get<double>();
    if (!(m.box.u_max > 0.0)) throw InvalidArgument("model: u_max must be positive");
    const json& n = require(j, "normalization");
    m.scalers = {scaler_from_json(require(n, "u")), scaler_from_json(require(n, "y"))};
    if (j.contains("observer") && !j.at("observer").is_null())
        m.observer = gains_from_json(j.at("observer"), m.params.n_x, m.params.n_y);
    if (j.contains("metadata")) m.metadata = j.at("metadata");
    return m;
}

json to_json(const GateBounds& b) {
    return {{"sigma_f", b.sigma_f}, {"sigma_i", b.sigma_i}, {"sigma_o", b.sigma_o},
            {"sigma_c", b.sigma_c}, {"x_radius", b.x_radius}, {"sigma_x", b.sigma_x}};
}

json to_json(const CertificateReport& r) {
    json j = {{"kind", to_string(r.kind)},
              {"bounds", to_json(r.bounds)},
              {"matrix", gain_to_json(r.matrix)},
              {"spectral_radius", r.spectral_radius},
              {"jury_pass", r.jury_pass},
              {"residuals", r.residuals},
              {"norms", {{"U_f", r.norms.U_f}, {"U_i", r.norms.U_i}, {"U_o", r.norms.U_o}, {"U_c", r.norms.U_c}}},
              {"certified", r.certified()}};
    if (r.kind == CertificateKind::DeltaIss) j["alpha"] = r.alpha;
    return j;
}

json to_json(const CertificatePair& c) { return {{"iss", to_json(c.iss)}, {"delta_iss", to_json(c.delta_iss)}}; }

json to_json(const ObserverBounds& b) {
    return {{"sigma_f_hat", b.sigma_f},     {"sigma_i_hat", b.sigma_i},
            {"sigma_o_hat", b.sigma_o},     {"alpha_hat", b.alpha_hat},
            {"A_hat", gain_to_json(b.A_hat)}, {"norm_A_hat", b.norm_A_hat},
            {"rho_A_hat", b.rho_A_hat},     {"constraint_residuals", {b.constraint_r1, b.constraint_r2}},
            {"feasible", b.feasible()},     {"norm_A_hat_alternate", b.norm_A_hat_alternate}};
}

json to_json(const TrainConfig& c) {
    return {{"learning_rate", c.learning_rate},
            {"rmsprop_decay", c.rmsprop_decay},
            {"epsilon", c.epsilon},
            {"max_epochs", c.max_epochs},
            {"patience", c.patience},
            {"rho1_plus", c.rho1_plus},
            {"rho1_minus", c.rho1_minus},
            {"rho2_plus", c.rho2_plus},
            {"rho2_minus", c.rho2_minus},
            {"washout", c.washout},
            {"seed", c.seed},
            {"n_x", c.n_x},
            {"init_scale", c.init_scale},
            {"penalty_convention", c.convention == PenaltyConvention::Corrected ? "corrected" : "as_printed"},
            {"prefer_certified", c.prefer_certified},
            {"certified_tolerance", c.certified_tolerance}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
    if (!j.is_object()) throw InvalidArgument("train config: expected an object");
    auto opt = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    opt("learning_rate", c.learning_rate);
    opt("rmsprop_decay", c.rmsprop_decay);
    opt("epsilon", c.epsilon);
    opt("max_epochs", c.max_epochs);
    opt("patience", c.patience);
    opt("rho1_plus", c.rho1_plus);
    opt("rho1_minus", c.rho1_minus);
    opt("rho2_plus", c.rho2_plus);
    opt("rho2_minus", c.rho2_minus);
    opt("washout", c.washout);
    opt("seed", c.seed);
    opt("n_x", c.n_x);
    opt("init_scale", c.init_scale);
    opt("prefer_certified", c.prefer_certified);
    opt("certified_tolerance", c.certified_tolerance);
    if (j.contains("penalty_convention")) {
        const std::string s = j.at("penalty_convention").get<std::string>();
        if (s == "corrected") c.convention = PenaltyConvention::Corrected;
        else if (s == "as_printed") c.convention = PenaltyConvention::AsPrinted;
        else throw InvalidArgument("train config: unknown penalty_convention '" + s + "'");
    }
    c.validate();
    return c;
}

json to_json(const MismatchBound& m, const ScenarioConfig& cfg) {
    return {{"rho_w_star", m.rho_w_star},
            {"K_used", m.K_used},
            {"epsilon", m.epsilon},
            {"beta", m.beta},
            {"d", cfg.d},
            {"tau", cfg.tau},
            {"seed", cfg.seed},
            {"worst_scenario", {{"seed", m.worst_seed}, {"index", m.worst_index}}},
            {"samplers",
             {{"model_init", "uniform over the invariant set"},
              {"plant_init", {{"kind", "uniform relative perturbation of nominal"}, {"spread", cfg.plant_spread}}},
              {"inputs",
               {{"kind", "mprs"},
                {"level_lo", cfg.inputs.level_lo},
                {"level_hi", cfg.inputs.level_hi},
                {"hold_min", cfg.inputs.hold_min},
                {"hold_max", cfg.inputs.hold_max}}}}}};
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move " + tmp.string() + " to " + path.string());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed for " + path.string());
    return ss.str();
}

json read_json(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

ModelBundle load_model(const std::filesystem::path& path) {
    const json j = read_json(path);
    try {
        return model_from_json(j);
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void save_model(const std::filesystem::path& path, const ModelBundle& m) { write_json(path, model_to_json(m)); }

std::string file_hash(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace lstmctl
