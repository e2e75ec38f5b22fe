#include "qesn/serialize.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace qesn {

using nlohmann::json;

namespace {

json vec(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector to_vec(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json csr(const CsrMatrix& m) {
    return {{"rows", m.rows}, {"cols", m.cols}, {"row_ptr", m.row_ptr}, {"col_idx", m.col_idx}, {"values", m.values}};
}

CsrMatrix to_csr(const json& j) {
    CsrMatrix m;
    m.rows = j.at("rows").get<std::size_t>();
    m.cols = j.at("cols").get<std::size_t>();
    m.row_ptr = j.at("row_ptr").get<std::vector<std::size_t>>();
    m.col_idx = j.at("col_idx").get<std::vector<std::size_t>>();
    m.values = j.at("values").get<std::vector<double>>();
    if (m.row_ptr.size() != m.rows + 1 || m.col_idx.size() != m.values.size() || m.row_ptr.back() != m.values.size())
        throw LoadError("fit file: malformed sparse matrix");
    return m;
}

json reservoir(const ReservoirConfig& c) {
    return {{"n_h", c.n_h},   {"delta", c.delta}, {"kappa", c.kappa}, {"a_v", c.a_v},
            {"a_u", c.a_u},   {"pi_v", c.pi_v},   {"pi_u", c.pi_u},   {"seed", c.seed}};
}

ReservoirConfig to_reservoir(const json& j) {
    ReservoirConfig c;
    c.n_h = j.at("n_h").get<int>();
    c.delta = j.at("delta").get<double>();
    c.kappa = j.at("kappa").get<double>();
    c.a_v = j.at("a_v").get<double>();
    c.a_u = j.at("a_u").get<double>();
    c.pi_v = j.at("pi_v").get<double>();
    c.pi_u = j.at("pi_u").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

json params(const PointParameters& p) {
    return {{"beta", vec(p.beta)}, {"sigma2", p.sigma2}, {"tau2", p.tau2}, {"psi", p.psi}, {"nu", p.nu}};
}

PointParameters to_params(const json& j) {
    PointParameters p;
    p.beta = to_vec(j.at("beta"));
    p.sigma2 = j.at("sigma2").get<double>();
    p.tau2 = j.at("tau2").get<double>();
    p.psi = j.at("psi").get<double>();
    p.nu = j.at("nu").get<double>();
    return p;
}

json features(const FeatureSpec& f) {
    return {{"series_ids", f.series_ids},
            {"short_lags", f.short_lags},
            {"long_lags", f.long_lags},
            {"exogenous", f.exogenous},
            {"exogenous_forward", f.exogenous_forward},
            {"include_intercept", f.include_intercept},
            {"value_scale", f.value_scale == ValueScale::raw_y ? "raw_y" : "normal_score"}};
}

FeatureSpec to_features(const json& j) {
    FeatureSpec f;
    f.series_ids = j.at("series_ids").get<std::vector<std::string>>();
    f.short_lags = j.at("short_lags").get<std::vector<int>>();
    f.long_lags = j.at("long_lags").get<std::vector<int>>();
    f.exogenous = j.at("exogenous").get<std::vector<std::string>>();
    f.exogenous_forward = j.at("exogenous_forward").get<bool>();
    f.include_intercept = j.at("include_intercept").get<bool>();
    f.value_scale = j.at("value_scale").get<std::string>() == "raw_y" ? ValueScale::raw_y : ValueScale::normal_score;
    return f;
}

json margin(const MarginModel& m) {
    return {{"grid", m.grid},         {"pdf", m.pdf},         {"cdf", m.cdf}, {"bandwidth", m.bandwidth},
            {"lower_y", m.lower_y}, {"upper_y", m.upper_y}, {"id", m.id}};
}

MarginModel to_margin(const json& j) {
    MarginModel m;
    m.grid = j.at("grid").get<std::vector<double>>();
    m.pdf = j.at("pdf").get<std::vector<double>>();
    m.cdf = j.at("cdf").get<std::vector<double>>();
    m.bandwidth = j.at("bandwidth").get<double>();
    m.lower_y = j.at("lower_y").get<double>();
    m.upper_y = j.at("upper_y").get<double>();
    m.id = j.at("id").get<std::string>();
    if (m.grid.size() != m.pdf.size() || m.grid.size() != m.cdf.size() || m.grid.size() < 2)
        throw LoadError("fit file: malformed margin");
    return m;
}

}  // namespace

std::string fit_to_json(const ModelFit& fit) {
    json j;
    j["format"] = "qesn-fit-1";
    j["family"] = to_string(fit.family);
    j["series_id"] = fit.series_id;
    j["features"] = features(fit.features);
    j["reservoir"] = reservoir(fit.reservoir);
    j["lower_y"] = fit.lower_y;
    j["upper_y"] = fit.upper_y;
    j["train_begin"] = fit.train_begin;
    j["train_end"] = fit.train_end;
    if (fit.margin) j["margin"] = margin(*fit.margin);
    json configs = json::array();
    for (const auto& c : fit.configs) {
        json draws = json::array();
        for (const auto& d : c.draws) draws.push_back(params(d));
        configs.push_back({{"reservoir", reservoir(c.reservoir)},
                           {"V", csr(c.weights.V)},
                           {"U", csr(c.weights.U)},
                           {"lambda_V", c.weights.lambda_V},
                           {"n_h", c.weights.n_h},
                           {"n_x", c.weights.n_x},
                           {"params", params(c.params)},
                           {"h_last", vec(c.h_last)},
                           {"draws", draws},
                           {"acceptance_rate", c.acceptance_rate}});
    }
    j["configs"] = configs;
    return j.dump();
}

ModelFit fit_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        if (j.at("format").get<std::string>() != "qesn-fit-1") throw LoadError("fit file: unknown format");
        ModelFit fit;
        fit.family = parse_family(j.at("family").get<std::string>());
        fit.series_id = j.at("series_id").get<std::string>();
        fit.features = to_features(j.at("features"));
        fit.reservoir = to_reservoir(j.at("reservoir"));
        fit.lower_y = j.at("lower_y").get<double>();
        fit.upper_y = j.at("upper_y").get<double>();
        fit.train_begin = j.at("train_begin").get<std::int64_t>();
        fit.train_end = j.at("train_end").get<std::int64_t>();
        if (j.contains("margin")) fit.margin = to_margin(j.at("margin"));
        for (const auto& c : j.at("configs")) {
            ConfigurationFit cf;
            cf.reservoir = to_reservoir(c.at("reservoir"));
            cf.weights.V = to_csr(c.at("V"));
            cf.weights.U = to_csr(c.at("U"));
            cf.weights.lambda_V = c.at("lambda_V").get<double>();
            cf.weights.n_h = c.at("n_h").get<int>();
            cf.weights.n_x = c.at("n_x").get<int>();
            cf.params = to_params(c.at("params"));
            cf.h_last = to_vec(c.at("h_last"));
            for (const auto& d : c.at("draws")) cf.draws.push_back(to_params(d));
            cf.acceptance_rate = c.at("acceptance_rate").get<double>();
            fit.configs.push_back(std::move(cf));
        }
        if (fit.family == Family::copula && !fit.margin) throw LoadError("fit file: copula fit without margin");
        return fit;
    } catch (const json::exception& e) {
        throw LoadError(std::string("fit file: ") + e.what());
    }
}

void save_fit(const ModelFit& fit, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw LoadError("cannot write fit file '" + path + "'");
    out << fit_to_json(fit) << '\n';
    if (!out) throw LoadError("failed writing fit file '" + path + "'");
}

ModelFit load_fit(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open fit file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return fit_from_json(ss.str());
}

}  // namespace qesn
