#include "qesn/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

namespace qesn {

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string key_name(const std::string& section, const std::string& key) { return section + "." + key; }

double to_double(const std::string& v, const std::string& k) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(k + ": expected a number, got '" + v + "'");
    }
}

std::int64_t to_int(const std::string& v, const std::string& k) {
    try {
        std::size_t pos = 0;
        const long long d = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(k + ": expected an integer, got '" + v + "'");
    }
}

bool to_bool(const std::string& v, const std::string& k) {
    std::string l;
    for (char c : v) l.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (l == "true" || l == "yes" || l == "on" || l == "1") return true;
    if (l == "false" || l == "no" || l == "off" || l == "0") return false;
    throw ConfigError(k + ": expected true/false, got '" + v + "'");
}

std::int64_t to_time(const std::string& v, const std::string& k) {
    try {
        return parse_timestamp(v.size() == 10 ? v + "T00:00" : v);
    } catch (const Error&) {
        throw ConfigError(k + ": expected an ISO-8601 date, got '" + v + "'");
    }
}

std::string fmt_double(double d) {
    // Shortest representation that round-trips.
    char buf[40];
    const auto r = std::to_chars(buf, buf + sizeof buf, d);
    return std::string(buf, r.ptr);
}

std::string fmt_lags(const std::vector<int>& lags) {
    std::string out;
    std::size_t i = 0;
    while (i < lags.size()) {
        std::size_t j = i;
        while (j + 1 < lags.size() && lags[j + 1] == lags[j] + 1) ++j;
        if (!out.empty()) out += ",";
        out += j > i + 1 ? std::to_string(lags[i]) + "-" + std::to_string(lags[j]) : std::to_string(lags[i]);
        if (j == i + 1) out += "," + std::to_string(lags[j]);
        i = j + 1;
    }
    return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& v, F&& f) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + f(v[i]);
    return out;
}

using Setter = std::function<void(BacktestConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"reservoir.n_h", [](auto& c, auto& v, auto& k) { c.reservoir.n_h = static_cast<int>(to_int(v, k)); }},
        {"reservoir.delta", [](auto& c, auto& v, auto& k) { c.reservoir.delta = to_double(v, k); }},
        {"reservoir.kappa", [](auto& c, auto& v, auto& k) { c.reservoir.kappa = to_double(v, k); }},
        {"reservoir.a_v", [](auto& c, auto& v, auto& k) { c.reservoir.a_v = to_double(v, k); }},
        {"reservoir.a_u", [](auto& c, auto& v, auto& k) { c.reservoir.a_u = to_double(v, k); }},
        {"reservoir.pi_v", [](auto& c, auto& v, auto& k) { c.reservoir.pi_v = to_double(v, k); }},
        {"reservoir.pi_u", [](auto& c, auto& v, auto& k) { c.reservoir.pi_u = to_double(v, k); }},
        {"reservoir.K", [](auto& c, auto& v, auto& k) { c.K = static_cast<int>(to_int(v, k)); }},
        {"mcmc.n_iter", [](auto& c, auto& v, auto& k) { c.mcmc.n_iter = static_cast<int>(to_int(v, k)); }},
        {"mcmc.n_burn", [](auto& c, auto& v, auto& k) { c.mcmc.n_burn = static_cast<int>(to_int(v, k)); }},
        {"mcmc.keep_draws", [](auto& c, auto& v, auto& k) { c.keep_posterior_draws = static_cast<int>(to_int(v, k)); }},
        {"mcmc.use_draws", [](auto& c, auto& v, auto& k) { c.use_posterior_draws = to_bool(v, k); }},
        {"gaussian_prior.a", [](auto& c, auto& v, auto& k) { c.gaussian_prior.a = to_double(v, k); }},
        {"gaussian_prior.b", [](auto& c, auto& v, auto& k) { c.gaussian_prior.b = to_double(v, k); }},
        {"gaussian_prior.a_tilde", [](auto& c, auto& v, auto& k) { c.gaussian_prior.a_tilde = to_double(v, k); }},
        {"gaussian_prior.b_tilde", [](auto& c, auto& v, auto& k) { c.gaussian_prior.b_tilde = to_double(v, k); }},
        {"skew_t_prior.D0", [](auto& c, auto& v, auto& k) { c.skew_t_prior.D0 = to_double(v, k); }},
        {"skew_t_prior.c0", [](auto& c, auto& v, auto& k) { c.skew_t_prior.c0 = to_double(v, k); }},
        {"skew_t_prior.C0",
         [](auto& c, auto& v, auto& k) {
             if (v == "auto") c.skew_t_prior.C0.reset();
             else c.skew_t_prior.C0 = to_double(v, k);
         }},
        {"skew_t_prior.b0", [](auto& c, auto& v, auto& k) { c.skew_t_prior.b0 = to_double(v, k); }},
        {"skew_t_prior.B0", [](auto& c, auto& v, auto& k) { c.skew_t_prior.B0 = to_double(v, k); }},
        {"skew_t_prior.nu_skew_t", [](auto& c, auto& v, auto& k) { c.nu_skew_t = to_double(v, k); }},
        {"skew_t_prior.nu_skew_normal", [](auto& c, auto& v, auto& k) { c.nu_skew_normal = to_double(v, k); }},
        {"copula.weibull_shape", [](auto& c, auto& v, auto& k) { c.weibull_prior.shape = to_double(v, k); }},
        {"copula.weibull_scale", [](auto& c, auto& v, auto& k) { c.weibull_prior.scale = to_double(v, k); }},
        {"copula.target_acceptance", [](auto& c, auto& v, auto& k) { c.target_acceptance = to_double(v, k); }},
        {"features.short_lags", [](auto& c, auto& v, auto&) { c.short_lags = parse_lag_list(v); }},
        {"features.long_lags", [](auto& c, auto& v, auto&) { c.long_lags = parse_lag_list(v); }},
        {"features.exogenous", [](auto& c, auto& v, auto&) { c.exogenous = split_list(v); }},
        {"features.exogenous_forward", [](auto& c, auto& v, auto& k) { c.exogenous_forward = to_bool(v, k); }},
        {"features.intercept", [](auto& c, auto& v, auto& k) { c.include_intercept = to_bool(v, k); }},
        {"features.cross_series_lags", [](auto& c, auto& v, auto& k) { c.cross_series_lags = to_bool(v, k); }},
        {"margins.bandwidth",
         [](auto& c, auto& v, auto& k) {
             if (v == "auto") c.bandwidth.reset();
             else c.bandwidth = to_double(v, k);
         }},
        {"margins.grid_points", [](auto& c, auto& v, auto& k) { c.grid_points = static_cast<int>(to_int(v, k)); }},
        {"margins.fit_scope",
         [](auto& c, auto& v, auto& k) {
             if (v == "training") c.margin_scope = MarginScope::training;
             else if (v == "full_sample") c.margin_scope = MarginScope::full_sample;
             else throw ConfigError(k + ": expected training or full_sample");
         }},
        {"margins.shift", [](auto& c, auto& v, auto& k) { c.transform.shift = to_double(v, k); }},
        {"margins.lower_price", [](auto& c, auto& v, auto& k) { c.transform.lower_price = to_double(v, k); }},
        {"margins.upper_price", [](auto& c, auto& v, auto& k) { c.transform.upper_price = to_double(v, k); }},
        {"margins.log_cap", [](auto& c, auto& v, auto& k) { c.log_cap = to_bool(v, k); }},
        {"margins.regimes", [](auto& c, auto& v, auto&) { c.regimes = parse_regimes(v); }},
        {"backtest.train_window", [](auto& c, auto& v, auto&) { c.train_window = Duration::parse(v); }},
        {"backtest.refit_cadence", [](auto& c, auto& v, auto&) { c.refit_cadence = Duration::parse(v); }},
        {"backtest.origin_cadence", [](auto& c, auto& v, auto&) { c.origin_cadence = Duration::parse(v); }},
        {"backtest.horizon", [](auto& c, auto& v, auto& k) { c.horizon = static_cast<int>(to_int(v, k)); }},
        {"backtest.eval_start",
         [](auto& c, auto& v, auto& k) {
             if (v.empty() || v == "auto") c.eval_start.reset();
             else c.eval_start = to_time(v, k);
         }},
        {"backtest.eval_end",
         [](auto& c, auto& v, auto& k) {
             if (v.empty() || v == "auto") c.eval_end.reset();
             else c.eval_end = to_time(v, k);
         }},
        {"backtest.max_origins",
         [](auto& c, auto& v, auto& k) {
             if (v.empty() || v == "all") c.max_origins.reset();
             else c.max_origins = to_int(v, k);
         }},
        {"backtest.families",
         [](auto& c, auto& v, auto&) {
             c.families.clear();
             for (const auto& f : split_list(v)) c.families.push_back(parse_family(f));
         }},
        {"backtest.n_path", [](auto& c, auto& v, auto& k) { c.n_path = static_cast<int>(to_int(v, k)); }},
        {"backtest.shared_config_index", [](auto& c, auto& v, auto& k) { c.shared_config_index = to_bool(v, k); }},
        {"backtest.keep_paths", [](auto& c, auto& v, auto& k) { c.keep_paths = to_bool(v, k); }},
        {"scoring.weights",
         [](auto& c, auto& v, auto& k) {
             c.weights.clear();
             if (v == "default" || v.empty()) return;
             for (const auto& w : split_list(v)) c.weights.push_back(to_double(w, k));
         }},
        {"scoring.tail_alpha", [](auto& c, auto& v, auto& k) { c.tail_alpha = to_double(v, k); }},
        {"scoring.calibration_points",
         [](auto& c, auto& v, auto& k) { c.calibration_points = static_cast<int>(to_int(v, k)); }},
        {"scoring.report_steps",
         [](auto& c, auto& v, auto&) { c.report_steps = v == "all" ? std::vector<int>{} : parse_lag_list(v); }},
        {"run.seed", [](auto& c, auto& v, auto& k) { c.seed = static_cast<std::uint64_t>(to_int(v, k)); }},
        {"run.threads", [](auto& c, auto& v, auto& k) { c.threads = static_cast<int>(to_int(v, k)); }},
        {"run.serial", [](auto& c, auto& v, auto& k) { c.serial = to_bool(v, k); }},
        {"run.audit", [](auto& c, auto& v, auto& k) { c.audit = to_bool(v, k); }},
        {"run.output_dir", [](auto& c, auto& v, auto&) { c.output_dir = v; }},
        {"run.fits_dir", [](auto& c, auto& v, auto&) { c.fits_dir = v; }},
        {"run.reuse_fits", [](auto& c, auto& v, auto& k) { c.reuse_fits = to_bool(v, k); }},
        {"run.audit_start", [](auto& c, auto& v, auto& k) { c.audit_start = to_time(v, k); }},
        {"run.audit_end", [](auto& c, auto& v, auto& k) { c.audit_end = to_time(v, k); }},
        {"run.spacing", [](auto& c, auto& v, auto&) {
             const Duration d = Duration::parse(v);
             if (d.unit != Duration::Unit::seconds) throw ConfigError("run.spacing must be given in min, h or d");
             c.spacing = d.count;
         }},
    };
    return table;
}

}  // namespace

Duration Duration::parse(const std::string& raw) {
    const std::string text = trim(raw);
    std::size_t i = 0;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
    if (i == 0) throw ConfigError("duration '" + raw + "' must start with a count");
    const std::int64_t n = std::stoll(text.substr(0, i));
    const std::string unit = trim(text.substr(i));
    Duration d;
    d.count = n;
    if (unit.empty() || unit == "steps" || unit == "step") d.unit = Unit::steps;
    else if (unit == "min") { d.unit = Unit::seconds; d.count = n * 60; }
    else if (unit == "h") { d.unit = Unit::seconds; d.count = n * 3600; }
    else if (unit == "d") { d.unit = Unit::seconds; d.count = n * 86400; }
    else if (unit == "M" || unit == "months" || unit == "month") d.unit = Unit::months;
    else throw ConfigError("duration '" + raw + "': unknown unit '" + unit + "'");
    return d;
}

std::string Duration::str() const {
    switch (unit) {
        case Unit::steps: return std::to_string(count) + "steps";
        case Unit::months: return std::to_string(count) + "M";
        case Unit::seconds:
            if (count % 86400 == 0) return std::to_string(count / 86400) + "d";
            if (count % 3600 == 0) return std::to_string(count / 3600) + "h";
            return std::to_string(count / 60) + "min";
    }
    return {};
}

std::int64_t Duration::fixed_steps(std::int64_t spacing) const {
    switch (unit) {
        case Unit::steps: return count;
        case Unit::seconds:
            if (count % spacing != 0) throw ConfigError("duration " + str() + " is not a whole number of steps");
            return count / spacing;
        case Unit::months: break;
    }
    throw ConfigError("duration " + str() + " is calendar based");
}

void BacktestConfig::validate() const {
    try {
        reservoir.validate();
        gaussian_prior.validate();
        skew_t_prior.validate();
        weibull_prior.validate();
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    if (K < 1) throw ConfigError("reservoir.K must be >= 1");
    if (mcmc.n_iter < 1 || mcmc.n_burn < 0 || mcmc.n_burn >= mcmc.n_iter)
        throw ConfigError("mcmc: need n_iter >= 1 and 0 <= n_burn < n_iter");
    if (horizon < 1) throw ConfigError("backtest.horizon must be >= 1");
    if (n_path < 1) throw ConfigError("backtest.n_path must be >= 1");
    if (families.empty()) throw ConfigError("backtest.families is empty");
    if (short_lags.empty() && long_lags.empty()) throw ConfigError("features: no lags");
    for (int l : short_lags)
        if (l < 1) throw ConfigError("features: lags must be >= 1");
    for (int l : long_lags)
        if (l < 1) throw ConfigError("features: lags must be >= 1");
    if (train_window.count < 1 || refit_cadence.count < 1 || origin_cadence.count < 1)
        throw ConfigError("backtest: durations must be positive");
    if (origin_cadence.unit == Duration::Unit::months) throw ConfigError("backtest.origin_cadence cannot be in months");
    if (train_window.unit != Duration::Unit::months && train_window.fixed_steps(spacing) <= max_lag())
        throw ConfigError("backtest.train_window (" + train_window.str() + ") is shorter than the maximum lag (" +
                          std::to_string(max_lag()) + " steps)");
    if (!(tail_alpha > 0.5 && tail_alpha < 1.0)) throw ConfigError("scoring.tail_alpha must lie in (0.5, 1)");
    if (calibration_points < 2) throw ConfigError("scoring.calibration_points must be >= 2");
    if (reuse_fits && fits_dir.empty()) throw ConfigError("run.reuse_fits needs run.fits_dir");
    if (shared_config_index && use_posterior_draws && K < 1) throw ConfigError("inconsistent sampling options");
    if (grid_points < 16) throw ConfigError("margins.grid_points must be >= 16");
    for (double w : weights)
        if (w < 0.0) throw ConfigError("scoring.weights must be nonnegative");
}

int BacktestConfig::max_lag() const {
    int m = 0;
    for (int l : short_lags) m = std::max(m, l);
    for (int l : long_lags) m = std::max(m, l);
    return m;
}

FeatureSpec BacktestConfig::feature_spec(const std::vector<std::string>& panel_series, const std::string& series,
                                         Family family) const {
    FeatureSpec f;
    f.series_ids = cross_series_lags ? panel_series : std::vector<std::string>{series};
    f.short_lags = short_lags;
    f.long_lags = long_lags;
    f.exogenous = exogenous;
    f.exogenous_forward = exogenous_forward;
    f.include_intercept = include_intercept;
    f.value_scale = family == Family::copula ? ValueScale::normal_score : ValueScale::raw_y;
    return f;
}

FitSettings BacktestConfig::fit_settings() const {
    FitSettings s;
    s.reservoir = reservoir;
    s.K = K;
    s.mcmc = mcmc;
    s.gaussian_prior = gaussian_prior;
    s.skew_t_prior = skew_t_prior;
    s.nu_skew_t = nu_skew_t;
    s.nu_skew_normal = nu_skew_normal;
    s.weibull_prior = weibull_prior;
    s.target_acceptance = target_acceptance;
    s.keep_posterior_draws = keep_posterior_draws;
    s.seed = seed;
    s.exec = serial ? Exec::serial : Exec::parallel;
    return s;
}

PanelSchema BacktestConfig::panel_schema() const {
    PanelSchema p;
    p.spacing = spacing;
    p.transform = transform;
    p.log_cap = log_cap;
    p.regimes = regimes;
    return p;
}

void set_config_value(BacktestConfig& c, const std::string& section, const std::string& key,
                      const std::string& value) {
    const std::string k = key_name(section, key);
    const auto& table = setters();
    auto it = table.find(k);
    if (it == table.end()) throw ConfigError("unknown configuration key '" + k + "'");
    it->second(c, trim(value), k);
}

BacktestConfig load_config(const std::string& path) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(path, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("cannot read config '" + path + "': " + e.message() + " (line " +
                          std::to_string(e.line()) + ")");
    }
    BacktestConfig c;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ConfigError("config '" + path + "': key '" + section + "' outside any section");
        for (const auto& [key, value] : body) set_config_value(c, section, key, value.data());
    }
    c.validate();
    return c;
}

void apply_overrides(BacktestConfig& c, const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        const auto dot = o.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            throw ConfigError("override '" + o + "' must look like section.key=value");
        set_config_value(c, trim(o.substr(0, dot)), trim(o.substr(dot + 1, eq - dot - 1)), o.substr(eq + 1));
    }
    c.validate();
}

std::string render_config(const BacktestConfig& c) {
    std::ostringstream os;
    auto d = fmt_double;
    auto b = [](bool v) { return std::string(v ? "true" : "false"); };
    auto t = [](std::int64_t v) { return format_timestamp(v); };
    os << "[reservoir]\n"
       << "n_h = " << c.reservoir.n_h << "\n"
       << "delta = " << d(c.reservoir.delta) << "\n"
       << "kappa = " << d(c.reservoir.kappa) << "\n"
       << "a_v = " << d(c.reservoir.a_v) << "\n"
       << "a_u = " << d(c.reservoir.a_u) << "\n"
       << "pi_v = " << d(c.reservoir.pi_v) << "\n"
       << "pi_u = " << d(c.reservoir.pi_u) << "\n"
       << "K = " << c.K << "\n\n";
    os << "[mcmc]\n"
       << "n_iter = " << c.mcmc.n_iter << "\n"
       << "n_burn = " << c.mcmc.n_burn << "\n"
       << "keep_draws = " << c.keep_posterior_draws << "\n"
       << "use_draws = " << b(c.use_posterior_draws) << "\n\n";
    os << "[gaussian_prior]\n"
       << "a = " << d(c.gaussian_prior.a) << "\nb = " << d(c.gaussian_prior.b) << "\n"
       << "a_tilde = " << d(c.gaussian_prior.a_tilde) << "\nb_tilde = " << d(c.gaussian_prior.b_tilde) << "\n\n";
    os << "[skew_t_prior]\n"
       << "D0 = " << d(c.skew_t_prior.D0) << "\nc0 = " << d(c.skew_t_prior.c0) << "\n"
       << "C0 = " << (c.skew_t_prior.C0 ? d(*c.skew_t_prior.C0) : std::string("auto")) << "\n"
       << "b0 = " << d(c.skew_t_prior.b0) << "\nB0 = " << d(c.skew_t_prior.B0) << "\n"
       << "nu_skew_t = " << d(c.nu_skew_t) << "\nnu_skew_normal = " << d(c.nu_skew_normal) << "\n\n";
    os << "[copula]\n"
       << "weibull_shape = " << d(c.weibull_prior.shape) << "\nweibull_scale = " << d(c.weibull_prior.scale) << "\n"
       << "target_acceptance = " << d(c.target_acceptance) << "\n\n";
    os << "[features]\n"
       << "short_lags = " << fmt_lags(c.short_lags) << "\n"
       << "long_lags = " << fmt_lags(c.long_lags) << "\n"
       << "exogenous = " << join(c.exogenous, [](const std::string& s) { return s; }) << "\n"
       << "exogenous_forward = " << b(c.exogenous_forward) << "\n"
       << "intercept = " << b(c.include_intercept) << "\n"
       << "cross_series_lags = " << b(c.cross_series_lags) << "\n\n";
    os << "[margins]\n"
       << "bandwidth = " << (c.bandwidth ? d(*c.bandwidth) : std::string("auto")) << "\n"
       << "grid_points = " << c.grid_points << "\n"
       << "fit_scope = " << (c.margin_scope == MarginScope::training ? "training" : "full_sample") << "\n"
       << "shift = " << d(c.transform.shift) << "\n"
       << "lower_price = " << d(c.transform.lower_price) << "\n"
       << "upper_price = " << d(c.transform.upper_price) << "\n"
       << "log_cap = " << b(c.log_cap) << "\n"
       << "regimes = "
       << join(c.regimes, [&](const Regime& r) { return t(r.effective).substr(0, 10) + ":" + d(r.cap); }) << "\n\n";
    os << "[backtest]\n"
       << "train_window = " << c.train_window.str() << "\n"
       << "refit_cadence = " << c.refit_cadence.str() << "\n"
       << "origin_cadence = " << c.origin_cadence.str() << "\n"
       << "horizon = " << c.horizon << "\n"
       << "eval_start = " << (c.eval_start ? t(*c.eval_start) : std::string("auto")) << "\n"
       << "eval_end = " << (c.eval_end ? t(*c.eval_end) : std::string("auto")) << "\n"
       << "max_origins = " << (c.max_origins ? std::to_string(*c.max_origins) : std::string("all")) << "\n"
       << "families = " << join(c.families, [](Family f) { return to_string(f); }) << "\n"
       << "n_path = " << c.n_path << "\n"
       << "shared_config_index = " << b(c.shared_config_index) << "\n"
       << "keep_paths = " << b(c.keep_paths) << "\n\n";
    os << "[scoring]\n"
       << "weights = " << (c.weights.empty() ? std::string("default") : join(c.weights, d)) << "\n"
       << "tail_alpha = " << d(c.tail_alpha) << "\n"
       << "calibration_points = " << c.calibration_points << "\n"
       << "report_steps = " << (c.report_steps.empty() ? std::string("all") : fmt_lags(c.report_steps)) << "\n\n";
    os << "[run]\n"
       << "seed = " << c.seed << "\n"
       << "threads = " << c.threads << "\n"
       << "serial = " << b(c.serial) << "\n"
       << "audit = " << b(c.audit) << "\n"
       << "output_dir = " << c.output_dir << "\n"
       << "fits_dir = " << c.fits_dir << "\n"
       << "reuse_fits = " << b(c.reuse_fits) << "\n"
       << "audit_start = " << t(c.audit_start) << "\n"
       << "audit_end = " << t(c.audit_end) << "\n"
       << "spacing = " << Duration{Duration::Unit::seconds, c.spacing}.str() << "\n";
    return os.str();
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string results_hash(const BacktestConfig& config) {
    BacktestConfig c = config;
    c.output_dir.clear();
    c.fits_dir.clear();
    c.reuse_fits = false;
    c.threads = 0;
    c.serial = false;
    c.audit = false;
    return fnv1a_hex(render_config(c));
}

}  // namespace qesn
