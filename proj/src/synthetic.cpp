#include "qesn/synthetic.hpp"
#include "qesn/bayes.hpp"
#include "qesn/copula.hpp"
#include "qesn/random.hpp"
#include "qesn/special.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qesn {

std::string to_string(SynthFamily f) {
    switch (f) {
        case SynthFamily::gaussian_esn: return "gaussian_esn";
        case SynthFamily::skew_t_esn: return "skew_t_esn";
        case SynthFamily::copula_esn: return "copula_esn";
        case SynthFamily::gaussian_var: return "gaussian_var";
    }
    return "unknown";
}

SynthFamily parse_synth_family(const std::string& name) {
    if (name == "gaussian_esn") return SynthFamily::gaussian_esn;
    if (name == "skew_t_esn") return SynthFamily::skew_t_esn;
    if (name == "copula_esn") return SynthFamily::copula_esn;
    if (name == "gaussian_var") return SynthFamily::gaussian_var;
    throw ConfigError("unknown synthetic family '" + name + "'");
}

double SkewedMargin::quantile(double u) const { return offset + std::exp(log_mu + log_sigma * normal_quantile(u)); }

double SkewedMargin::cdf(double y) const {
    if (y <= offset) return 0.0;
    return normal_cdf((std::log(y - offset) - log_mu) / log_sigma);
}

void SynthSpec::validate() const {
    if (n_series < 1) throw InvalidArgument("synth: n_series must be >= 1");
    if (T < 1) throw InvalidArgument("synth: T must be >= 1");
    if (warmup < 0) throw InvalidArgument("synth: warmup must be >= 0");
    if (sigma2 < 0.0) throw InvalidArgument("synth: sigma2 must be >= 0");
    if (family == SynthFamily::gaussian_var) {
        if (!(std::abs(var_coef) < 1.0)) throw InvalidArgument("synth: |var_coef| must be < 1");
        return;
    }
    if (reservoir.delta >= 1.0) throw InvalidArgument("synth: explosive reservoir (delta >= 1) rejected");
    reservoir.validate();
    if (short_lags.empty() && long_lags.empty()) throw InvalidArgument("synth: ESN families need at least one lag");
    if (family == SynthFamily::skew_t_esn && !(nu > 0.0)) throw InvalidArgument("synth: nu must be > 0");
    if (family == SynthFamily::copula_esn) {
        if (!(tau2 > 0.0)) throw InvalidArgument("synth: tau2 must be > 0");
        if (!(margin.log_sigma > 0.0)) throw InvalidArgument("synth: margin log_sigma must be > 0");
    }
}

FeatureSpec SynthSpec::feature_spec(const std::vector<std::string>& ids) const {
    FeatureSpec f;
    f.series_ids = ids;
    f.short_lags = short_lags;
    f.long_lags = long_lags;
    f.include_intercept = true;
    f.value_scale = family == SynthFamily::copula_esn ? ValueScale::normal_score : ValueScale::raw_y;
    return f;
}

namespace {

TimeSeriesPanel empty_panel(const SynthSpec& spec, const std::vector<std::string>& ids) {
    TimeSeriesPanel p;
    p.spacing = spec.spacing;
    p.transform = spec.transform;
    p.series_ids = ids;
    p.timestamps.resize(static_cast<std::size_t>(spec.T));
    for (std::int64_t t = 0; t < spec.T; ++t) p.timestamps[static_cast<std::size_t>(t)] = spec.start_time + t * spec.spacing;
    p.y.assign(ids.size(), std::vector<double>(static_cast<std::size_t>(spec.T)));
    return p;
}

SynthResult generate_var(const SynthSpec& spec, const std::vector<std::string>& ids) {
    SynthResult r;
    r.truth.spec = spec;
    r.panel = empty_panel(spec, ids);
    Rng rng(derive_seed(spec.seed, 0x7661));
    const double sd = std::sqrt(spec.sigma2);
    const double stationary_sd = sd / std::sqrt(1.0 - spec.var_coef * spec.var_coef);
    std::vector<double> y(ids.size());
    for (auto& v : y) v = spec.level + stationary_sd * rng.normal();
    for (std::int64_t t = -spec.warmup; t < spec.T; ++t) {
        for (std::size_t s = 0; s < ids.size(); ++s) {
            y[s] = spec.level + spec.var_coef * (y[s] - spec.level) + sd * rng.normal();
            if (t >= 0) r.panel.y[s][static_cast<std::size_t>(t)] = y[s];
        }
    }
    for (const auto& id : ids) {
        SeriesTruth st;
        st.series_id = id;
        st.sigma2 = spec.sigma2;
        st.beta = {spec.level * (1.0 - spec.var_coef), spec.var_coef};
        r.truth.series.push_back(std::move(st));
    }
    return r;
}

}  // namespace

SynthResult generate(const SynthSpec& spec) {
    spec.validate();
    std::vector<std::string> ids;
    for (int s = 0; s < spec.n_series; ++s) ids.push_back("S" + std::to_string(s + 1));
    if (spec.family == SynthFamily::gaussian_var) return generate_var(spec, ids);

    const bool copula = spec.family == SynthFamily::copula_esn;
    SynthResult r;
    r.truth.spec = spec;
    r.truth.features = spec.feature_spec(ids);
    r.panel = empty_panel(spec, ids);
    const double lower = r.panel.lower_y(), upper = r.panel.upper_y_at(0);

    const int max_lag = r.truth.features.max_lag();
    const std::int64_t n_total = max_lag + spec.warmup + spec.T;
    const std::int64_t record_from = max_lag + spec.warmup;

    FeatureFrame frame;
    frame.series_ids = ids;
    frame.values.assign(ids.size(), std::vector<double>(static_cast<std::size_t>(n_total), 0.0));
    FeatureLayout layout(r.truth.features, frame);

    Rng rng(derive_seed(spec.seed, 0x6e6f697365));
    const double sd = std::sqrt(spec.sigma2);
    const int p = 2 * spec.reservoir.n_h + (copula ? 0 : 1);

    std::vector<ReservoirWeights> weights;
    std::vector<Vector> h;
    std::vector<Vector> beta;
    for (std::size_t s = 0; s < ids.size(); ++s) {
        SeriesTruth st;
        st.series_id = ids[s];
        st.reservoir = spec.reservoir;
        st.reservoir.seed = derive_seed(spec.seed, 0x7265, s);
        weights.push_back(sample_weights(st.reservoir, layout.n_x));
        h.push_back(Vector::Zero(spec.reservoir.n_h));
        Vector b(p);
        if (!spec.beta.empty()) {
            if (static_cast<int>(spec.beta.size()) != p)
                throw DimensionError("synth: beta must have length " + std::to_string(p));
            for (int j = 0; j < p; ++j) b[j] = spec.beta[static_cast<std::size_t>(j)];
        } else {
            Rng brng(derive_seed(spec.seed, 0x6265, s));
            for (int j = 0; j < p; ++j)
                b[j] = copula ? brng.normal() / std::sqrt(spec.tau2) : spec.beta_scale * brng.normal() / std::sqrt(p);
            if (!copula) b[0] = spec.level;
        }
        st.beta.assign(b.data(), b.data() + p);
        st.sigma2 = copula ? 1.0 : spec.sigma2;
        st.psi = spec.family == SynthFamily::skew_t_esn ? spec.psi : 0.0;
        st.nu = spec.family == SynthFamily::skew_t_esn ? spec.nu : 0.0;
        st.tau2 = copula ? spec.tau2 : 0.0;
        beta.push_back(std::move(b));
        r.truth.series.push_back(std::move(st));
        // Warm-up lags from the stationary noise.
        for (int t = 0; t < max_lag; ++t)
            frame.values[s][static_cast<std::size_t>(t)] = copula ? rng.normal() : spec.level + sd * rng.normal();
    }

    std::vector<double> x(static_cast<std::size_t>(layout.n_x)), brow(static_cast<std::size_t>(p));
    ReservoirWorkspace ws(spec.reservoir.n_h);
    for (std::int64_t t = max_lag; t < n_total; ++t) {
        make_features(frame, layout, t, x);
        for (std::size_t s = 0; s < ids.size(); ++s) {
            advance_state(weights[s], r.truth.series[s].reservoir, x,
                          {h[s].data(), static_cast<std::size_t>(h[s].size())}, ws);
            design_row({h[s].data(), static_cast<std::size_t>(h[s].size())}, !copula, brow);
            double mean = 0.0;
            for (int j = 0; j < p; ++j) mean += brow[static_cast<std::size_t>(j)] * beta[s][j];
            double value = 0.0, y = 0.0;
            if (copula) {
                const double psi_t = psi_scale(brow, spec.tau2);
                value = psi_t * (mean + rng.normal());
                y = std::clamp(spec.margin.quantile(normal_cdf(value)), lower, upper);
            } else {
                // The observation model is truncated to the price bounds, so
                // out-of-range draws are rejected and redrawn.
                int attempt = 0;
                do {
                    if (++attempt > 1000)
                        throw NumericError("synth: conditional mean " + std::to_string(mean) +
                                           " leaves no mass inside the price bounds");
                    const double e = spec.family == SynthFamily::gaussian_esn
                                         ? sd * rng.normal()
                                         : draw_skew_t_latent(rng, spec.psi, spec.sigma2, spec.nu);
                    value = y = mean + e;
                } while (y < lower || y > upper);
            }
            frame.values[s][static_cast<std::size_t>(t)] = value;
            if (t >= record_from) {
                const auto i = static_cast<std::size_t>(t - record_from);
                r.panel.y[s][i] = y;
                r.truth.series[s].mean.push_back(copula ? psi_scale(brow, spec.tau2) * mean : mean);
                if (copula) r.truth.series[s].z.push_back(value);
            }
        }
    }
    return r;
}

DemandColumns make_demand_quantile_columns(const TimeSeriesPanel& panel, double noise_scale, std::uint64_t seed) {
    if (panel.length() == 0 || panel.series_ids.empty()) throw InvalidArgument("demand columns: empty panel");
    if (noise_scale < 0.0) throw InvalidArgument("demand columns: noise_scale must be >= 0");
    const auto n = static_cast<std::size_t>(panel.length());
    std::vector<double> avg(n, 0.0);
    for (const auto& s : panel.y)
        for (std::size_t t = 0; t < n; ++t) avg[t] += s[t] / static_cast<double>(panel.y.size());
    const double m = std::accumulate(avg.begin(), avg.end(), 0.0) / static_cast<double>(n);
    double v = 0.0;
    for (double a : avg) v += (a - m) * (a - m);
    const double sd = v > 0.0 ? std::sqrt(v / static_cast<double>(n)) : 1.0;

    Rng rng(derive_seed(seed, 0x64656d));
    DemandColumns d;
    d.d10.resize(n);
    d.d50.resize(n);
    d.d90.resize(n);
    d.realized.resize(n);
    const double z10 = normal_quantile(0.1), z90 = normal_quantile(0.9);
    double u = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        u = 0.9 * u + 0.3 * rng.normal();
        const double c = 100.0 + 10.0 * (avg[t] - m) / sd + u;
        d.d10[t] = c + noise_scale * z10;
        d.d50[t] = c;
        d.d90[t] = c + noise_scale * z90;
        d.realized[t] = c + noise_scale * rng.normal();
    }
    return d;
}

void add_demand_columns(TimeSeriesPanel& panel, const DemandColumns& d) {
    if (d.d10.size() != static_cast<std::size_t>(panel.length()))
        throw DimensionError("demand columns: length differs from the panel");
    panel.exog_names.insert(panel.exog_names.end(), {"D10", "D50", "D90"});
    panel.exog.push_back(d.d10);
    panel.exog.push_back(d.d50);
    panel.exog.push_back(d.d90);
}

}  // namespace qesn
