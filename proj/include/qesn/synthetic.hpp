#pragma once

#include "qesn/features.hpp"
#include "qesn/panel.hpp"
#include "qesn/reservoir.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qesn {

enum class SynthFamily { gaussian_esn, skew_t_esn, copula_esn, gaussian_var };

std::string to_string(SynthFamily f);
SynthFamily parse_synth_family(const std::string& name);

/// Shifted lognormal margin y = offset + exp(log_mu + log_sigma * N(0,1)),
/// clamped to the panel bounds; used by copula_esn.
struct SkewedMargin {
    double offset = 5.5;
    double log_mu = -0.7;
    double log_sigma = 0.6;
    double quantile(double u) const;
    double cdf(double y) const;
};

struct SynthSpec {
    SynthFamily family = SynthFamily::gaussian_esn;
    int n_series = 1;
    std::int64_t T = 1000;
    std::uint64_t seed = 1;
    int warmup = 500;

    /// ESN families: reservoir and lag structure of the generating model.
    ReservoirConfig reservoir{.n_h = 30};
    std::vector<int> short_lags{1, 2};
    std::vector<int> long_lags{};
    /// Output layer. Empty beta means draw one per series: intercept `level`
    /// (not for copula) and slopes N(0, beta_scale^2 / p).
    std::vector<double> beta;
    double level = 7.0;
    double beta_scale = 0.5;
    double sigma2 = 0.04;
    double psi = 0.3;    // skew_t_esn
    double nu = 7.0;     // skew_t_esn
    double tau2 = 1.0;   // copula_esn: beta ~ N(0, I / tau2) when drawn
    SkewedMargin margin; // copula_esn

    /// gaussian_var: y_t - level = A (y_{t-1} - level) + e, A diagonal.
    double var_coef = 0.5;

    std::int64_t start_time = 1546300800;  // 2019-01-01T00:00Z
    std::int64_t spacing = 1800;
    PriceTransform transform;

    void validate() const;
    FeatureSpec feature_spec(const std::vector<std::string>& ids) const;
};

struct SeriesTruth {
    std::string series_id;
    ReservoirConfig reservoir;  // seed reproduces the generating weights
    std::vector<double> beta;
    double sigma2 = 0.0;
    double psi = 0.0;
    double nu = 0.0;
    double tau2 = 0.0;
    /// Deterministic part b_t'beta per recorded step (ESN families).
    std::vector<double> mean;
    /// Latent normal scores per recorded step (copula_esn).
    std::vector<double> z;
};

struct SynthTruth {
    SynthSpec spec;
    FeatureSpec features;
    std::vector<SeriesTruth> series;
};

struct SynthResult {
    TimeSeriesPanel panel;
    SynthTruth truth;
};

SynthResult generate(const SynthSpec& spec);

struct DemandColumns {
    std::vector<double> d10, d50, d90;
    std::vector<double> realized;  // latent demand realizations
};

/// Forecast quantiles c_t + s * Phi^{-1}(q) of a latent demand path c_t
/// that tracks the panel's system average; realizations are c_t + s * N(0,1).
DemandColumns make_demand_quantile_columns(const TimeSeriesPanel& panel, double noise_scale, std::uint64_t seed);
/// Appends D10, D50, D90 as exogenous columns.
void add_demand_columns(TimeSeriesPanel& panel, const DemandColumns& d);

}  // namespace qesn
