#pragma once

#include "qesn/bayes.hpp"
#include "qesn/copula.hpp"
#include "qesn/features.hpp"
#include "qesn/margins.hpp"
#include "qesn/reservoir.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qesn {

class Rng;

enum class Family { gaussian, skew_normal, skew_t, copula };

std::string to_string(Family f);
Family parse_family(const std::string& name);

/// One reservoir configuration of an ensemble with its plug-in parameters.
struct ConfigurationFit {
    ReservoirConfig reservoir;   // seed is the per-configuration seed
    ReservoirWeights weights;
    PointParameters params;      // beta, sigma2, tau2, psi, nu
    Vector h_last;               // hidden state at the last training row
    std::vector<PointParameters> draws;  // thinned posterior draws (optional)
    double acceptance_rate = 1.0;
};

struct ModelFit {
    Family family = Family::gaussian;
    std::string series_id;
    FeatureSpec features;
    ReservoirConfig reservoir;
    std::vector<ConfigurationFit> configs;
    std::optional<MarginModel> margin;  // copula only
    double lower_y = 0.0;               // truncation bounds (non-copula); fit_model leaves them for the caller
    double upper_y = 0.0;
    std::int64_t train_begin = 0;
    std::int64_t train_end = 0;

    int K() const { return static_cast<int>(configs.size()); }
    bool with_intercept() const { return family != Family::copula; }
};

struct FitSettings {
    ReservoirConfig reservoir;
    int K = 100;
    McmcOptions mcmc;
    GaussianRidgePrior gaussian_prior;
    SkewTPrior skew_t_prior;  // nu overridden per family
    double nu_skew_t = 7.0;
    double nu_skew_normal = 30.0;
    WeibullTau2Prior weibull_prior;
    double target_acceptance = 0.44;
    int keep_posterior_draws = 0;  // thinned draws retained per configuration
    std::uint64_t seed = 1;
    Exec exec = Exec::parallel;
};

/// Fits K configurations for one series on training rows [begin, end] of a
/// frame already on the family's feature scale. The response is the
/// frame's own column for the series.
ModelFit fit_model(const FeatureFrame& frame, const std::string& series_id, const FeatureSpec& spec, Family family,
                   std::int64_t begin, std::int64_t end, const FitSettings& settings,
                   ProvenanceAudit* audit = nullptr);

/// b'beta + noise from the family's error distribution (no truncation).
double predictive_draw_noncopula(std::span<const double> b_row, const PointParameters& params, Family family,
                                 Rng& rng);

/// Rejection resampling into [lower, upper]; clamps after max_attempts and
/// increments clamp_count.
template <typename Redraw>
double truncate_to_bounds(double sample, double lower, double upper, Redraw&& redraw, std::int64_t& clamp_count,
                          int max_attempts = 1000) {
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        if (sample >= lower && sample <= upper) return sample;
        sample = redraw();
    }
    if (sample >= lower && sample <= upper) return sample;
    ++clamp_count;
    return sample < lower ? lower : upper;
}

/// Hidden states of every (series, configuration) at one time index.
struct EnsembleState {
    std::int64_t time = -1;
    std::vector<std::vector<Vector>> h;  // [series][k]
};

/// States at the end of training, then advanced over observed data.
EnsembleState initial_state(const std::vector<ModelFit>& fits);
void advance_observed(EnsembleState& state, const std::vector<ModelFit>& fits, const FeatureFrame& frame,
                      std::int64_t to_time, ProvenanceAudit* audit = nullptr);

struct SimulationOptions {
    int horizon = 48;
    int n_path = 2000;
    std::uint64_t seed = 1;
    bool shared_config_index = false;
    bool use_posterior_draws = false;
    bool shuffle_series_order = false;
    bool keep_paths = true;
    /// Per-step upper truncation bound (regime-dated); empty uses fit.upper_y.
    std::vector<double> upper_y_by_step;
    Exec exec = Exec::parallel;
};

/// Default quantile levels: i/200 for i = 1..199.
std::vector<double> default_quantile_levels();

struct ForecastEnsemble {
    std::int64_t origin = 0;
    int horizon = 0;
    int n_path = 0;
    std::vector<std::string> series;
    std::vector<double> paths;  // [path][step][series] on the Y scale
    std::vector<double> levels;
    // Per (step, series), index step * n_series + s:
    std::vector<std::vector<double>> sorted;     // sorted draws
    std::vector<std::vector<double>> quantiles;  // at levels
    std::vector<double> mean;
    std::int64_t clamp_count = 0;

    std::size_t cell(int step, int s) const { return static_cast<std::size_t>(step) * series.size() + s; }
    double path_value(int path, int step, int s) const {
        return paths[(static_cast<std::size_t>(path) * horizon + step) * series.size() + s];
    }
};

/// Empirical quantile (linear interpolation between order statistics).
double sample_quantile(std::span<const double> sorted, double level);

/// Joint multi-step simulation. `fits` are one per series in simulation
/// order and must share a family; `frame` is on that family's feature
/// scale; `state` holds hidden states at `origin`.
ForecastEnsemble simulate_paths(const std::vector<ModelFit>& fits, const FeatureFrame& frame,
                                const EnsembleState& state, const SimulationOptions& options,
                                ProvenanceAudit* audit = nullptr);

/// Design rows for step h = 1 from the origin state: one per configuration.
std::vector<std::vector<double>> one_step_design_rows(const ModelFit& fit, const std::vector<Vector>& states,
                                                      std::span<const double> x_next);

/// Predictive density of one configuration (truncated and renormalized for
/// non-copula families).
double configuration_density(const ModelFit& fit, const PointParameters& params, std::span<const double> b_row,
                             double y, double upper_y);

/// Equal-weight mixture of the K configuration densities on a grid.
std::vector<double> ensemble_density(const ModelFit& fit, const std::vector<std::vector<double>>& b_rows,
                                     std::span<const double> y_grid, std::optional<double> upper_y = {});

}  // namespace qesn
