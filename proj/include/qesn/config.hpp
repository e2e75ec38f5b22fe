#pragma once

#include "qesn/bayes.hpp"
#include "qesn/copula.hpp"
#include "qesn/forecast.hpp"
#include "qesn/panel.hpp"
#include "qesn/reservoir.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qesn {

/// A span of time given as steps, seconds or calendar months.
struct Duration {
    enum class Unit { steps, seconds, months };
    Unit unit = Unit::steps;
    std::int64_t count = 0;

    /// "48steps", "30min", "12h", "7d", "3M" (calendar months); a bare
    /// integer means steps.
    static Duration parse(const std::string& text);
    std::string str() const;
    /// Number of steps when the duration is not calendar based.
    std::int64_t fixed_steps(std::int64_t spacing) const;
};

enum class MarginScope { training, full_sample };

struct BacktestConfig {
    ReservoirConfig reservoir;
    McmcOptions mcmc;
    GaussianRidgePrior gaussian_prior;
    SkewTPrior skew_t_prior;
    double nu_skew_t = 7.0;
    double nu_skew_normal = 30.0;
    WeibullTau2Prior weibull_prior;
    double target_acceptance = 0.44;

    // Features
    std::vector<int> short_lags = FeatureSpec::half_hourly_default({}).short_lags;
    std::vector<int> long_lags = FeatureSpec::half_hourly_default({}).long_lags;
    std::vector<std::string> exogenous;
    bool exogenous_forward = true;
    bool include_intercept = true;
    /// Lags of every panel series (true) or only the modelled series.
    bool cross_series_lags = true;

    // Margins and bounds
    std::optional<double> bandwidth;
    int grid_points = 2048;
    MarginScope margin_scope = MarginScope::training;
    PriceTransform transform;
    bool log_cap = false;
    std::vector<Regime> regimes;

    // Backtest schedule
    Duration train_window{Duration::Unit::months, 3};
    Duration refit_cadence{Duration::Unit::months, 1};
    Duration origin_cadence{Duration::Unit::steps, 1};
    int horizon = 48;
    std::optional<std::int64_t> eval_start;  // epoch seconds
    std::optional<std::int64_t> eval_end;    // epoch seconds, last origin
    std::optional<std::int64_t> max_origins;
    std::vector<Family> families{Family::copula};
    int K = 100;
    int n_path = 2000;
    std::uint64_t seed = 20190101;
    bool shared_config_index = false;
    bool use_posterior_draws = false;
    int keep_posterior_draws = 0;
    bool keep_paths = false;

    // Scoring
    std::vector<double> weights;  // empty: default_system_weights
    double tail_alpha = 0.975;
    int calibration_points = 512;
    std::vector<int> report_steps;  // empty: all steps

    // Run
    int threads = 0;  // 0: environment / runtime default
    bool serial = false;
    bool audit = false;
    std::string output_dir = "qesn_out";
    std::string fits_dir;   // save fits here when set
    bool reuse_fits = false;  // load fits from fits_dir instead of fitting

    // Audit calendar used when no panel is supplied.
    std::int64_t audit_start = 1546300800;  // 2019-01-01T00:00Z
    std::int64_t audit_end = 1577836800;    // 2020-01-01T00:00Z
    std::int64_t spacing = 1800;

    /// Throws ConfigError on inconsistent settings.
    void validate() const;
    FeatureSpec feature_spec(const std::vector<std::string>& panel_series, const std::string& series,
                             Family family) const;
    FitSettings fit_settings() const;
    PanelSchema panel_schema() const;
    int max_lag() const;
};

/// Reads an INI file; unknown sections or keys are ConfigErrors.
BacktestConfig load_config(const std::string& path);
/// Applies "section.key=value" overrides on top of a config.
void apply_overrides(BacktestConfig& config, const std::vector<std::string>& overrides);
/// Sets one key; section and key as in the INI file.
void set_config_value(BacktestConfig& config, const std::string& section, const std::string& key,
                      const std::string& value);
/// Canonical INI rendering; used for the manifest hash and the template.
std::string render_config(const BacktestConfig& config);
/// FNV-1a 64-bit hash in hex.
std::string fnv1a_hex(const std::string& text);
/// Hash of the settings that affect results. Output locations, fit reuse,
/// thread counts and the audit switch are left out.
std::string results_hash(const BacktestConfig& config);

}  // namespace qesn
