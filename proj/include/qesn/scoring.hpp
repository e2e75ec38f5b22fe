#pragma once

#include "qesn/common.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace qesn {

/// Pinball loss 2(I(y < q) - alpha)(q - y).
double quantile_score(double q, double y, double alpha);

/// CRPS as the quantile-score integral over levels i/(n_grid+1). The
/// integrand vanishes at both ends, so the trapezoid rule reduces to
/// sum / (n_grid + 1).
double crps(const std::function<double(double)>& quantile_function, double y, int n_grid = 199);
/// Same, using empirical quantiles of a sorted sample.
double crps_sorted(std::span<const double> sorted, double y, int n_grid = 199);
/// Same, from quantiles already evaluated at levels i/(n+1), i = 1..n.
double crps_from_quantiles(std::span<const double> quantiles, double y);
/// Sample form E|X - y| - E|X - X'| / 2 of a sorted sample (for checks).
double crps_energy_form(std::span<const double> sorted, double y);

/// Joint (VaR, expected longrise) loss with G1(x) = x and G2 = G3 = exp.
double upper_tail_loss(double q, double el, double y, double alpha = 0.975);

/// Mean of sample values strictly above the empirical alpha quantile (the
/// quantile itself when nothing exceeds it).
double expected_longrise(std::span<const double> sorted, double alpha = 0.975);

double interval_coverage(std::span<const double> lower, std::span<const double> upper, std::span<const double> y);

struct PointErrors {
    double mae = 0.0;
    double rmse = 0.0;
};
PointErrors point_errors(std::span<const double> forecast, std::span<const double> y);

double system_weighted(std::span<const double> values, std::span<const double> weights);

/// NSW 0.3687, VIC 0.2355, QLD 0.2818, SA 0.0624, TAS 0.0516 when every id
/// names one of those regions (a trailing "1" as in "NSW1" is accepted);
/// equal weights otherwise.
std::vector<double> default_system_weights(const std::vector<std::string>& series_ids);

struct CalibrationCurves {
    std::vector<double> y_grid;
    std::vector<double> H_hat;
    std::vector<double> F_bar;
    double sup_distance() const;
};

/// H_hat is the empirical CDF of the observations, F_bar the average of the
/// forecasts' empirical CDFs. sorted_samples[i] pairs with observations[i].
CalibrationCurves marginal_calibration(const std::vector<std::vector<double>>& sorted_samples,
                                       std::span<const double> observations, std::span<const double> y_grid);
/// Same with predictive CDFs given as callables.
CalibrationCurves marginal_calibration(const std::vector<std::function<double(double)>>& cdfs,
                                       std::span<const double> observations, std::span<const double> y_grid);

struct DmResult {
    double statistic = 0.0;
    double p_value = 1.0;
    bool degenerate = false;
};

/// Diebold-Mariano test on loss_a - loss_b with a Bartlett long-run
/// variance of lag horizon_step - 1 and a normal reference.
DmResult dm_test(std::span<const double> loss_a, std::span<const double> loss_b, int horizon_step);

struct ScoreEntry {
    std::string model;
    std::string series;  // a series id or "system"
    int step = 1;
    std::string metric;
    double value = 0.0;
};

struct ScoreReport {
    std::vector<ScoreEntry> entries;
    std::vector<std::string> series;
    std::vector<double> weights;
    std::vector<std::string> models;
    int horizon = 0;
    std::int64_t n_origins = 0;
    std::int64_t window_begin = 0;  // first origin index
    std::int64_t window_end = 0;    // last origin index

    /// Throws NumericError for non-finite values or out-of-range metrics.
    void validate() const;
    /// NaN when absent.
    double value(const std::string& model, const std::string& series, int step, const std::string& metric) const;
};

/// Metric blocks in report order.
const std::vector<std::string>& score_metrics();

/// Per-forecast losses kept for the DM tests and the report.
class ScoreAccumulator {
public:
    ScoreAccumulator(std::vector<std::string> series, std::vector<double> weights, int horizon,
                     double tail_alpha = 0.975);

    /// Scores one forecast cell from its quantiles at levels i/200 (199
    /// values), its mean, its expected longrise and the realized value.
    void add(const std::string& model, int step, int series_index, std::span<const double> quantiles, double mean,
             double longrise, double realized);
    void note_origin(std::int64_t origin);

    ScoreReport report() const;
    /// Loss series (one value per origin) for a model, series, step and metric
    /// among CRPS, AE, SE, QS05, QS95, JS.
    const std::vector<double>& losses(const std::string& model, int series_index, int step,
                                      const std::string& metric) const;
    /// Weighted system loss series, aligned by origin.
    std::vector<double> system_losses(const std::string& model, int step, const std::string& metric) const;
    const std::vector<std::string>& models() const { return models_; }
    const std::vector<std::string>& series() const { return series_; }
    int horizon() const { return horizon_; }

private:
    struct Cell {
        std::map<std::string, std::vector<double>> loss;
        std::vector<double> covered;
    };
    Cell& cell(const std::string& model, int series_index, int step);
    const Cell* find(const std::string& model, int series_index, int step) const;

    std::vector<std::string> series_;
    std::vector<double> weights_;
    int horizon_;
    double tail_alpha_;
    std::vector<std::string> models_;
    std::map<std::string, std::vector<Cell>> cells_;  // model -> [series * horizon + step - 1]
    std::int64_t n_origins_ = 0;
    std::int64_t first_origin_ = -1;
    std::int64_t last_origin_ = -1;
};

/// Running F_bar and H_hat on a fixed grid, one curve per (model, series).
class CalibrationAccumulator {
public:
    CalibrationAccumulator(std::vector<double> y_grid, std::vector<std::string> series);
    void add(const std::string& model, int series_index, std::span<const double> sorted, double observed);
    /// Piecewise-linear CDF through (q_i, i/(n+1)), 0 below q_1, 1 above q_n.
    void add_quantiles(const std::string& model, int series_index, std::span<const double> quantiles,
                       double observed);
    CalibrationCurves curves(const std::string& model, int series_index) const;
    const std::vector<std::string>& models() const { return models_; }
    const std::vector<std::string>& series() const { return series_; }

private:
    struct Sums {
        std::vector<double> f_sum;
        std::vector<double> h_count;
        std::int64_t n = 0;
    };
    Sums& sums(const std::string& model, int series_index);
    std::vector<double> grid_;
    std::vector<std::string> series_;
    std::vector<std::string> models_;
    std::map<std::string, std::vector<Sums>> sums_;
};

/// CDF at y of the piecewise-linear interpolant of quantiles at i/(n+1).
double cdf_from_quantiles(std::span<const double> quantiles, double y);

/// Delimited text table: metric blocks by row, horizon steps by column.
std::string render_score_table(const ScoreReport& report, const std::vector<int>& steps = {});

}  // namespace qesn
