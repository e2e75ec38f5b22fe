#include "qesn/scoring.hpp"
#include "qesn/special.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace qesn {

namespace {

double empirical_quantile(std::span<const double> sorted, double level) {
    const double pos = level * static_cast<double>(sorted.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= sorted.size()) return sorted.back();
    const double f = pos - static_cast<double>(i);
    return sorted[i] + f * (sorted[i + 1] - sorted[i]);
}

void require_sorted_finite(std::span<const double> sorted, const char* who) {
    if (sorted.empty()) throw InvalidArgument(std::string(who) + ": empty sample");
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (!std::isfinite(sorted[i])) throw InvalidArgument(std::string(who) + ": sample contains NaN or inf");
        if (i > 0 && sorted[i] < sorted[i - 1]) throw InvalidArgument(std::string(who) + ": sample is not sorted");
    }
}

constexpr int kLevelCount = 199;
constexpr std::size_t kQ025 = 4, kQ05 = 9, kQ95 = 189, kQ975 = 194;

}  // namespace

double quantile_score(double q, double y, double alpha) {
    return 2.0 * ((y < q ? 1.0 : 0.0) - alpha) * (q - y);
}

double crps(const std::function<double(double)>& quantile_function, double y, int n_grid) {
    if (n_grid < 19) throw InvalidArgument("crps: n_grid must be >= 19");
    double acc = 0.0;
    for (int i = 1; i <= n_grid; ++i) {
        const double a = static_cast<double>(i) / (n_grid + 1);
        acc += quantile_score(quantile_function(a), y, a);
    }
    return acc / (n_grid + 1);
}

double crps_sorted(std::span<const double> sorted, double y, int n_grid) {
    require_sorted_finite(sorted, "crps_sorted");
    return crps([&](double a) { return empirical_quantile(sorted, a); }, y, n_grid);
}

double crps_from_quantiles(std::span<const double> quantiles, double y) {
    const auto n = static_cast<int>(quantiles.size());
    if (n < 19) throw InvalidArgument("crps_from_quantiles: need at least 19 levels");
    double acc = 0.0;
    for (int i = 1; i <= n; ++i)
        acc += quantile_score(quantiles[static_cast<std::size_t>(i - 1)], y, static_cast<double>(i) / (n + 1));
    return acc / (n + 1);
}

double crps_energy_form(std::span<const double> sorted, double y) {
    require_sorted_finite(sorted, "crps_energy_form");
    const auto n = static_cast<double>(sorted.size());
    double abs_y = 0.0, pair = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        abs_y += std::abs(sorted[i] - y);
        // sum_{i,j} |x_i - x_j| = 2 sum_i (2i - n + 1) x_(i) for sorted x
        pair += (2.0 * static_cast<double>(i) - n + 1.0) * sorted[i];
    }
    return abs_y / n - pair / (n * n);
}

double upper_tail_loss(double q, double el, double y, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("upper_tail_loss: alpha must lie in (0,1)");
    if (el > 700.0)
        throw DomainError("upper_tail_loss: expected longrise above 700 overflows exp; score on the log scale");
    const double e = std::exp(el);
    const double exceed = y >= q ? (-q + y - e * (q - y)) : 0.0;
    return exceed + (1.0 - alpha) * (q - e * (el - q) + e);
}

double expected_longrise(std::span<const double> sorted, double alpha) {
    require_sorted_finite(sorted, "expected_longrise");
    const double q = empirical_quantile(sorted, alpha);
    double acc = 0.0;
    std::size_t n = 0;
    for (auto it = std::upper_bound(sorted.begin(), sorted.end(), q); it != sorted.end(); ++it) {
        acc += *it;
        ++n;
    }
    return n == 0 ? q : acc / static_cast<double>(n);
}

double interval_coverage(std::span<const double> lower, std::span<const double> upper, std::span<const double> y) {
    if (lower.size() != upper.size() || lower.size() != y.size())
        throw DimensionError("interval_coverage: length mismatch");
    if (y.empty()) throw InvalidArgument("interval_coverage: empty input");
    std::size_t inside = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (lower[i] > upper[i]) throw InvalidArgument("interval_coverage: lower > upper");
        if (y[i] >= lower[i] && y[i] <= upper[i]) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(y.size());
}

PointErrors point_errors(std::span<const double> forecast, std::span<const double> y) {
    if (forecast.size() != y.size()) throw DimensionError("point_errors: length mismatch");
    if (y.empty()) throw InvalidArgument("point_errors: empty input");
    double ae = 0.0, se = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = forecast[i] - y[i];
        ae += std::abs(e);
        se += e * e;
    }
    const auto n = static_cast<double>(y.size());
    return {ae / n, std::sqrt(se / n)};
}

double system_weighted(std::span<const double> values, std::span<const double> weights) {
    if (values.size() != weights.size()) throw DimensionError("system_weighted: length mismatch");
    double sum = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] < 0.0) throw InvalidArgument("system_weighted: negative weight");
        sum += weights[i];
        acc += weights[i] * values[i];
    }
    if (std::abs(sum - 1.0) > 1e-6) throw InvalidArgument("system_weighted: weights must sum to 1");
    return acc;
}

std::vector<double> default_system_weights(const std::vector<std::string>& series_ids) {
    static const std::vector<std::pair<std::string, double>> regions = {
        {"NSW", 0.3687}, {"VIC", 0.2355}, {"QLD", 0.2818}, {"SA", 0.0624}, {"TAS", 0.0516}};
    std::vector<double> w;
    for (const auto& id : series_ids) {
        std::string key;
        for (char c : id) key.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        if (!key.empty() && key.back() == '1') key.pop_back();
        auto it = std::find_if(regions.begin(), regions.end(), [&](const auto& r) { return r.first == key; });
        if (it == regions.end()) break;
        w.push_back(it->second);
    }
    if (w.size() == series_ids.size() && !w.empty()) {
        const double sum = std::accumulate(w.begin(), w.end(), 0.0);
        if (std::abs(sum - 1.0) <= 1e-6) return w;
        for (auto& v : w) v /= sum;  // subset of the regions
        return w;
    }
    return std::vector<double>(series_ids.size(), series_ids.empty() ? 0.0 : 1.0 / series_ids.size());
}

double CalibrationCurves::sup_distance() const {
    double d = 0.0;
    for (std::size_t i = 0; i < y_grid.size(); ++i) d = std::max(d, std::abs(F_bar[i] - H_hat[i]));
    return d;
}

namespace {

std::vector<double> empirical_cdf(std::span<const double> sorted, std::span<const double> y_grid) {
    std::vector<double> out(y_grid.size());
    for (std::size_t g = 0; g < y_grid.size(); ++g) {
        const auto cnt = std::upper_bound(sorted.begin(), sorted.end(), y_grid[g]) - sorted.begin();
        out[g] = static_cast<double>(cnt) / static_cast<double>(sorted.size());
    }
    return out;
}

void check_grid(std::span<const double> y_grid) {
    if (y_grid.empty()) throw InvalidArgument("marginal_calibration: empty y grid");
    for (std::size_t i = 1; i < y_grid.size(); ++i)
        if (!(y_grid[i] > y_grid[i - 1])) throw InvalidArgument("marginal_calibration: y grid must increase");
}

}  // namespace

CalibrationCurves marginal_calibration(const std::vector<std::vector<double>>& sorted_samples,
                                       std::span<const double> observations, std::span<const double> y_grid) {
    if (observations.empty()) throw InvalidArgument("marginal_calibration: empty set");
    if (sorted_samples.size() != observations.size())
        throw DimensionError("marginal_calibration: forecasts and observations differ in count");
    check_grid(y_grid);
    CalibrationCurves c;
    c.y_grid.assign(y_grid.begin(), y_grid.end());
    std::vector<double> obs(observations.begin(), observations.end());
    std::sort(obs.begin(), obs.end());
    c.H_hat = empirical_cdf(obs, y_grid);
    c.F_bar.assign(y_grid.size(), 0.0);
    for (const auto& s : sorted_samples) {
        require_sorted_finite(s, "marginal_calibration");
        const auto f = empirical_cdf(s, y_grid);
        for (std::size_t g = 0; g < f.size(); ++g) c.F_bar[g] += f[g];
    }
    for (auto& v : c.F_bar) v /= static_cast<double>(sorted_samples.size());
    return c;
}

CalibrationCurves marginal_calibration(const std::vector<std::function<double(double)>>& cdfs,
                                       std::span<const double> observations, std::span<const double> y_grid) {
    if (observations.empty()) throw InvalidArgument("marginal_calibration: empty set");
    if (cdfs.size() != observations.size())
        throw DimensionError("marginal_calibration: forecasts and observations differ in count");
    check_grid(y_grid);
    CalibrationCurves c;
    c.y_grid.assign(y_grid.begin(), y_grid.end());
    std::vector<double> obs(observations.begin(), observations.end());
    std::sort(obs.begin(), obs.end());
    c.H_hat = empirical_cdf(obs, y_grid);
    c.F_bar.assign(y_grid.size(), 0.0);
    for (const auto& F : cdfs)
        for (std::size_t g = 0; g < y_grid.size(); ++g) c.F_bar[g] += F(y_grid[g]);
    for (auto& v : c.F_bar) v /= static_cast<double>(cdfs.size());
    return c;
}

DmResult dm_test(std::span<const double> loss_a, std::span<const double> loss_b, int horizon_step) {
    if (loss_a.size() != loss_b.size()) throw DimensionError("dm_test: length mismatch");
    if (loss_a.size() < 30) throw InvalidArgument("dm_test: need at least 30 paired losses");
    if (horizon_step < 1) throw InvalidArgument("dm_test: horizon_step must be >= 1");
    const std::size_t n = loss_a.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = loss_a[i] - loss_b[i];
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
    auto autocov = [&](std::size_t lag) {
        double acc = 0.0;
        for (std::size_t i = lag; i < n; ++i) acc += (d[i] - mean) * (d[i - lag] - mean);
        return acc / static_cast<double>(n);
    };
    const double gamma0 = autocov(0);
    double lrv = gamma0;
    for (int j = 1; j < horizon_step && static_cast<std::size_t>(j) < n; ++j)
        lrv += 2.0 * (1.0 - static_cast<double>(j) / horizon_step) * autocov(static_cast<std::size_t>(j));
    DmResult r;
    const double scale = std::max(std::abs(mean), 1.0);
    if (!(gamma0 > 1e-24 * scale * scale)) {
        r.degenerate = true;
        r.statistic = 0.0;
        r.p_value = 1.0;
        return r;
    }
    if (!(lrv > 0.0)) lrv = gamma0;
    r.statistic = mean / std::sqrt(lrv / static_cast<double>(n));
    r.p_value = std::erfc(std::abs(r.statistic) / std::sqrt(2.0));
    return r;
}

const std::vector<std::string>& score_metrics() {
    static const std::vector<std::string> m = {"MAE", "RMSE", "CRPS", "QS05", "QS95", "JS", "C95"};
    return m;
}

void ScoreReport::validate() const {
    for (const auto& e : entries) {
        if (!std::isfinite(e.value))
            throw NumericError("score report: non-finite " + e.metric + " for " + e.model + "/" + e.series);
        if (e.metric == "C95" && (e.value < 0.0 || e.value > 1.0))
            throw NumericError("score report: coverage outside [0,1]");
        if ((e.metric == "MAE" || e.metric == "RMSE" || e.metric == "CRPS" || e.metric == "QS05" ||
             e.metric == "QS95") &&
            e.value < 0.0)
            throw NumericError("score report: negative " + e.metric);
    }
}

double ScoreReport::value(const std::string& model, const std::string& s, int step, const std::string& metric) const {
    for (const auto& e : entries)
        if (e.model == model && e.series == s && e.step == step && e.metric == metric) return e.value;
    return std::nan("");
}

ScoreAccumulator::ScoreAccumulator(std::vector<std::string> series, std::vector<double> weights, int horizon,
                                   double tail_alpha)
    : series_(std::move(series)), weights_(std::move(weights)), horizon_(horizon), tail_alpha_(tail_alpha) {
    if (weights_.size() != series_.size()) throw DimensionError("ScoreAccumulator: one weight per series");
    if (horizon_ < 1) throw InvalidArgument("ScoreAccumulator: horizon must be >= 1");
}

ScoreAccumulator::Cell& ScoreAccumulator::cell(const std::string& model, int s, int step) {
    auto it = cells_.find(model);
    if (it == cells_.end()) {
        models_.push_back(model);
        it = cells_.emplace(model, std::vector<Cell>(series_.size() * static_cast<std::size_t>(horizon_))).first;
    }
    return it->second[static_cast<std::size_t>(s) * horizon_ + static_cast<std::size_t>(step - 1)];
}

const ScoreAccumulator::Cell* ScoreAccumulator::find(const std::string& model, int s, int step) const {
    auto it = cells_.find(model);
    if (it == cells_.end()) return nullptr;
    return &it->second[static_cast<std::size_t>(s) * horizon_ + static_cast<std::size_t>(step - 1)];
}

void ScoreAccumulator::add(const std::string& model, int step, int s, std::span<const double> quantiles,
                           double mean, double longrise, double realized) {
    if (step < 1 || step > horizon_) throw InvalidArgument("ScoreAccumulator::add: step out of range");
    if (s < 0 || static_cast<std::size_t>(s) >= series_.size())
        throw InvalidArgument("ScoreAccumulator::add: series index out of range");
    if (quantiles.size() != kLevelCount) throw DimensionError("ScoreAccumulator::add: expects 199 quantiles");
    Cell& c = cell(model, s, step);
    const double e = mean - realized;
    c.loss["AE"].push_back(std::abs(e));
    c.loss["SE"].push_back(e * e);
    c.loss["CRPS"].push_back(crps_from_quantiles(quantiles, realized));
    c.loss["QS05"].push_back(quantile_score(quantiles[kQ05], realized, 0.05));
    c.loss["QS95"].push_back(quantile_score(quantiles[kQ95], realized, 0.95));
    c.loss["JS"].push_back(upper_tail_loss(quantiles[kQ975], longrise, realized, tail_alpha_));
    c.covered.push_back(realized >= quantiles[kQ025] && realized <= quantiles[kQ975] ? 1.0 : 0.0);
}

void ScoreAccumulator::note_origin(std::int64_t origin) {
    if (first_origin_ < 0) first_origin_ = origin;
    last_origin_ = origin;
    ++n_origins_;
}

const std::vector<double>& ScoreAccumulator::losses(const std::string& model, int s, int step,
                                                    const std::string& metric) const {
    const Cell* c = find(model, s, step);
    if (!c) throw InvalidArgument("ScoreAccumulator: unknown model '" + model + "'");
    if (metric == "C95") return c->covered;
    auto it = c->loss.find(metric);
    if (it == c->loss.end()) throw InvalidArgument("ScoreAccumulator: unknown loss '" + metric + "'");
    return it->second;
}

std::vector<double> ScoreAccumulator::system_losses(const std::string& model, int step,
                                                    const std::string& metric) const {
    std::vector<double> out;
    for (std::size_t s = 0; s < series_.size(); ++s) {
        const auto& l = losses(model, static_cast<int>(s), step, metric);
        if (out.empty()) out.assign(l.size(), 0.0);
        if (l.size() != out.size()) throw DimensionError("system_losses: series have different origin counts");
        for (std::size_t i = 0; i < l.size(); ++i) out[i] += weights_[s] * l[i];
    }
    return out;
}

ScoreReport ScoreAccumulator::report() const {
    ScoreReport r;
    r.series = series_;
    r.weights = weights_;
    r.models = models_;
    r.horizon = horizon_;
    r.n_origins = n_origins_;
    r.window_begin = first_origin_;
    r.window_end = last_origin_;
    auto mean_of = [](const std::vector<double>& v) {
        return v.empty() ? std::nan("") : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    for (const auto& model : models_) {
        for (const auto& metric : score_metrics()) {
            for (int step = 1; step <= horizon_; ++step) {
                std::vector<double> per_series;
                for (std::size_t s = 0; s < series_.size(); ++s) {
                    const Cell* c = find(model, static_cast<int>(s), step);
                    double v;
                    if (metric == "MAE") v = mean_of(c->loss.count("AE") ? c->loss.at("AE") : std::vector<double>{});
                    else if (metric == "RMSE") v = std::sqrt(mean_of(c->loss.count("SE") ? c->loss.at("SE") : std::vector<double>{}));
                    else if (metric == "C95") v = mean_of(c->covered);
                    else v = mean_of(c->loss.count(metric) ? c->loss.at(metric) : std::vector<double>{});
                    per_series.push_back(v);
                    r.entries.push_back({model, series_[s], step, metric, v});
                }
                r.entries.push_back({model, "system", step, metric, system_weighted(per_series, weights_)});
            }
        }
    }
    return r;
}

double cdf_from_quantiles(std::span<const double> q, double y) {
    const auto n = q.size();
    if (n == 0) throw InvalidArgument("cdf_from_quantiles: no quantiles");
    if (y < q.front()) return 0.0;
    if (y >= q.back()) return 1.0;
    const auto it = std::upper_bound(q.begin(), q.end(), y);
    const auto i = static_cast<std::size_t>(it - q.begin());  // q[i-1] <= y < q[i]
    const double lo = static_cast<double>(i) / (n + 1), hi = static_cast<double>(i + 1) / (n + 1);
    const double w = q[i] > q[i - 1] ? (y - q[i - 1]) / (q[i] - q[i - 1]) : 1.0;
    return lo + w * (hi - lo);
}

CalibrationAccumulator::CalibrationAccumulator(std::vector<double> y_grid, std::vector<std::string> series)
    : grid_(std::move(y_grid)), series_(std::move(series)) {
    check_grid(grid_);
}

CalibrationAccumulator::Sums& CalibrationAccumulator::sums(const std::string& model, int s) {
    if (s < 0 || static_cast<std::size_t>(s) >= series_.size())
        throw InvalidArgument("CalibrationAccumulator: series index out of range");
    auto it = sums_.find(model);
    if (it == sums_.end()) {
        models_.push_back(model);
        std::vector<Sums> v(series_.size());
        for (auto& x : v) {
            x.f_sum.assign(grid_.size(), 0.0);
            x.h_count.assign(grid_.size(), 0.0);
        }
        it = sums_.emplace(model, std::move(v)).first;
    }
    return it->second[static_cast<std::size_t>(s)];
}

void CalibrationAccumulator::add(const std::string& model, int s, std::span<const double> sorted, double observed) {
    require_sorted_finite(sorted, "CalibrationAccumulator");
    Sums& x = sums(model, s);
    const auto f = empirical_cdf(sorted, grid_);
    for (std::size_t g = 0; g < grid_.size(); ++g) {
        x.f_sum[g] += f[g];
        if (observed <= grid_[g]) x.h_count[g] += 1.0;
    }
    ++x.n;
}

void CalibrationAccumulator::add_quantiles(const std::string& model, int s, std::span<const double> quantiles,
                                           double observed) {
    Sums& x = sums(model, s);
    for (std::size_t g = 0; g < grid_.size(); ++g) {
        x.f_sum[g] += cdf_from_quantiles(quantiles, grid_[g]);
        if (observed <= grid_[g]) x.h_count[g] += 1.0;
    }
    ++x.n;
}

CalibrationCurves CalibrationAccumulator::curves(const std::string& model, int s) const {
    auto it = sums_.find(model);
    if (it == sums_.end() || s < 0 || static_cast<std::size_t>(s) >= series_.size())
        throw InvalidArgument("CalibrationAccumulator: no curves for '" + model + "'");
    const Sums& x = it->second[static_cast<std::size_t>(s)];
    if (x.n == 0) throw InvalidArgument("CalibrationAccumulator: empty set");
    CalibrationCurves c;
    c.y_grid = grid_;
    c.H_hat.resize(grid_.size());
    c.F_bar.resize(grid_.size());
    for (std::size_t g = 0; g < grid_.size(); ++g) {
        c.H_hat[g] = x.h_count[g] / static_cast<double>(x.n);
        c.F_bar[g] = x.f_sum[g] / static_cast<double>(x.n);
    }
    return c;
}

std::string render_score_table(const ScoreReport& report, const std::vector<int>& steps_in) {
    std::vector<int> steps = steps_in;
    if (steps.empty())
        for (int h = 1; h <= report.horizon; ++h) steps.push_back(h);
    std::vector<std::string> rows_series = report.series;
    rows_series.push_back("system");
    std::ostringstream os;
    os << std::left << std::setw(14) << "model" << std::setw(7) << "metric" << std::setw(10) << "series";
    for (int h : steps) os << std::right << std::setw(12) << ("h" + std::to_string(h));
    os << '\n';
    os << std::fixed << std::setprecision(6);
    for (const auto& model : report.models) {
        for (const auto& metric : score_metrics()) {
            for (const auto& s : rows_series) {
                os << std::left << std::setw(14) << model << std::setw(7) << metric << std::setw(10) << s;
                for (int h : steps) os << std::right << std::setw(12) << report.value(model, s, h, metric);
                os << '\n';
            }
        }
    }
    return os.str();
}

}  // namespace qesn
