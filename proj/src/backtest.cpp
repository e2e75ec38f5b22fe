#include "qesn/backtest.hpp"
#include "qesn/random.hpp"
#include "qesn/serialize.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

namespace qesn {

std::int64_t BacktestPlan::n_origins() const {
    std::int64_t n = 0;
    for (const auto& b : blocks) n += static_cast<std::int64_t>(b.origins.size());
    return n;
}

std::vector<std::int64_t> audit_calendar(const BacktestConfig& c) {
    if (c.audit_end <= c.audit_start) throw ConfigError("run.audit_end must follow run.audit_start");
    std::vector<std::int64_t> ts;
    for (std::int64_t t = c.audit_start; t < c.audit_end; t += c.spacing) ts.push_back(t);
    return ts;
}

BacktestPlan plan_backtest(const std::vector<std::int64_t>& ts, const BacktestConfig& c) {
    c.validate();
    const auto n = static_cast<std::int64_t>(ts.size());
    if (n < 2) throw ConfigError("backtest: panel too short");
    const std::int64_t spacing = c.spacing;
    if (ts[1] - ts[0] != spacing)
        throw ConfigError("backtest: panel spacing differs from run.spacing (" + std::to_string(ts[1] - ts[0]) +
                          "s vs " + std::to_string(spacing) + "s)");
    const std::int64_t max_lag = c.max_lag();
    const int H = c.horizon;
    auto index_at = [&](std::int64_t time) -> std::int64_t {
        const std::int64_t d = time - ts[0];
        return d <= 0 ? 0 : (d + spacing - 1) / spacing;
    };
    const bool window_months = c.train_window.unit == Duration::Unit::months;
    const bool refit_months = c.refit_cadence.unit == Duration::Unit::months;
    auto train_begin = [&](std::int64_t r) -> std::int64_t {
        if (window_months) {
            const std::int64_t t0 = ts[0] + r * spacing;
            return index_at(add_months(t0, -static_cast<int>(c.train_window.count)));
        }
        return r - c.train_window.fixed_steps(spacing);
    };
    auto time_of = [&](std::int64_t i) { return ts[0] + i * spacing; };

    std::int64_t r0;
    if (c.eval_start) {
        r0 = index_at(*c.eval_start);
    } else {
        r0 = window_months ? index_at(add_months(ts[static_cast<std::size_t>(std::min(max_lag, n - 1))],
                                                 static_cast<int>(c.train_window.count)))
                           : max_lag + c.train_window.fixed_steps(spacing);
        if (refit_months) r0 = index_at(month_start_on_or_after(time_of(r0)));
    }
    if (r0 >= n)
        throw ConfigError("backtest: configuration exceeds available data (the first refit falls at step " +
                          std::to_string(r0) + " of a " + std::to_string(n) + "-step panel)");
    if (train_begin(r0) < max_lag)
        throw ConfigError("backtest: the first training window starts inside the lag warm-up (begin " +
                          std::to_string(train_begin(r0)) + ", maximum lag " + std::to_string(max_lag) + ")");

    BacktestPlan plan;
    plan.horizon = H;
    const std::int64_t ocad = c.origin_cadence.fixed_steps(spacing);
    std::int64_t total = 0;
    bool done = false;
    for (std::int64_t r = r0; r < n && !done;) {
        const std::int64_t next = refit_months ? index_at(add_months(time_of(r), static_cast<int>(c.refit_cadence.count)))
                                               : r + c.refit_cadence.fixed_steps(spacing);
        BacktestBlock b;
        b.refit = r;
        b.train_begin = train_begin(r);
        b.train_end = r - 1;
        if (b.train_begin < max_lag) throw ConfigError("backtest: training window inside the lag warm-up");
        for (std::int64_t T = r - 1; T <= next - 2; T += ocad) {
            if (T + H > n - 1 || (c.eval_end && time_of(T) > *c.eval_end) ||
                (c.max_origins && total >= *c.max_origins)) {
                done = true;
                break;
            }
            b.origins.push_back(T);
            ++total;
        }
        if (b.origins.empty()) break;
        plan.blocks.push_back(std::move(b));
        r = next;
    }
    if (plan.blocks.empty())
        throw ConfigError("backtest: configuration exceeds available data (no origin has " + std::to_string(H) +
                          " realized steps after it)");
    return plan;
}

ProvenanceAudit audit_plan(const BacktestPlan& plan, const BacktestConfig& c, std::int64_t len) {
    ProvenanceAudit audit;
    std::vector<int> lags = c.short_lags;
    lags.insert(lags.end(), c.long_lags.begin(), c.long_lags.end());
    const int min_lag = *std::min_element(lags.begin(), lags.end());
    const bool exog = !c.exogenous.empty();
    for (const auto& b : plan.blocks) {
        const std::int64_t e = b.train_end;
        audit.check(c.margin_scope == MarginScope::full_sample ? len - 1 : e, e, "margin sample");
        if (exog) audit.check(e, e, "exogenous standardization");
        // Training rows: the extreme reads of the first and last rows.
        for (std::int64_t t : {b.train_begin, e}) {
            audit.check(t - min_lag, t - 1, "lagged value");
            if (exog) audit.check(t, c.exogenous_forward ? t : t - 1, "exogenous");
        }
        std::int64_t advanced = e;
        for (std::int64_t T : b.origins) {
            audit.check(e, T, "training rows");
            for (std::int64_t t = advanced + 1; t <= T; ++t) {
                audit.check(t - min_lag, t - 1, "lagged value");
                if (exog) audit.check(t, c.exogenous_forward ? t : t - 1, "exogenous");
            }
            advanced = T;
            for (int step = 1; step <= plan.horizon; ++step) {
                const std::int64_t t = T + step;
                for (int l : lags)
                    if (t - l <= T) audit.check(t - l, T, "observed value");
                if (exog) audit.check(t, c.exogenous_forward ? T + plan.horizon : T, "exogenous");
            }
        }
    }
    return audit;
}

std::vector<MarginModel> fit_block_margins(const TimeSeriesPanel& panel, const BacktestConfig& c,
                                           const BacktestBlock& b, ProvenanceAudit* audit) {
    std::vector<MarginModel> out;
    const bool full = c.margin_scope == MarginScope::full_sample;
    const std::int64_t begin = full ? 0 : b.train_begin, end = full ? panel.length() - 1 : b.train_end;
    KdeOptions opt;
    opt.bandwidth = c.bandwidth;
    opt.grid_points = c.grid_points;
    opt.exec = c.serial ? Exec::serial : Exec::parallel;
    const double lower = panel.lower_y();
    double upper = panel.upper_y_at(b.train_end);
    for (std::size_t s = 0; s < panel.series_ids.size(); ++s) {
        if (audit) audit->check(end, b.train_end, "margin sample of", panel.series_ids[s]);
        std::vector<double> sample(panel.y[s].begin() + begin, panel.y[s].begin() + end + 1);
        const double hi = *std::max_element(sample.begin(), sample.end());
        MarginModel m = fit_bounded_kde(sample, lower, std::max(upper, hi), opt);
        m.id = panel.series_ids[s] + "@" + format_timestamp(panel.timestamps[static_cast<std::size_t>(b.train_end)]);
        out.push_back(std::move(m));
    }
    return out;
}

FeatureFrame family_frame(const TimeSeriesPanel& panel, Family family, const std::vector<MarginModel>& margins,
                          const BacktestBlock& b) {
    FeatureFrame f = panel.frame();
    if (family == Family::copula) {
        if (margins.size() != panel.series_ids.size()) throw InvalidArgument("family_frame: one margin per series");
        for (std::size_t s = 0; s < f.values.size(); ++s) f.values[s] = to_normal_scores(margins[s], panel.y[s]);
    }
    for (auto& col : f.exog) {
        const auto first = col.begin() + b.train_begin, last = col.begin() + b.train_end + 1;
        const double n = static_cast<double>(last - first);
        const double mean = std::accumulate(first, last, 0.0) / n;
        double var = 0.0;
        for (auto it = first; it != last; ++it) var += (*it - mean) * (*it - mean);
        const double sd = var > 0.0 ? std::sqrt(var / n) : 1.0;
        for (auto& v : col) v = (v - mean) / sd;
    }
    return f;
}

std::vector<ModelFit> fit_block(const TimeSeriesPanel& panel, const BacktestConfig& c, const BacktestBlock& b,
                                Family family, const std::vector<MarginModel>& margins, ProvenanceAudit* audit) {
    const FeatureFrame frame = family_frame(panel, family, margins, b);
    FitSettings settings = c.fit_settings();
    settings.seed = derive_seed(c.seed, static_cast<std::uint64_t>(b.refit), static_cast<std::uint64_t>(family));
    std::vector<ModelFit> fits;
    for (std::size_t s = 0; s < panel.series_ids.size(); ++s) {
        const std::string& sid = panel.series_ids[s];
        ModelFit fit = fit_model(frame, sid, c.feature_spec(panel.series_ids, sid, family), family, b.train_begin,
                                 b.train_end, settings, audit);
        fit.lower_y = panel.lower_y();
        fit.upper_y = panel.upper_y_at(b.train_end);
        if (family == Family::copula) fit.margin = margins[s];
        fits.push_back(std::move(fit));
    }
    return fits;
}

SimulationOptions simulation_options(const TimeSeriesPanel& panel, const BacktestConfig& c, Family family,
                                     std::int64_t origin) {
    SimulationOptions o;
    o.horizon = c.horizon;
    o.n_path = c.n_path;
    o.seed = derive_seed(c.seed, 0x51, static_cast<std::uint64_t>(family));
    o.shared_config_index = c.shared_config_index;
    o.use_posterior_draws = c.use_posterior_draws;
    o.keep_paths = c.keep_paths;
    o.exec = c.serial ? Exec::serial : Exec::parallel;
    for (int step = 1; step <= c.horizon; ++step)
        o.upper_y_by_step.push_back(panel.upper_y_at(std::min(origin + step, panel.length() - 1)));
    return o;
}

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string level_name(double level) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.3f", level);
    return buf;
}

}  // namespace

void write_quantile_header(std::ostream& os) { os << "model,origin,step,series,level,value\n"; }

void write_quantiles(std::ostream& os, const std::string& model, const ForecastEnsemble& ens,
                     const TimeSeriesPanel& panel, double tail_alpha) {
    const std::string origin = format_timestamp(panel.timestamps[static_cast<std::size_t>(ens.origin)]);
    for (int step = 0; step < ens.horizon; ++step) {
        for (std::size_t s = 0; s < ens.series.size(); ++s) {
            const std::size_t c = ens.cell(step, static_cast<int>(s));
            const std::string prefix = model + "," + origin + "," + std::to_string(step + 1) + "," + ens.series[s] + ",";
            for (std::size_t i = 0; i < ens.levels.size(); ++i)
                os << prefix << level_name(ens.levels[i]) << ',' << num(ens.quantiles[c][i]) << '\n';
            os << prefix << "mean," << num(ens.mean[c]) << '\n';
            os << prefix << "el975," << num(expected_longrise(ens.sorted[c], tail_alpha)) << '\n';
        }
    }
}

std::string fit_path(const std::string& dir, std::size_t block, Family family, const std::string& series) {
    return (std::filesystem::path(dir) /
            ("block" + std::to_string(block) + "_" + to_string(family) + "_" + series + ".json"))
        .string();
}

BacktestResult run_backtest(const TimeSeriesPanel& panel, const BacktestConfig& c, const BacktestSinks& sinks) {
    panel.validate();
    if (panel.spacing != c.spacing) throw ConfigError("backtest: panel spacing differs from run.spacing");
    for (const auto& name : c.exogenous)
        if (std::find(panel.exog_names.begin(), panel.exog_names.end(), name) == panel.exog_names.end())
            throw ConfigError("backtest: exogenous column '" + name + "' is not in the panel");
    BacktestResult result;
    result.plan = plan_backtest(panel.timestamps, c);
    const int H = c.horizon;
    std::vector<double> weights = c.weights.empty() ? default_system_weights(panel.series_ids) : c.weights;
    if (weights.size() != panel.series_ids.size())
        throw ConfigError("scoring.weights: expected " + std::to_string(panel.series_ids.size()) + " weights");
    ScoreAccumulator acc(panel.series_ids, weights, H, c.tail_alpha);

    // Calibration grid over the evaluated realizations.
    double lo = INFINITY, hi = -INFINITY;
    const std::int64_t first = result.plan.blocks.front().origins.front() + 1;
    const std::int64_t last = result.plan.blocks.back().origins.back() + H;
    for (const auto& s : panel.y)
        for (std::int64_t t = first; t <= last; ++t) {
            lo = std::min(lo, s[static_cast<std::size_t>(t)]);
            hi = std::max(hi, s[static_cast<std::size_t>(t)]);
        }
    const double pad = std::max(1e-6, 0.05 * (hi - lo));
    std::vector<double> grid(static_cast<std::size_t>(c.calibration_points));
    for (std::size_t g = 0; g < grid.size(); ++g)
        grid[g] = lo - pad + (hi - lo + 2.0 * pad) * static_cast<double>(g) / static_cast<double>(grid.size() - 1);
    CalibrationAccumulator cal(grid, panel.series_ids);

    ProvenanceAudit audit;
    ProvenanceAudit* ap = &audit;
    if (sinks.quantiles) write_quantile_header(*sinks.quantiles);
    if (sinks.paths) *sinks.paths << "model,origin,path,step,series,value\n";
    if (!c.fits_dir.empty() && !c.reuse_fits) std::filesystem::create_directories(c.fits_dir);

    for (std::size_t bi = 0; bi < result.plan.blocks.size(); ++bi) {
        const BacktestBlock& b = result.plan.blocks[bi];
        const std::vector<MarginModel> margins = fit_block_margins(panel, c, b, ap);
        for (std::size_t fi = 0; fi < c.families.size(); ++fi) {
            const Family family = c.families[fi];
            const std::string model = to_string(family);
            std::vector<ModelFit> fits;
            if (c.reuse_fits) {
                for (const auto& sid : panel.series_ids) {
                    ModelFit f = load_fit(fit_path(c.fits_dir, bi, family, sid));
                    if (f.train_begin != b.train_begin || f.train_end != b.train_end || f.family != family)
                        throw LoadError("saved fit " + fit_path(c.fits_dir, bi, family, sid) +
                                        " does not match the planned training window");
                    fits.push_back(std::move(f));
                }
            } else {
                fits = fit_block(panel, c, b, family, margins, ap);
                if (!c.fits_dir.empty())
                    for (const auto& f : fits) save_fit(f, fit_path(c.fits_dir, bi, family, f.series_id));
            }
            auto& diag = result.diagnostics[model];
            for (const auto& f : fits)
                for (const auto& cf : f.configs) {
                    diag.mean_acceptance += cf.acceptance_rate;
                    if (family == Family::copula && (cf.acceptance_rate < 0.05 || cf.acceptance_rate > 0.9))
                        ++diag.acceptance_warnings;
                    ++diag.n_fits;
                }
            const FeatureFrame frame = family_frame(panel, family, margins, b);
            EnsembleState state = initial_state(fits);
            for (std::int64_t T : b.origins) {
                for (const auto& f : fits) ap->check(f.train_end, T, "training rows of", f.series_id);
                advance_observed(state, fits, frame, T, ap);
                const ForecastEnsemble ens = simulate_paths(fits, frame, state, simulation_options(panel, c, family, T), ap);
                diag.clamp_count += ens.clamp_count;
                if (sinks.quantiles) write_quantiles(*sinks.quantiles, model, ens, panel, c.tail_alpha);
                if (sinks.paths && !ens.paths.empty()) {
                    const std::string origin = format_timestamp(panel.timestamps[static_cast<std::size_t>(T)]);
                    for (int p = 0; p < ens.n_path; ++p)
                        for (int step = 0; step < H; ++step)
                            for (std::size_t s = 0; s < ens.series.size(); ++s)
                                *sinks.paths << model << ',' << origin << ',' << p << ',' << step + 1 << ','
                                             << ens.series[s] << ',' << num(ens.path_value(p, step, static_cast<int>(s)))
                                             << '\n';
                }
                if (fi == 0) acc.note_origin(T);
                for (int step = 1; step <= H; ++step) {
                    for (std::size_t s = 0; s < ens.series.size(); ++s) {
                        const std::size_t cell = ens.cell(step - 1, static_cast<int>(s));
                        const int ps = panel.series_index(ens.series[s]);
                        const double realized = panel.y[static_cast<std::size_t>(ps)][static_cast<std::size_t>(T + step)];
                        acc.add(model, step, ps, ens.quantiles[cell], ens.mean[cell],
                                expected_longrise(ens.sorted[cell], c.tail_alpha), realized);
                        cal.add(model, ps, ens.sorted[cell], realized);
                    }
                }
            }
        }
    }
    for (auto& [model, d] : result.diagnostics)
        if (d.n_fits > 0) d.mean_acceptance /= static_cast<double>(d.n_fits);

    result.report = acc.report();
    result.report.window_begin = result.plan.blocks.front().origins.front();
    result.report.window_end = result.plan.blocks.back().origins.back();
    result.report.validate();
    for (const auto& model : cal.models())
        for (std::size_t s = 0; s < panel.series_ids.size(); ++s)
            result.calibration[model].push_back(cal.curves(model, static_cast<int>(s)));

    // Pairwise DM tests on CRPS, per series and system weighted.
    std::vector<int> steps = c.report_steps;
    if (steps.empty())
        for (int h = 1; h <= H; ++h) steps.push_back(h);
    const auto& models = acc.models();
    for (std::size_t a = 0; a < models.size(); ++a)
        for (std::size_t bm = a + 1; bm < models.size(); ++bm)
            for (int step : steps) {
                if (step < 1 || step > H) continue;
                for (std::size_t s = 0; s <= panel.series_ids.size(); ++s) {
                    const bool sys = s == panel.series_ids.size();
                    const auto la = sys ? acc.system_losses(models[a], step, "CRPS")
                                        : acc.losses(models[a], static_cast<int>(s), step, "CRPS");
                    const auto lb = sys ? acc.system_losses(models[bm], step, "CRPS")
                                        : acc.losses(models[bm], static_cast<int>(s), step, "CRPS");
                    if (la.size() < 30) continue;
                    result.dm.push_back({models[a], models[bm], sys ? "system" : panel.series_ids[s], step,
                                         dm_test(la, lb, step)});
                }
            }

    result.audit_violations = audit.violations();
    result.audit_messages = audit.messages();
    if (c.audit) audit.require_clean();
    return result;
}

std::string report_json(const BacktestResult& r, const BacktestConfig& c) {
    using nlohmann::json;
    json j;
    j["config_hash"] = results_hash(c);
    j["n_origins"] = r.report.n_origins;
    j["horizon"] = r.report.horizon;
    j["window"] = {{"first_origin", r.report.window_begin}, {"last_origin", r.report.window_end}};
    j["series"] = r.report.series;
    j["weights"] = r.report.weights;
    j["models"] = r.report.models;
    j["refits"] = r.plan.blocks.size();
    json entries = json::array();
    for (const auto& e : r.report.entries)
        entries.push_back({{"model", e.model}, {"series", e.series}, {"step", e.step}, {"metric", e.metric},
                           {"value", e.value}});
    j["scores"] = entries;
    json dm = json::array();
    for (const auto& d : r.dm)
        dm.push_back({{"model_a", d.model_a},
                      {"model_b", d.model_b},
                      {"series", d.series},
                      {"step", d.step},
                      {"statistic", d.result.statistic},
                      {"p_value", d.result.p_value},
                      {"degenerate", d.result.degenerate}});
    j["dm_tests"] = dm;
    json cal = json::object();
    for (const auto& [model, curves] : r.calibration) {
        json per = json::object();
        for (std::size_t s = 0; s < curves.size(); ++s) per[r.report.series[s]] = curves[s].sup_distance();
        cal[model] = per;
    }
    j["calibration_sup_distance"] = cal;
    json diag = json::object();
    for (const auto& [model, d] : r.diagnostics)
        diag[model] = {{"clamp_count", d.clamp_count},
                       {"mean_acceptance", d.mean_acceptance},
                       {"acceptance_warnings", d.acceptance_warnings},
                       {"n_fits", d.n_fits}};
    j["diagnostics"] = diag;
    j["audit"] = {{"violations", r.audit_violations}, {"messages", r.audit_messages}};
    return j.dump(2) + "\n";
}

void write_calibration_csv(std::ostream& os, const std::map<std::string, std::vector<CalibrationCurves>>& curves,
                           const std::vector<std::string>& series) {
    os << "model,series,y,H_hat,F_bar\n";
    for (const auto& [model, per] : curves)
        for (std::size_t s = 0; s < per.size(); ++s)
            for (std::size_t g = 0; g < per[s].y_grid.size(); ++g)
                os << model << ',' << series[s] << ',' << num(per[s].y_grid[g]) << ',' << num(per[s].H_hat[g]) << ','
                   << num(per[s].F_bar[g]) << '\n';
}

BacktestResult run_backtest_to_dir(const TimeSeriesPanel& panel, const BacktestConfig& c,
                                   const std::string& panel_path) {
    namespace fs = std::filesystem;
    const fs::path dir(c.output_dir);
    fs::create_directories(dir);
    std::ofstream q(dir / "quantiles.csv");
    std::ofstream paths;
    BacktestSinks sinks;
    sinks.quantiles = &q;
    if (c.keep_paths) {
        paths.open(dir / "paths.csv");
        sinks.paths = &paths;
    }
    BacktestResult r = run_backtest(panel, c, sinks);
    {
        std::ofstream t(dir / "scores.txt");
        t << render_score_table(r.report, c.report_steps);
    }
    {
        std::ofstream js(dir / "scores.json");
        js << report_json(r, c);
    }
    {
        std::ofstream cs(dir / "calibration.csv");
        write_calibration_csv(cs, r.calibration, panel.series_ids);
    }
    nlohmann::json m;
    m["config_hash"] = results_hash(c);
    m["config"] = render_config(c);
    m["seed"] = c.seed;
    m["panel"] = {{"path", panel_path},
                  {"rows", panel.length()},
                  {"series", panel.series_ids},
                  {"first", format_timestamp(panel.timestamps.front())},
                  {"last", format_timestamp(panel.timestamps.back())}};
    if (!panel_path.empty()) {
        std::ifstream in(panel_path, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        m["panel"]["hash"] = fnv1a_hex(ss.str());
    }
    m["n_origins"] = r.report.n_origins;
    m["refits"] = r.plan.blocks.size();
    std::vector<std::string> outputs = {"quantiles.csv", "scores.txt", "scores.json", "calibration.csv"};
    if (c.keep_paths) outputs.push_back("paths.csv");
    m["outputs"] = outputs;
    std::ofstream mf(dir / "manifest.json");
    mf << m.dump(2) << '\n';
    return r;
}

namespace {

struct QuantileCell {
    std::string model;
    std::int64_t origin = -1;
    int step = 0;
    int series = -1;
    std::vector<double> quantiles;
    double mean = std::nan("");
    double longrise = std::nan("");
};

// Streams complete cells (all levels plus mean and el975) from a quantile
// file in the layout written by write_quantiles.
template <typename Fn>
void for_each_quantile_cell(const TimeSeriesPanel& panel, const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open quantile file '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line.rfind("model,origin,step,series,level,value", 0) != 0)
        throw LoadError("quantile file '" + path + "': unexpected header");
    const std::size_t n_levels = default_quantile_levels().size();
    QuantileCell cell;
    std::size_t row = 1;
    auto flush = [&] {
        if (cell.origin < 0) return;
        if (cell.quantiles.size() != n_levels || std::isnan(cell.mean) || std::isnan(cell.longrise))
            throw LoadError("quantile file: incomplete cell before row " + std::to_string(row));
        fn(cell);
        cell = QuantileCell{};
    };
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ',')) f.push_back(item);
        if (f.size() != 6) throw LoadError("quantile file row " + std::to_string(row) + ": expected 6 fields");
        std::int64_t origin;
        int step, series;
        double value;
        try {
            const std::int64_t ts = parse_timestamp(f[1]);
            origin = (ts - panel.timestamps.front()) / panel.spacing;
            step = std::stoi(f[2]);
            series = panel.series_index(f[3]);
            value = std::stod(f[5]);
        } catch (const std::exception& e) {
            throw LoadError("quantile file row " + std::to_string(row) + ": " + e.what());
        }
        if (series < 0) throw LoadError("quantile file row " + std::to_string(row) + ": unknown series '" + f[3] + "'");
        if (origin < 0 || origin + step >= panel.length() || step < 1)
            throw LoadError("quantile file row " + std::to_string(row) + ": target outside the panel");
        if (cell.origin >= 0 && (cell.model != f[0] || cell.origin != origin || cell.step != step || cell.series != series))
            flush();
        cell.model = f[0];
        cell.origin = origin;
        cell.step = step;
        cell.series = series;
        if (f[4] == "mean") cell.mean = value;
        else if (f[4] == "el975") cell.longrise = value;
        else cell.quantiles.push_back(value);
    }
    flush();
}

}  // namespace

QuantileFileScores score_quantile_file(const TimeSeriesPanel& panel, const std::string& path,
                                       const BacktestConfig& c) {
    int horizon = 0;
    double lo = INFINITY, hi = -INFINITY;
    std::vector<std::int64_t> origins;
    for_each_quantile_cell(panel, path, [&](const QuantileCell& q) {
        horizon = std::max(horizon, q.step);
        const double y = panel.y[static_cast<std::size_t>(q.series)][static_cast<std::size_t>(q.origin + q.step)];
        lo = std::min(lo, y);
        hi = std::max(hi, y);
        if (origins.empty() || origins.back() != q.origin) origins.push_back(q.origin);
    });
    if (horizon == 0) throw LoadError("quantile file '" + path + "' has no forecasts");
    std::sort(origins.begin(), origins.end());
    origins.erase(std::unique(origins.begin(), origins.end()), origins.end());

    std::vector<double> weights = c.weights.empty() ? default_system_weights(panel.series_ids) : c.weights;
    ScoreAccumulator acc(panel.series_ids, weights, horizon, c.tail_alpha);
    for (std::int64_t o : origins) acc.note_origin(o);
    const double pad = std::max(1e-6, 0.05 * (hi - lo));
    std::vector<double> grid(static_cast<std::size_t>(c.calibration_points));
    for (std::size_t g = 0; g < grid.size(); ++g)
        grid[g] = lo - pad + (hi - lo + 2.0 * pad) * static_cast<double>(g) / static_cast<double>(grid.size() - 1);
    CalibrationAccumulator cal(grid, panel.series_ids);
    for_each_quantile_cell(panel, path, [&](const QuantileCell& q) {
        const double y = panel.y[static_cast<std::size_t>(q.series)][static_cast<std::size_t>(q.origin + q.step)];
        acc.add(q.model, q.step, q.series, q.quantiles, q.mean, q.longrise, y);
        cal.add_quantiles(q.model, q.series, q.quantiles, y);
    });
    QuantileFileScores out;
    out.report = acc.report();
    out.report.window_begin = origins.front();
    out.report.window_end = origins.back();
    out.report.validate();
    for (const auto& model : cal.models())
        for (std::size_t s = 0; s < panel.series_ids.size(); ++s)
            out.calibration[model].push_back(cal.curves(model, static_cast<int>(s)));
    return out;
}

}  // namespace qesn
