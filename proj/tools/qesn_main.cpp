#include "qesn/backtest.hpp"
#include "qesn/config.hpp"
#include "qesn/kernels.hpp"
#include "qesn/serialize.hpp"
#include "qesn/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace qesn;

struct CommonOptions {
    std::string config_path;
    std::string panel_path;
    std::vector<std::string> overrides;
    int threads = 0;
    bool serial = false;
    std::optional<std::uint64_t> seed;
    std::string output_dir;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool needs_panel) {
    cmd->add_option("--config", o.config_path, "INI configuration file")->check(CLI::ExistingFile);
    auto* panel = cmd->add_option("--panel", o.panel_path, "long-format panel CSV")->check(CLI::ExistingFile);
    if (needs_panel) panel->required();
    cmd->add_option("--set", o.overrides, "override a key: section.key=value (repeatable)");
    cmd->add_option("--threads", o.threads, "worker threads (overrides QESN_THREADS)")->check(CLI::NonNegativeNumber);
    cmd->add_flag("--serial", o.serial, "use the serial reference kernels");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--output-dir", o.output_dir, "output directory");
}

BacktestConfig resolve_config(const CommonOptions& o) {
    if (o.serial && o.threads > 1) throw CLI::ValidationError("--serial", "contradicts --threads > 1");
    BacktestConfig c = o.config_path.empty() ? BacktestConfig{} : load_config(o.config_path);
    apply_overrides(c, o.overrides);
    if (o.seed) c.seed = *o.seed;
    if (o.serial) c.serial = true;
    if (o.threads > 0) c.threads = o.threads;
    if (!o.output_dir.empty()) c.output_dir = o.output_dir;
    c.validate();
    if (c.threads > 0) kernels::set_thread_count(c.threads);
    return c;
}

TimeSeriesPanel read_panel(const CommonOptions& o, const BacktestConfig& c) {
    return load_panel(o.panel_path, c.panel_schema());
}

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

int error_exit(const std::string& kind, const std::string& message, int code) {
    nlohmann::json j = {{"error", kind}, {"message", message}};
    std::cerr << j.dump() << '\n';
    return code;
}

int exit_code_for(const Error& e) {
    const std::string k = e.kind();
    if (k == "config") return 3;
    if (k == "load" || k == "input") return 4;
    if (k == "audit") return 5;
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    kernels::configure_threads_from_env();
    CLI::App app{"qesn: ensemble quadratic echo state network forecasts with copula output layers"};
    app.require_subcommand(1);

    // synth
    CommonOptions synth_common;
    std::string synth_family = "gaussian_esn", synth_out;
    SynthSpec spec;
    double demand_noise = -1.0;
    auto* synth = app.add_subcommand("synth", "generate a synthetic panel from a known model");
    synth->add_option("--family", synth_family, "gaussian_esn | skew_t_esn | copula_esn | gaussian_var");
    synth->add_option("--series", spec.n_series, "number of series");
    synth->add_option("--steps", spec.T, "recorded length");
    synth->add_option("--seed", spec.seed, "seed");
    synth->add_option("--n-h", spec.reservoir.n_h, "reservoir size of the generating model");
    synth->add_option("--sigma2", spec.sigma2, "noise variance");
    synth->add_option("--psi", spec.psi, "skew-t psi");
    synth->add_option("--nu", spec.nu, "skew-t degrees of freedom");
    synth->add_option("--tau2", spec.tau2, "copula tau^2");
    synth->add_option("--var-coef", spec.var_coef, "gaussian_var autoregressive coefficient");
    synth->add_option("--demand-noise", demand_noise, "append D10/D50/D90 columns with this noise scale");
    synth->add_option("--out", synth_out, "panel CSV to write")->required();

    // fit
    CommonOptions fit_common;
    std::string fit_dir;
    int fit_block_index = 0;
    auto* fit = app.add_subcommand("fit", "fit the models of one refit window and save them");
    add_common(fit, fit_common, true);
    fit->add_option("--block", fit_block_index, "refit window index in the backtest plan");
    fit->add_option("--fits-dir", fit_dir, "directory for fit files")->required();

    // forecast
    CommonOptions fc_common;
    std::string fc_origin, fc_out;
    auto* forecast = app.add_subcommand("forecast", "forecast from one origin");
    add_common(forecast, fc_common, true);
    forecast->add_option("--origin", fc_origin, "origin timestamp (ISO-8601)")->required();
    forecast->add_option("--out", fc_out, "quantile file to write")->required();

    // backtest
    CommonOptions bt_common;
    auto* backtest = app.add_subcommand("backtest", "rolling-window fit, forecast and score");
    add_common(backtest, bt_common, true);

    // score
    CommonOptions sc_common;
    std::string sc_quantiles;
    auto* score = app.add_subcommand("score", "score a quantile file against realized data");
    add_common(score, sc_common, true);
    score->add_option("--quantiles", sc_quantiles, "quantile file")->required()->check(CLI::ExistingFile);

    // calibration
    CommonOptions cal_common;
    std::string cal_quantiles, cal_out;
    auto* calibration = app.add_subcommand("calibration", "marginal calibration curves from a quantile file");
    add_common(calibration, cal_common, true);
    calibration->add_option("--quantiles", cal_quantiles, "quantile file")->required()->check(CLI::ExistingFile);
    calibration->add_option("--out", cal_out, "curve CSV to write")->required();

    // audit
    CommonOptions au_common;
    bool au_live = false;
    auto* audit = app.add_subcommand("audit", "check a configuration for look-ahead reads");
    add_common(audit, au_common, false);
    audit->add_flag("--live", au_live, "run the backtest with live provenance checks (needs --panel)");

    // template
    auto* templ = app.add_subcommand("template", "print a configuration file with every default");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return error_exit("usage_error", e.what(), 2);
    }

    try {
        if (*synth) {
            spec.family = parse_synth_family(synth_family);
            SynthResult r = generate(spec);
            if (demand_noise >= 0.0)
                add_demand_columns(r.panel, make_demand_quantile_columns(r.panel, demand_noise, spec.seed));
            write_panel(r.panel, synth_out);
            print_json({{"panel", synth_out}, {"rows", r.panel.length()}, {"series", r.panel.series_ids},
                        {"family", synth_family}});
        } else if (*fit) {
            const BacktestConfig c = resolve_config(fit_common);
            const TimeSeriesPanel p = read_panel(fit_common, c);
            const BacktestPlan plan = plan_backtest(p.timestamps, c);
            if (fit_block_index < 0 || static_cast<std::size_t>(fit_block_index) >= plan.blocks.size())
                throw ConfigError("--block " + std::to_string(fit_block_index) + " outside the plan (" +
                                  std::to_string(plan.blocks.size()) + " windows)");
            const auto& b = plan.blocks[static_cast<std::size_t>(fit_block_index)];
            std::filesystem::create_directories(fit_dir);
            const auto margins = fit_block_margins(p, c, b);
            nlohmann::json files = nlohmann::json::array();
            for (Family f : c.families)
                for (const auto& m : fit_block(p, c, b, f, margins)) {
                    const std::string path = fit_path(fit_dir, static_cast<std::size_t>(fit_block_index), f, m.series_id);
                    save_fit(m, path);
                    files.push_back(path);
                }
            print_json({{"fits", files},
                        {"train_begin", format_timestamp(p.timestamps[static_cast<std::size_t>(b.train_begin)])},
                        {"train_end", format_timestamp(p.timestamps[static_cast<std::size_t>(b.train_end)])}});
        } else if (*forecast) {
            const BacktestConfig c = resolve_config(fc_common);
            const TimeSeriesPanel p = read_panel(fc_common, c);
            const std::int64_t ts = parse_timestamp(fc_origin);
            const std::int64_t T = (ts - p.timestamps.front()) / p.spacing;
            if (T < 0 || T >= p.length() || p.timestamps[static_cast<std::size_t>(T)] != ts)
                throw InputError("origin " + fc_origin + " is not a panel timestamp");
            if (T + c.horizon >= p.length())
                throw InputError("origin " + fc_origin + " leaves fewer than horizon steps of exogenous data");
            // Train on the window that ends at the origin.
            BacktestConfig one = c;
            one.eval_start = p.timestamps[static_cast<std::size_t>(T)] + p.spacing;
            one.max_origins = 1;
            const BacktestPlan plan = plan_backtest(p.timestamps, one);
            const auto& b = plan.blocks.front();
            const auto margins = fit_block_margins(p, c, b);
            std::ofstream out(fc_out);
            write_quantile_header(out);
            for (Family f : c.families) {
                const auto fits = fit_block(p, c, b, f, margins);
                const FeatureFrame frame = family_frame(p, f, margins, b);
                EnsembleState st = initial_state(fits);
                advance_observed(st, fits, frame, T);
                const ForecastEnsemble ens = simulate_paths(fits, frame, st, simulation_options(p, c, f, T));
                write_quantiles(out, to_string(f), ens, p, c.tail_alpha);
            }
            print_json({{"quantiles", fc_out}, {"origin", fc_origin}});
        } else if (*backtest) {
            const BacktestConfig c = resolve_config(bt_common);
            const TimeSeriesPanel p = read_panel(bt_common, c);
            const BacktestResult r = run_backtest_to_dir(p, c, bt_common.panel_path);
            print_json({{"output_dir", c.output_dir},
                        {"n_origins", r.report.n_origins},
                        {"refits", r.plan.blocks.size()},
                        {"audit_violations", r.audit_violations}});
        } else if (*score) {
            const BacktestConfig c = resolve_config(sc_common);
            const TimeSeriesPanel p = read_panel(sc_common, c);
            const QuantileFileScores s = score_quantile_file(p, sc_quantiles, c);
            std::filesystem::create_directories(c.output_dir);
            std::ofstream(std::filesystem::path(c.output_dir) / "scores.txt")
                << render_score_table(s.report, c.report_steps);
            BacktestResult r;
            r.report = s.report;
            r.calibration = s.calibration;
            std::ofstream(std::filesystem::path(c.output_dir) / "scores.json") << report_json(r, c);
            print_json({{"output_dir", c.output_dir}, {"n_origins", s.report.n_origins}});
        } else if (*calibration) {
            const BacktestConfig c = resolve_config(cal_common);
            const TimeSeriesPanel p = read_panel(cal_common, c);
            const QuantileFileScores s = score_quantile_file(p, cal_quantiles, c);
            std::ofstream out(cal_out);
            write_calibration_csv(out, s.calibration, p.series_ids);
            nlohmann::json sup = nlohmann::json::object();
            for (const auto& [model, curves] : s.calibration)
                for (std::size_t i = 0; i < curves.size(); ++i) sup[model][p.series_ids[i]] = curves[i].sup_distance();
            print_json({{"curves", cal_out}, {"sup_distance", sup}});
        } else if (*audit) {
            BacktestConfig c = resolve_config(au_common);
            if (au_live) {
                if (au_common.panel_path.empty()) throw CLI::ValidationError("--live", "needs --panel");
                c.audit = true;
                const TimeSeriesPanel p = read_panel(au_common, c);
                const BacktestResult r = run_backtest(p, c);
                print_json({{"mode", "live"}, {"violations", r.audit_violations}, {"status", "clean"}});
            } else {
                std::vector<std::int64_t> ts;
                std::int64_t len;
                if (!au_common.panel_path.empty()) {
                    ts = read_panel(au_common, c).timestamps;
                } else {
                    ts = audit_calendar(c);
                }
                len = static_cast<std::int64_t>(ts.size());
                const BacktestPlan plan = plan_backtest(ts, c);
                const ProvenanceAudit a = audit_plan(plan, c, len);
                print_json({{"mode", "plan"},
                            {"refits", plan.blocks.size()},
                            {"n_origins", plan.n_origins()},
                            {"violations", a.violations()},
                            {"messages", a.messages()},
                            {"status", a.violations() == 0 ? "clean" : "violation"}});
                a.require_clean();
            }
        } else if (*templ) {
            std::cout << render_config(BacktestConfig{});
        }
    } catch (const CLI::ValidationError& e) {
        return error_exit("usage_error", e.what(), 2);
    } catch (const Error& e) {
        return error_exit(e.kind(), e.what(), exit_code_for(e));
    } catch (const std::exception& e) {
        return error_exit("internal_error", e.what(), 1);
    }
    return 0;
}
