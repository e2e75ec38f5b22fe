#include "qesn/forecast.hpp"
#include "qesn/random.hpp"
#include "qesn/special.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <numeric>

namespace qesn {

std::string to_string(Family f) {
    switch (f) {
        case Family::gaussian: return "gaussian";
        case Family::skew_normal: return "skew_normal";
        case Family::skew_t: return "skew_t";
        case Family::copula: return "copula";
    }
    return "unknown";
}

Family parse_family(const std::string& name) {
    if (name == "gaussian" || name == "rnn") return Family::gaussian;
    if (name == "skew_normal" || name == "rnnsn") return Family::skew_normal;
    if (name == "skew_t" || name == "rnnst") return Family::skew_t;
    if (name == "copula" || name == "rnnc") return Family::copula;
    throw ConfigError("unknown model family '" + name + "'");
}

namespace {

std::uint64_t string_hash(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Runs body(i) for i in [0, n), optionally with OpenMP, rethrowing the first
// exception on the calling thread.
template <typename Body>
void for_each_index(std::int64_t n, Exec exec, Body&& body) {
    std::exception_ptr error;
    std::mutex mu;
    auto guarded = [&](std::int64_t i) {
        try {
            body(i);
        } catch (...) {
            std::lock_guard<std::mutex> lock(mu);
            if (!error) error = std::current_exception();
        }
    };
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
        for (std::int64_t i = 0; i < n; ++i) guarded(i);
    } else {
        for (std::int64_t i = 0; i < n; ++i) guarded(i);
    }
    if (error) std::rethrow_exception(error);
}

PointParameters thin_draw(const PosteriorDraws& d, int i, double nu) {
    PointParameters p;
    p.beta = d.beta.row(i).transpose();
    p.sigma2 = d.sigma2.empty() ? 0.0 : d.sigma2[static_cast<std::size_t>(i)];
    p.tau2 = d.tau2[static_cast<std::size_t>(i)];
    p.psi = d.psi.empty() ? 0.0 : d.psi[static_cast<std::size_t>(i)];
    p.nu = nu;
    return p;
}

}  // namespace

ModelFit fit_model(const FeatureFrame& frame, const std::string& series_id, const FeatureSpec& spec, Family family,
                   std::int64_t begin, std::int64_t end, const FitSettings& settings, ProvenanceAudit* audit) {
    if (settings.K < 1) throw ConfigError("fit_model: K must be >= 1");
    const int col = frame.series_index(series_id);
    if (col < 0) throw InputError("fit_model: series '" + series_id + "' not in frame");
    if (begin < spec.max_lag())
        throw InputError("fit_model: training begins inside the lag warm-up (begin=" + std::to_string(begin) +
                         ", max lag=" + std::to_string(spec.max_lag()) + ")");
    if (end >= frame.length() || end < begin) throw InputError("fit_model: training range outside frame");
    if ((family == Family::copula) != (spec.value_scale == ValueScale::normal_score))
        throw ConfigError("fit_model: copula models use normal-score features; other families use raw Y");

    FeatureLayout layout(spec, frame);
    ProvenanceAudit local_audit;
    const RowMatrix X = feature_matrix(frame, layout, begin, end, audit ? &local_audit : nullptr);
    if (audit) audit->merge(local_audit);
    const std::vector<double> y(frame.values[col].begin() + begin, frame.values[col].begin() + end + 1);

    ModelFit fit;
    fit.family = family;
    fit.series_id = series_id;
    fit.features = spec;
    fit.reservoir = settings.reservoir;
    fit.train_begin = begin;
    fit.train_end = end;
    fit.configs.resize(static_cast<std::size_t>(settings.K));
    const std::uint64_t series_key = string_hash(series_id);

    for_each_index(settings.K, settings.exec, [&](std::int64_t k) {
        ConfigurationFit& cf = fit.configs[static_cast<std::size_t>(k)];
        cf.reservoir = settings.reservoir;
        cf.reservoir.seed = derive_seed(settings.seed, series_key, static_cast<std::uint64_t>(k));
        cf.weights = sample_weights(cf.reservoir, layout.n_x);
        const HiddenStatePath path = run_hidden_states(cf.weights, X, cf.reservoir);
        cf.h_last = path.h_last;
        const DesignMatrix B = build_design(path.H, family != Family::copula);

        McmcOptions mcmc = settings.mcmc;
        mcmc.seed = derive_seed(settings.seed, series_key, static_cast<std::uint64_t>(k),
                                0x4d43 + static_cast<std::uint64_t>(family));
        mcmc.keep_beta_draws = settings.keep_posterior_draws > 0;
        PosteriorDraws draws;
        double nu = 0.0;
        switch (family) {
            case Family::gaussian:
                draws = gibbs_gaussian(B, y, settings.gaussian_prior, mcmc);
                break;
            case Family::skew_t:
            case Family::skew_normal: {
                SkewTPrior prior = settings.skew_t_prior;
                prior.nu = family == Family::skew_t ? settings.nu_skew_t : settings.nu_skew_normal;
                nu = prior.nu;
                draws = gibbs_skew_t(B, y, prior, mcmc);
                break;
            }
            case Family::copula: {
                CopulaMcmcOptions copt;
                copt.mcmc = mcmc;
                copt.target_acceptance = settings.target_acceptance;
                CopulaFit cfit = mcmc_copula(B, y, settings.weibull_prior, copt);
                draws = std::move(cfit.draws);
                cf.acceptance_rate = draws.acceptance_rate;
                break;
            }
        }
        cf.params = posterior_mean(draws);
        cf.params.nu = nu;
        if (settings.keep_posterior_draws > 0) {
            const int n = draws.n_draw();
            const int keep = std::min(settings.keep_posterior_draws, n);
            for (int i = 0; i < keep; ++i) {
                const int idx = static_cast<int>((static_cast<std::int64_t>(i) * n) / keep);
                cf.draws.push_back(thin_draw(draws, idx, nu));
            }
        }
    });
    return fit;
}

double predictive_draw_noncopula(std::span<const double> b_row, const PointParameters& params, Family family,
                                 Rng& rng) {
    if (static_cast<Eigen::Index>(b_row.size()) != params.beta.size())
        throw DimensionError("predictive_draw_noncopula: b_row length mismatch");
    double mean = 0.0;
    for (std::size_t j = 0; j < b_row.size(); ++j) mean += b_row[j] * params.beta[static_cast<Eigen::Index>(j)];
    switch (family) {
        case Family::gaussian:
            return mean + std::sqrt(std::max(params.sigma2, 0.0)) * rng.normal();
        case Family::skew_t:
        case Family::skew_normal:
            return mean + draw_skew_t_latent(rng, params.psi, params.sigma2, params.nu);
        case Family::copula:
            break;
    }
    throw InvalidArgument("predictive_draw_noncopula: copula family has its own predictive");
}

EnsembleState initial_state(const std::vector<ModelFit>& fits) {
    EnsembleState st;
    if (fits.empty()) throw InvalidArgument("initial_state: no fits");
    st.time = fits.front().train_end;
    for (const auto& f : fits) {
        if (f.train_end != st.time) throw InvalidArgument("initial_state: fits end at different times");
        std::vector<Vector> hs;
        for (const auto& c : f.configs) hs.push_back(c.h_last);
        st.h.push_back(std::move(hs));
    }
    return st;
}

void advance_observed(EnsembleState& state, const std::vector<ModelFit>& fits, const FeatureFrame& frame,
                      std::int64_t to_time, ProvenanceAudit* audit) {
    if (to_time < state.time) throw InvalidArgument("advance_observed: cannot move state backwards");
    if (to_time == state.time) return;
    std::vector<FeatureLayout> layouts;
    for (const auto& f : fits) layouts.emplace_back(f.features, frame);
    std::vector<std::vector<double>> x(fits.size());
    for (std::size_t s = 0; s < fits.size(); ++s) x[s].resize(static_cast<std::size_t>(layouts[s].n_x));
    for (std::int64_t t = state.time + 1; t <= to_time; ++t) {
        for (std::size_t s = 0; s < fits.size(); ++s) {
            make_features(frame, layouts[s], t, x[s], audit);
            for_each_index(fits[s].K(), Exec::serial, [&](std::int64_t k) {
                const auto& cf = fits[s].configs[static_cast<std::size_t>(k)];
                ReservoirWorkspace ws(cf.weights.n_h);
                Vector& h = state.h[s][static_cast<std::size_t>(k)];
                advance_state(cf.weights, cf.reservoir, x[s], {h.data(), static_cast<std::size_t>(h.size())}, ws);
            });
        }
    }
    state.time = to_time;
}

std::vector<double> default_quantile_levels() {
    std::vector<double> levels;
    for (int i = 1; i <= 199; ++i) levels.push_back(i / 200.0);
    return levels;
}

double sample_quantile(std::span<const double> sorted, double level) {
    if (sorted.empty()) throw InvalidArgument("sample_quantile: empty sample");
    const double pos = level * static_cast<double>(sorted.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= sorted.size()) return sorted.back();
    const double f = pos - static_cast<double>(i);
    return sorted[i] + f * (sorted[i + 1] - sorted[i]);
}

ForecastEnsemble simulate_paths(const std::vector<ModelFit>& fits, const FeatureFrame& frame,
                                const EnsembleState& state, const SimulationOptions& opt, ProvenanceAudit* audit) {
    const auto n_s = fits.size();
    if (n_s == 0) throw InvalidArgument("simulate_paths: no fits");
    if (state.h.size() != n_s) throw InvalidArgument("simulate_paths: state/fit count mismatch");
    if (opt.horizon < 1 || opt.n_path < 1) throw InvalidArgument("simulate_paths: horizon and n_path must be >= 1");
    const Family family = fits.front().family;
    for (const auto& f : fits) {
        if (f.family != family) throw InvalidArgument("simulate_paths: fits must share a family");
        if (family == Family::copula && !f.margin) throw InvalidArgument("simulate_paths: copula fit lacks a margin");
        if (family != Family::copula && !(f.upper_y > f.lower_y))
            throw InvalidArgument("simulate_paths: fit for '" + f.series_id + "' has an empty truncation interval [" +
                                  std::to_string(f.lower_y) + ", " + std::to_string(f.upper_y) + "]");
    }
    if (opt.shared_config_index)
        for (const auto& f : fits)
            if (f.K() != fits.front().K()) throw InvalidArgument("simulate_paths: shared index needs equal K");
    if (!opt.upper_y_by_step.empty() && static_cast<int>(opt.upper_y_by_step.size()) != opt.horizon)
        throw InvalidArgument("simulate_paths: upper_y_by_step length must equal horizon");

    const std::int64_t T = state.time;
    const int H = opt.horizon;
    std::vector<FeatureLayout> layouts;
    std::vector<int> sim_pos(frame.series_ids.size(), -1);
    for (std::size_t s = 0; s < n_s; ++s) {
        layouts.emplace_back(fits[s].features, frame);
        const int j = frame.series_index(fits[s].series_id);
        if (j < 0) throw InputError("simulate_paths: series '" + fits[s].series_id + "' not in frame");
        sim_pos[static_cast<std::size_t>(j)] = static_cast<int>(s);
        if (!layouts.back().exog_columns.empty() && T + H >= frame.length())
            throw InputError("simulate_paths: exogenous columns do not cover the horizon (need index " +
                             std::to_string(T + H) + ")");
    }

    ForecastEnsemble ens;
    ens.origin = T;
    ens.horizon = H;
    ens.n_path = opt.n_path;
    for (const auto& f : fits) ens.series.push_back(f.series_id);
    ens.paths.assign(static_cast<std::size_t>(opt.n_path) * H * n_s, 0.0);
    std::vector<std::int64_t> clamps(static_cast<std::size_t>(opt.n_path), 0);
    std::vector<ProvenanceAudit> audits(audit ? static_cast<std::size_t>(opt.n_path) : 0);

    for_each_index(opt.n_path, opt.exec, [&](std::int64_t p) {
        Rng rng(derive_seed(opt.seed, static_cast<std::uint64_t>(T), static_cast<std::uint64_t>(p)));
        ProvenanceAudit* path_audit = audit ? &audits[static_cast<std::size_t>(p)] : nullptr;
        std::vector<std::size_t> k(n_s);
        if (opt.shared_config_index) {
            const auto shared = static_cast<std::size_t>(rng.index(static_cast<std::uint64_t>(fits.front().K())));
            std::fill(k.begin(), k.end(), shared);
        } else {
            for (std::size_t s = 0; s < n_s; ++s) k[s] = static_cast<std::size_t>(rng.index(fits[s].K()));
        }
        std::vector<const PointParameters*> params(n_s);
        for (std::size_t s = 0; s < n_s; ++s) {
            const auto& cf = fits[s].configs[k[s]];
            params[s] = &cf.params;
            if (opt.use_posterior_draws && !cf.draws.empty())
                params[s] = &cf.draws[static_cast<std::size_t>(rng.index(cf.draws.size()))];
        }
        std::vector<Vector> h(n_s);
        for (std::size_t s = 0; s < n_s; ++s) h[s] = state.h[s][k[s]];
        std::vector<std::vector<double>> feat(n_s, std::vector<double>(static_cast<std::size_t>(H), 0.0));
        std::vector<std::size_t> order(n_s);
        std::iota(order.begin(), order.end(), 0);
        std::vector<double> x, b;
        ReservoirWorkspace ws;

        for (int step = 0; step < H; ++step) {
            const std::int64_t t = T + 1 + step;
            if (opt.shuffle_series_order) std::shuffle(order.begin(), order.end(), rng.engine());
            for (std::size_t s : order) {
                const ModelFit& fit = fits[s];
                const FeatureLayout& layout = layouts[s];
                const auto& cf = fit.configs[k[s]];
                x.resize(static_cast<std::size_t>(layout.n_x));
                layout.assemble(
                    t,
                    [&](int j, std::int64_t tau) -> double {
                        if (tau <= T) {
                            if (path_audit) path_audit->check(tau, T, "observed value of", frame.series_ids[j]);
                            return frame.values[j][tau];
                        }
                        const int sp = sim_pos[static_cast<std::size_t>(j)];
                        if (sp < 0)
                            throw InputError("simulate_paths: features need unsimulated series '" +
                                             frame.series_ids[j] + "' beyond the origin");
                        return feat[static_cast<std::size_t>(sp)][static_cast<std::size_t>(tau - T - 1)];
                    },
                    [&](int c, std::int64_t tau) -> double {
                        if (path_audit)
                            path_audit->check(tau, layout.spec.exogenous_forward ? T + H : T, "exogenous",
                                              frame.exog_names[c]);
                        return frame.exog[c][tau];
                    },
                    x);
                ws.pre.resize(static_cast<std::size_t>(cf.weights.n_h));
                advance_state(cf.weights, cf.reservoir, x, {h[s].data(), static_cast<std::size_t>(h[s].size())}, ws);
                b.resize(static_cast<std::size_t>(2 * cf.weights.n_h + (fit.with_intercept() ? 1 : 0)));
                design_row({h[s].data(), static_cast<std::size_t>(h[s].size())}, fit.with_intercept(), b);

                double y, fv;
                if (family == Family::copula) {
                    const CopulaDraw d = copula_predictive_draw(b, params[s]->beta, params[s]->tau2, *fit.margin, rng);
                    y = d.y;
                    fv = d.z;
                } else {
                    const double upper = opt.upper_y_by_step.empty() ? fit.upper_y : opt.upper_y_by_step[step];
                    y = truncate_to_bounds(
                        predictive_draw_noncopula(b, *params[s], family, rng), fit.lower_y, upper,
                        [&] { return predictive_draw_noncopula(b, *params[s], family, rng); },
                        clamps[static_cast<std::size_t>(p)]);
                    fv = y;
                }
                if (!std::isfinite(y) || !std::isfinite(fv))
                    throw NumericError("simulate_paths: non-finite draw (origin " + std::to_string(T) + ", path " +
                                       std::to_string(p) + ", step " + std::to_string(step + 1) + ", series " +
                                       fit.series_id + ")");
                feat[s][static_cast<std::size_t>(step)] = fv;
                ens.paths[(static_cast<std::size_t>(p) * H + step) * n_s + s] = y;
            }
        }
    });
    if (audit)
        for (const auto& a : audits) audit->merge(a);
    ens.clamp_count = std::accumulate(clamps.begin(), clamps.end(), std::int64_t{0});

    ens.levels = default_quantile_levels();
    const std::size_t cells = static_cast<std::size_t>(H) * n_s;
    ens.sorted.assign(cells, {});
    ens.quantiles.assign(cells, {});
    ens.mean.assign(cells, 0.0);
    for (int step = 0; step < H; ++step) {
        for (std::size_t s = 0; s < n_s; ++s) {
            const std::size_t c = ens.cell(step, static_cast<int>(s));
            auto& v = ens.sorted[c];
            v.resize(static_cast<std::size_t>(opt.n_path));
            for (int p = 0; p < opt.n_path; ++p) v[static_cast<std::size_t>(p)] = ens.path_value(p, step, static_cast<int>(s));
            ens.mean[c] = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
            std::sort(v.begin(), v.end());
            auto& q = ens.quantiles[c];
            q.reserve(ens.levels.size());
            for (double lv : ens.levels) q.push_back(sample_quantile(v, lv));
        }
    }
    if (!opt.keep_paths) {
        ens.paths.clear();
        ens.paths.shrink_to_fit();
    }
    return ens;
}

std::vector<std::vector<double>> one_step_design_rows(const ModelFit& fit, const std::vector<Vector>& states,
                                                      std::span<const double> x_next) {
    if (states.size() != fit.configs.size()) throw InvalidArgument("one_step_design_rows: state count mismatch");
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < states.size(); ++k) {
        const auto& cf = fit.configs[k];
        Vector h = states[k];
        ReservoirWorkspace ws(cf.weights.n_h);
        advance_state(cf.weights, cf.reservoir, x_next, {h.data(), static_cast<std::size_t>(h.size())}, ws);
        std::vector<double> b(static_cast<std::size_t>(2 * cf.weights.n_h + (fit.with_intercept() ? 1 : 0)));
        design_row({h.data(), static_cast<std::size_t>(h.size())}, fit.with_intercept(), b);
        rows.push_back(std::move(b));
    }
    return rows;
}

namespace {

double row_mean(std::span<const double> b, const Vector& beta) {
    if (static_cast<Eigen::Index>(b.size()) != beta.size()) throw DimensionError("density: b_row length mismatch");
    double m = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) m += b[j] * beta[static_cast<Eigen::Index>(j)];
    return m;
}

double untruncated_density(Family family, const PointParameters& p, double mean, double y) {
    if (family == Family::gaussian) {
        const double sd = std::sqrt(p.sigma2);
        return normal_pdf((y - mean) / sd) / sd;
    }
    double omega2, alpha;
    latent_to_skew_t(p.psi, p.sigma2, omega2, alpha);
    return skew_t_density(y - mean, omega2, alpha, p.nu);
}

// Probability of [lower, upper] under the untruncated predictive.
double bounded_mass(Family family, const PointParameters& p, double mean, double lower, double upper) {
    if (family == Family::gaussian) {
        const double sd = std::sqrt(p.sigma2);
        return normal_cdf((upper - mean) / sd) - normal_cdf((lower - mean) / sd);
    }
    double omega2, alpha;
    latent_to_skew_t(p.psi, p.sigma2, omega2, alpha);
    const double omega = std::sqrt(omega2);
    const double a = std::max(lower, mean - 60.0 * omega), b = std::min(upper, mean + 60.0 * omega);
    if (!(b > a)) return 0.0;
    const int n = 4000;  // Simpson, even number of panels
    const double hstep = (b - a) / n;
    double acc = untruncated_density(family, p, mean, a) + untruncated_density(family, p, mean, b);
    for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * untruncated_density(family, p, mean, a + i * hstep);
    return acc * hstep / 3.0;
}

}  // namespace

double configuration_density(const ModelFit& fit, const PointParameters& params, std::span<const double> b_row,
                             double y, double upper_y) {
    if (fit.family == Family::copula) {
        if (!fit.margin) throw InvalidArgument("configuration_density: copula fit lacks a margin");
        return copula_predictive_density(y, b_row, params.beta, params.tau2, *fit.margin);
    }
    if (!(y >= fit.lower_y && y <= upper_y)) return 0.0;
    const double mean = row_mean(b_row, params.beta);
    const double mass = bounded_mass(fit.family, params, mean, fit.lower_y, upper_y);
    if (!(mass > 0.0)) throw NumericError("configuration_density: no predictive mass inside the bounds");
    return untruncated_density(fit.family, params, mean, y) / mass;
}

std::vector<double> ensemble_density(const ModelFit& fit, const std::vector<std::vector<double>>& b_rows,
                                     std::span<const double> y_grid, std::optional<double> upper_y) {
    if (b_rows.size() != fit.configs.size()) throw InvalidArgument("ensemble_density: one b_row per configuration");
    const double upper = upper_y ? *upper_y : fit.upper_y;
    std::vector<double> out(y_grid.size(), 0.0);
    for (std::size_t k = 0; k < b_rows.size(); ++k) {
        const PointParameters& p = fit.configs[k].params;
        if (fit.family == Family::copula) {
            for (std::size_t i = 0; i < y_grid.size(); ++i)
                out[i] += copula_predictive_density(y_grid[i], b_rows[k], p.beta, p.tau2, *fit.margin);
            continue;
        }
        const double mean = row_mean(b_rows[k], p.beta);
        const double mass = bounded_mass(fit.family, p, mean, fit.lower_y, upper);
        if (!(mass > 0.0)) throw NumericError("ensemble_density: no predictive mass inside the bounds");
        for (std::size_t i = 0; i < y_grid.size(); ++i) {
            const double y = y_grid[i];
            if (y >= fit.lower_y && y <= upper) out[i] += untruncated_density(fit.family, p, mean, y) / mass;
        }
    }
    for (auto& v : out) v /= static_cast<double>(b_rows.size());
    return out;
}

}  // namespace qesn
