#pragma once

#include "qesn/config.hpp"
#include "qesn/forecast.hpp"
#include "qesn/panel.hpp"
#include "qesn/scoring.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace qesn {

/// One refit window and the origins it serves.
struct BacktestBlock {
    std::int64_t refit = 0;        // first index after the training window
    std::int64_t train_begin = 0;  // inclusive
    std::int64_t train_end = 0;    // inclusive, refit - 1
    std::vector<std::int64_t> origins;
};

struct BacktestPlan {
    std::vector<BacktestBlock> blocks;
    int horizon = 0;
    std::int64_t n_origins() const;
};

/// Lays out refit windows and origins over a regular calendar. Throws
/// ConfigError before any compute when the data cannot support the plan.
BacktestPlan plan_backtest(const std::vector<std::int64_t>& timestamps, const BacktestConfig& config);

/// Regular calendar from run.audit_start to run.audit_end.
std::vector<std::int64_t> audit_calendar(const BacktestConfig& config);

/// Walks a plan symbolically and records every read that a real run would
/// make, against its information cutoff.
ProvenanceAudit audit_plan(const BacktestPlan& plan, const BacktestConfig& config, std::int64_t panel_length);

/// Margin fits for one block. The sample is the training window unless the
/// config asks for the full sample (a look-ahead the audit reports).
std::vector<MarginModel> fit_block_margins(const TimeSeriesPanel& panel, const BacktestConfig& config,
                                           const BacktestBlock& block, ProvenanceAudit* audit = nullptr);

/// Feature frame on the family's scale: raw Y, or normal scores through
/// the block margins. Exogenous columns are standardized with training
/// window moments.
FeatureFrame family_frame(const TimeSeriesPanel& panel, Family family, const std::vector<MarginModel>& margins,
                          const BacktestBlock& block);

/// Fits one model per panel series for a block and family.
std::vector<ModelFit> fit_block(const TimeSeriesPanel& panel, const BacktestConfig& config,
                                const BacktestBlock& block, Family family, const std::vector<MarginModel>& margins,
                                ProvenanceAudit* audit = nullptr);

SimulationOptions simulation_options(const TimeSeriesPanel& panel, const BacktestConfig& config, Family family,
                                     std::int64_t origin);

/// Quantile rows (model, origin, step, series, level, value) with levels
/// i/200 plus "mean" and "el975" rows.
void write_quantile_header(std::ostream& os);
void write_quantiles(std::ostream& os, const std::string& model, const ForecastEnsemble& ens,
                     const TimeSeriesPanel& panel, double tail_alpha = 0.975);

struct ModelDiagnostics {
    std::int64_t clamp_count = 0;
    double mean_acceptance = 0.0;
    std::int64_t acceptance_warnings = 0;
    std::int64_t n_fits = 0;
};

struct DmEntry {
    std::string model_a, model_b, series;
    int step = 1;
    DmResult result;
};

struct BacktestResult {
    BacktestPlan plan;
    ScoreReport report;
    std::vector<DmEntry> dm;
    std::map<std::string, std::vector<CalibrationCurves>> calibration;  // model -> per series
    std::map<std::string, ModelDiagnostics> diagnostics;
    std::int64_t audit_violations = 0;
    std::vector<std::string> audit_messages;
};

/// Optional streams for the forecast archive.
struct BacktestSinks {
    std::ostream* quantiles = nullptr;
    std::ostream* paths = nullptr;
};

BacktestResult run_backtest(const TimeSeriesPanel& panel, const BacktestConfig& config,
                            const BacktestSinks& sinks = {});

/// Writes quantiles.csv, scores.txt, scores.json, calibration.csv and
/// manifest.json (plus paths.csv when kept) under config.output_dir.
BacktestResult run_backtest_to_dir(const TimeSeriesPanel& panel, const BacktestConfig& config,
                                   const std::string& panel_path = {});

std::string report_json(const BacktestResult& result, const BacktestConfig& config);
void write_calibration_csv(std::ostream& os, const std::map<std::string, std::vector<CalibrationCurves>>& curves,
                           const std::vector<std::string>& series);

struct QuantileFileScores {
    ScoreReport report;
    std::map<std::string, std::vector<CalibrationCurves>> calibration;  // from the quantile CDFs
};
/// Scores an existing quantile file against the panel's realized values.
QuantileFileScores score_quantile_file(const TimeSeriesPanel& panel, const std::string& path,
                                       const BacktestConfig& config);

/// Path of a saved fit inside a fits directory.
std::string fit_path(const std::string& dir, std::size_t block, Family family, const std::string& series);

}  // namespace qesn
