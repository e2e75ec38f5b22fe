#pragma once

#include "qesn/features.hpp"
#include "qesn/margins.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qesn {

/// Price cap in force from `effective` (epoch seconds, UTC) onwards.
struct Regime {
    std::int64_t effective = 0;
    double cap = 14500.0;
};

/// Regular half-hourly (by default) panel on the Y scale.
struct TimeSeriesPanel {
    std::vector<std::int64_t> timestamps;  // epoch seconds, UTC
    std::int64_t spacing = 1800;
    std::vector<std::string> series_ids;
    std::vector<std::vector<double>> y;  // [series][t]
    /// Exogenous columns are shared by all series at a timestamp.
    std::vector<std::string> exog_names;
    std::vector<std::vector<double>> exog;  // [column][t]
    std::vector<Regime> regimes;            // sorted by effective time
    PriceTransform transform;
    bool log_cap = false;

    std::int64_t length() const { return static_cast<std::int64_t>(timestamps.size()); }
    int series_index(const std::string& id) const;
    /// Raw-Y feature frame over all series and exogenous columns.
    FeatureFrame frame() const;
    /// Price cap in force at time index t.
    double cap_at(std::int64_t t) const;
    double upper_y_at(std::int64_t t) const;
    double lower_y() const { return transform.lower_y(); }
    /// Throws InputError on irregular spacing or non-finite values.
    void validate() const;
};

struct PanelSchema {
    std::string timestamp_column = "timestamp";
    std::string series_column = "series_id";
    std::string price_column = "price";
    std::int64_t spacing = 1800;
    PriceTransform transform;
    bool log_cap = false;
    std::vector<Regime> regimes;
    char delimiter = ',';
};

/// Parses "YYYY-MM-DD[T ]hh:mm[:ss][Z|+hh:mm|-hh:mm]" to epoch seconds.
std::int64_t parse_timestamp(const std::string& text);
std::string format_timestamp(std::int64_t epoch_seconds);

/// Shifts a UTC timestamp by whole calendar months, clamping the day to
/// the end of the target month.
std::int64_t add_months(std::int64_t epoch_seconds, int months);
/// First 00:00 on the 1st of a month at or after the given time.
std::int64_t month_start_on_or_after(std::int64_t epoch_seconds);

/// Long-format rows (timestamp, series_id, price, exogenous...) pivoted to a
/// panel. Errors name the offending row (1-based, header is row 1).
TimeSeriesPanel load_panel(const std::string& path, const PanelSchema& schema = {});
/// Writes the long format read by load_panel, prices on the nominal scale.
void write_panel(const TimeSeriesPanel& panel, const std::string& path);

/// Parses "2019-07-01:15000,2020-07-01:15100".
std::vector<Regime> parse_regimes(const std::string& text);

}  // namespace qesn
