#pragma once

#include "qesn/common.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qesn {

enum class ValueScale { raw_y, normal_score };

/// Which lagged values and exogenous columns make up x_t.
struct FeatureSpec {
    std::vector<std::string> series_ids;
    std::vector<int> short_lags;
    std::vector<int> long_lags;
    std::vector<std::string> exogenous;
    /// Exogenous columns are forecasts issued before the origin and stamped
    /// at their target time; false means realized values (look-ahead).
    bool exogenous_forward = true;
    bool include_intercept = true;
    ValueScale value_scale = ValueScale::raw_y;

    /// Lags 1..48 and {96,...,336} over the given series, intercept on.
    static FeatureSpec half_hourly_default(std::vector<std::string> series);

    int n_x() const;
    int max_lag() const;
    void validate() const;
};

/// Observed values on the feature scale (raw Y or normal scores), indexed by
/// time step.
struct FeatureFrame {
    std::vector<std::string> series_ids;
    std::vector<std::vector<double>> values;  // [series][t]
    std::vector<std::string> exog_names;
    std::vector<std::vector<double>> exog;    // [column][t]

    std::int64_t length() const { return values.empty() ? 0 : static_cast<std::int64_t>(values.front().size()); }
    int series_index(const std::string& id) const;  // -1 when absent
    int exog_index(const std::string& name) const;  // -1 when absent
};

/// Records reads of data stamped after the information cutoff.
class ProvenanceAudit {
public:
    void check(std::int64_t index, std::int64_t cutoff, std::string_view what, std::string_view subject = {});
    std::int64_t violations() const { return violations_; }
    const std::vector<std::string>& messages() const { return messages_; }
    void merge(const ProvenanceAudit& other);
    /// Throws AuditError when any violation was recorded.
    void require_clean() const;

private:
    std::int64_t violations_ = 0;
    std::vector<std::string> messages_;
};

/// FeatureSpec resolved against a frame: column indices and flat lag list.
struct FeatureLayout {
    FeatureSpec spec;
    std::vector<int> series_columns;
    std::vector<int> exog_columns;
    std::vector<int> lags;  // short then long
    int n_x = 0;

    FeatureLayout() = default;
    FeatureLayout(const FeatureSpec& spec, const FeatureFrame& frame);

    /// Fills out with x_t. value(j, tau) returns series j (frame index) at
    /// time tau; exog(c, tau) the exogenous column c.
    template <typename ValueFn, typename ExogFn>
    void assemble(std::int64_t t, ValueFn&& value, ExogFn&& exog, std::span<double> out) const {
        std::size_t k = 0;
        if (spec.include_intercept) out[k++] = 1.0;
        for (int j : series_columns)
            for (int lag : lags) out[k++] = value(j, t - lag);
        for (int c : exog_columns) out[k++] = exog(c, t);
    }
};

/// x_t from observed data only. Throws InputError within the warm-up.
std::vector<double> make_features(const FeatureFrame& frame, std::int64_t t, const FeatureSpec& spec);
void make_features(const FeatureFrame& frame, const FeatureLayout& layout, std::int64_t t, std::span<double> out,
                   ProvenanceAudit* audit = nullptr);

/// Stacks x_t for t in [begin, end] (inclusive) as rows.
RowMatrix feature_matrix(const FeatureFrame& frame, const FeatureLayout& layout, std::int64_t begin,
                         std::int64_t end, ProvenanceAudit* audit = nullptr);

/// Parses "1-48", "96,144,192" or "1-4,96" into a lag list.
std::vector<int> parse_lag_list(const std::string& text);

}  // namespace qesn
