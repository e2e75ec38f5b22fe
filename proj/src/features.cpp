#include "qesn/features.hpp"

#include <algorithm>
#include <sstream>

namespace qesn {

FeatureSpec FeatureSpec::half_hourly_default(std::vector<std::string> series) {
    FeatureSpec s;
    s.series_ids = std::move(series);
    for (int l = 1; l <= 48; ++l) s.short_lags.push_back(l);
    s.long_lags = {96, 144, 192, 240, 288, 336};
    return s;
}

int FeatureSpec::n_x() const {
    return (include_intercept ? 1 : 0) +
           static_cast<int>(series_ids.size() * (short_lags.size() + long_lags.size()) + exogenous.size());
}

int FeatureSpec::max_lag() const {
    int m = 0;
    for (int l : short_lags) m = std::max(m, l);
    for (int l : long_lags) m = std::max(m, l);
    return m;
}

void FeatureSpec::validate() const {
    for (int l : short_lags)
        if (l <= 0) throw ConfigError("FeatureSpec: lags must be positive (got " + std::to_string(l) + ")");
    for (int l : long_lags)
        if (l <= 0) throw ConfigError("FeatureSpec: lags must be positive (got " + std::to_string(l) + ")");
    if (n_x() == 0) throw ConfigError("FeatureSpec: empty feature vector");
}

int FeatureFrame::series_index(const std::string& id) const {
    auto it = std::find(series_ids.begin(), series_ids.end(), id);
    return it == series_ids.end() ? -1 : static_cast<int>(it - series_ids.begin());
}

int FeatureFrame::exog_index(const std::string& name) const {
    auto it = std::find(exog_names.begin(), exog_names.end(), name);
    return it == exog_names.end() ? -1 : static_cast<int>(it - exog_names.begin());
}

void ProvenanceAudit::check(std::int64_t index, std::int64_t cutoff, std::string_view what,
                            std::string_view subject) {
    if (index <= cutoff) return;
    ++violations_;
    if (messages_.size() < 20) {
        std::ostringstream msg;
        msg << what;
        if (!subject.empty()) msg << ' ' << subject;
        msg << ": read index " << index << " beyond information cutoff " << cutoff;
        messages_.push_back(msg.str());
    }
}

void ProvenanceAudit::merge(const ProvenanceAudit& other) {
    violations_ += other.violations_;
    for (const auto& m : other.messages_)
        if (messages_.size() < 20) messages_.push_back(m);
}

void ProvenanceAudit::require_clean() const {
    if (violations_ == 0) return;
    std::ostringstream msg;
    msg << "provenance audit failed: " << violations_ << " look-ahead read(s)";
    for (const auto& m : messages_) msg << "\n  " << m;
    throw AuditError(msg.str());
}

FeatureLayout::FeatureLayout(const FeatureSpec& s, const FeatureFrame& frame) : spec(s) {
    spec.validate();
    for (const auto& id : spec.series_ids) {
        const int j = frame.series_index(id);
        if (j < 0) throw InputError("features: series '" + id + "' not in frame");
        series_columns.push_back(j);
    }
    for (const auto& name : spec.exogenous) {
        const int c = frame.exog_index(name);
        if (c < 0) throw InputError("features: exogenous column '" + name + "' missing");
        exog_columns.push_back(c);
    }
    lags = spec.short_lags;
    lags.insert(lags.end(), spec.long_lags.begin(), spec.long_lags.end());
    n_x = spec.n_x();
}

void make_features(const FeatureFrame& frame, const FeatureLayout& layout, std::int64_t t, std::span<double> out,
                   ProvenanceAudit* audit) {
    if (out.size() != static_cast<std::size_t>(layout.n_x)) throw DimensionError("make_features: output length");
    if (t < layout.spec.max_lag())
        throw InputError("make_features: t=" + std::to_string(t) + " lies within the warm-up of " +
                         std::to_string(layout.spec.max_lag()) + " steps");
    if (t >= frame.length()) throw InputError("make_features: t beyond frame");
    const std::int64_t exog_cutoff = layout.spec.exogenous_forward ? t : t - 1;
    layout.assemble(
        t,
        [&](int j, std::int64_t tau) {
            if (audit) audit->check(tau, t - 1, "lagged value of", frame.series_ids[j]);
            return frame.values[j][tau];
        },
        [&](int c, std::int64_t tau) {
            if (audit) audit->check(tau, exog_cutoff, "exogenous", frame.exog_names[c]);
            return frame.exog[c][tau];
        },
        out);
}

std::vector<double> make_features(const FeatureFrame& frame, std::int64_t t, const FeatureSpec& spec) {
    FeatureLayout layout(spec, frame);
    std::vector<double> x(static_cast<std::size_t>(layout.n_x));
    make_features(frame, layout, t, x);
    return x;
}

RowMatrix feature_matrix(const FeatureFrame& frame, const FeatureLayout& layout, std::int64_t begin,
                         std::int64_t end, ProvenanceAudit* audit) {
    if (end < begin) throw InvalidArgument("feature_matrix: empty range");
    RowMatrix X(end - begin + 1, layout.n_x);
    for (std::int64_t t = begin; t <= end; ++t)
        make_features(frame, layout, t, {X.row(t - begin).data(), static_cast<std::size_t>(layout.n_x)}, audit);
    return X;
}

std::vector<int> parse_lag_list(const std::string& text) {
    std::vector<int> lags;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
        if (item.empty()) continue;
        const auto dash = item.find('-', 1);
        try {
            if (dash != std::string::npos) {
                const int a = std::stoi(item.substr(0, dash)), b = std::stoi(item.substr(dash + 1));
                if (b < a) throw ConfigError("lag range '" + item + "' is descending");
                for (int l = a; l <= b; ++l) lags.push_back(l);
            } else {
                lags.push_back(std::stoi(item));
            }
        } catch (const std::logic_error&) {
            throw ConfigError("cannot parse lag list entry '" + item + "'");
        }
    }
    return lags;
}

}  // namespace qesn
