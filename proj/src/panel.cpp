#include "qesn/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace qesn {

int TimeSeriesPanel::series_index(const std::string& id) const {
    for (std::size_t i = 0; i < series_ids.size(); ++i)
        if (series_ids[i] == id) return static_cast<int>(i);
    return -1;
}

FeatureFrame TimeSeriesPanel::frame() const {
    FeatureFrame f;
    f.series_ids = series_ids;
    f.values = y;
    f.exog_names = exog_names;
    f.exog = exog;
    return f;
}

double TimeSeriesPanel::cap_at(std::int64_t t) const {
    double cap = transform.upper_price;
    if (t < 0 || t >= length()) return cap;
    for (const auto& r : regimes)
        if (r.effective <= timestamps[static_cast<std::size_t>(t)]) cap = r.cap;
    return cap;
}

double TimeSeriesPanel::upper_y_at(std::int64_t t) const { return transform.upper_y(cap_at(t), log_cap); }

void TimeSeriesPanel::validate() const {
    if (timestamps.empty()) throw InputError("panel: no rows");
    for (std::size_t i = 1; i < timestamps.size(); ++i)
        if (timestamps[i] - timestamps[i - 1] != spacing)
            throw InputError("panel: irregular spacing at " + format_timestamp(timestamps[i]));
    if (y.size() != series_ids.size()) throw InputError("panel: series count mismatch");
    for (std::size_t s = 0; s < y.size(); ++s) {
        if (y[s].size() != timestamps.size()) throw InputError("panel: series length mismatch");
        for (double v : y[s])
            if (!std::isfinite(v)) throw InputError("panel: non-finite value in series " + series_ids[s]);
    }
    for (std::size_t c = 0; c < exog.size(); ++c)
        if (exog[c].size() != timestamps.size()) throw InputError("panel: exogenous length mismatch");
}

namespace {

// Days since 1970-01-01 of a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp < 10 ? mp + 3 : mp - 9;
    y += m <= 2;
}

int read_int(const std::string& s, std::size_t pos, std::size_t len, const std::string& text) {
    if (pos + len > s.size()) throw InputError("bad timestamp '" + text + "'");
    int v = 0;
    auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, v);
    if (ec != std::errc() || p != s.data() + pos + len) throw InputError("bad timestamp '" + text + "'");
    return v;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, delim)) out.push_back(trim(cur));
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

double parse_number(const std::string& s, std::size_t row, const std::string& what) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
        throw InputError("row " + std::to_string(row) + ": unparseable " + what + " '" + s + "'");
    return v;
}

}  // namespace

std::int64_t parse_timestamp(const std::string& raw) {
    const std::string s = trim(raw);
    if (s.size() < 16 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':')
        throw InputError("bad timestamp '" + raw + "'");
    const int year = read_int(s, 0, 4, raw), month = read_int(s, 5, 2, raw), day = read_int(s, 8, 2, raw);
    const int hour = read_int(s, 11, 2, raw), minute = read_int(s, 14, 2, raw);
    int second = 0;
    std::size_t pos = 16;
    if (pos < s.size() && s[pos] == ':') {
        second = read_int(s, pos + 1, 2, raw);
        pos += 3;
    }
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 60)
        throw InputError("bad timestamp '" + raw + "'");
    std::int64_t offset = 0;
    if (pos < s.size()) {
        if (s[pos] == 'Z' && pos + 1 == s.size()) {
        } else if ((s[pos] == '+' || s[pos] == '-') && s.size() == pos + 6 && s[pos + 3] == ':') {
            const int oh = read_int(s, pos + 1, 2, raw), om = read_int(s, pos + 4, 2, raw);
            offset = (s[pos] == '+' ? 1 : -1) * (oh * 3600 + om * 60);
        } else {
            throw InputError("bad timestamp '" + raw + "'");
        }
    }
    return days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day)) * 86400 + hour * 3600 +
           minute * 60 + second - offset;
}

std::string format_timestamp(std::int64_t t) {
    std::int64_t days = t >= 0 ? t / 86400 : -((-t + 86399) / 86400);
    std::int64_t rem = t - days * 86400;
    std::int64_t y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    char buf[96];
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lld", static_cast<long long>(y), m, d,
                  static_cast<long long>(rem / 3600), static_cast<long long>(rem / 60 % 60),
                  static_cast<long long>(rem % 60));
    return buf;
}

std::int64_t add_months(std::int64_t t, int months) {
    const std::int64_t days = t >= 0 ? t / 86400 : -((-t + 86399) / 86400);
    const std::int64_t rem = t - days * 86400;
    std::int64_t y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    std::int64_t idx = y * 12 + (m - 1) + months;
    std::int64_t ny = idx >= 0 ? idx / 12 : -((-idx + 11) / 12);
    const auto nm = static_cast<unsigned>(idx - ny * 12 + 1);
    static const unsigned mdays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    unsigned last = mdays[nm - 1];
    if (nm == 2 && ((ny % 4 == 0 && ny % 100 != 0) || ny % 400 == 0)) last = 29;
    return days_from_civil(ny, nm, std::min(d, last)) * 86400 + rem;
}

std::int64_t month_start_on_or_after(std::int64_t t) {
    const std::int64_t days = t >= 0 ? t / 86400 : -((-t + 86399) / 86400);
    std::int64_t y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    const std::int64_t start = days_from_civil(y, m, 1) * 86400;
    return start == t ? t : add_months(start, 1);
}

std::vector<Regime> parse_regimes(const std::string& text) {
    std::vector<Regime> out;
    for (const auto& item : split(text, ',')) {
        if (item.empty()) continue;
        const auto colon = item.rfind(':');
        if (colon == std::string::npos) throw ConfigError("regime '" + item + "' must be date:cap");
        std::string date = trim(item.substr(0, colon));
        if (date.size() == 10) date += "T00:00";
        Regime r;
        r.effective = parse_timestamp(date);
        try {
            r.cap = std::stod(item.substr(colon + 1));
        } catch (const std::exception&) {
            throw ConfigError("regime '" + item + "': bad cap");
        }
        out.push_back(r);
    }
    std::sort(out.begin(), out.end(), [](const Regime& a, const Regime& b) { return a.effective < b.effective; });
    return out;
}

TimeSeriesPanel load_panel(const std::string& path, const PanelSchema& schema) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open panel file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw LoadError("panel file '" + path + "' is empty");
    const auto header = split(line, schema.delimiter);
    auto col = [&](const std::string& name) -> int {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw LoadError("panel header lacks column '" + name + "'");
    };
    const int c_ts = col(schema.timestamp_column), c_sid = col(schema.series_column), c_price = col(schema.price_column);
    std::vector<int> exog_cols;
    TimeSeriesPanel p;
    p.spacing = schema.spacing;
    p.transform = schema.transform;
    p.log_cap = schema.log_cap;
    p.regimes = schema.regimes;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const auto ii = static_cast<int>(i);
        if (ii != c_ts && ii != c_sid && ii != c_price) {
            exog_cols.push_back(ii);
            p.exog_names.push_back(header[i]);
        }
    }

    struct Row {
        double y;
        std::vector<double> ex;
        std::size_t row;
    };
    std::map<std::string, std::map<std::int64_t, Row>> data;
    std::map<std::int64_t, std::pair<std::vector<double>, std::size_t>> exog_at;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto f = split(line, schema.delimiter);
        if (f.size() != header.size())
            throw LoadError("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(f.size()));
        std::int64_t ts;
        try {
            ts = parse_timestamp(f[static_cast<std::size_t>(c_ts)]);
        } catch (const InputError& e) {
            throw LoadError("row " + std::to_string(row) + ": " + e.what());
        }
        const std::string& sid = f[static_cast<std::size_t>(c_sid)];
        if (sid.empty()) throw LoadError("row " + std::to_string(row) + ": empty series id");
        double price, y;
        std::vector<double> ex;
        try {
            price = parse_number(f[static_cast<std::size_t>(c_price)], row, "price");
            for (int c : exog_cols) ex.push_back(parse_number(f[static_cast<std::size_t>(c)], row, header[static_cast<std::size_t>(c)]));
            y = p.transform.to_y(price);
        } catch (const Error& e) {
            throw LoadError(std::string(e.what()).rfind("row ", 0) == 0 ? e.what()
                                                                          : "row " + std::to_string(row) + ": " + e.what());
        }
        auto& series = data[sid];
        if (series.count(ts))
            throw LoadError("row " + std::to_string(row) + ": duplicate key (" + format_timestamp(ts) + ", " + sid +
                            ") first seen at row " + std::to_string(series[ts].row));
        if (!ex.empty()) {
            auto it = exog_at.find(ts);
            if (it == exog_at.end()) {
                exog_at.emplace(ts, std::make_pair(ex, row));
            } else if (it->second.first != ex) {
                std::size_t k = 0;
                while (it->second.first[k] == ex[k]) ++k;
                throw LoadError("row " + std::to_string(row) + ": exogenous column '" +
                                header[static_cast<std::size_t>(exog_cols[k])] + "' differs from row " +
                                std::to_string(it->second.second) + " at the same timestamp");
            }
        }
        series.emplace(ts, Row{y, std::move(ex), row});
    }
    if (data.empty()) throw LoadError("panel file '" + path + "' has no data rows");

    // Series in first-appearance order would need another pass; sorted ids are stable.
    const auto& first = data.begin()->second;
    const std::int64_t t0 = first.begin()->first, t1 = first.rbegin()->first;
    for (const auto& [sid, series] : data) {
        if (series.begin()->first != t0 || series.rbegin()->first != t1)
            throw LoadError("series '" + sid + "' covers " + format_timestamp(series.begin()->first) + " to " +
                            format_timestamp(series.rbegin()->first) + ", others " + format_timestamp(t0) + " to " +
                            format_timestamp(t1));
        std::int64_t prev = t0 - p.spacing;
        for (const auto& [ts, r] : series) {
            if (ts - prev != p.spacing) {
                if ((ts - prev) > p.spacing && (ts - prev) % p.spacing == 0)
                    throw LoadError("series '" + sid + "': missing timestamp " + format_timestamp(prev + p.spacing) +
                                    " (gap before row " + std::to_string(r.row) + ")");
                throw LoadError("series '" + sid + "': irregular spacing at row " + std::to_string(r.row) + " (" +
                                format_timestamp(ts) + ")");
            }
            prev = ts;
        }
    }
    for (const auto& [ts, r] : first) p.timestamps.push_back(ts);
    for (const auto& [sid, series] : data) {
        p.series_ids.push_back(sid);
        std::vector<double> v;
        v.reserve(series.size());
        for (const auto& [ts, r] : series) v.push_back(r.y);
        p.y.push_back(std::move(v));
    }
    p.exog.assign(p.exog_names.size(), std::vector<double>(p.timestamps.size()));
    for (std::size_t t = 0; t < p.timestamps.size() && !p.exog_names.empty(); ++t) {
        const auto& ex = exog_at.at(p.timestamps[t]).first;
        for (std::size_t c = 0; c < ex.size(); ++c) p.exog[c][t] = ex[c];
    }
    p.validate();
    return p;
}

void write_panel(const TimeSeriesPanel& p, const std::string& path) {
    p.validate();
    std::ofstream out(path);
    if (!out) throw LoadError("cannot write panel file '" + path + "'");
    out << "timestamp,series_id,price";
    for (const auto& n : p.exog_names) out << ',' << n;
    out << '\n';
    char buf[64];
    for (std::size_t t = 0; t < p.timestamps.size(); ++t) {
        const std::string ts = format_timestamp(p.timestamps[t]);
        for (std::size_t s = 0; s < p.series_ids.size(); ++s) {
            std::snprintf(buf, sizeof buf, "%.17g", p.transform.to_price(p.y[s][t]));
            out << ts << ',' << p.series_ids[s] << ',' << buf;
            for (const auto& c : p.exog) {
                std::snprintf(buf, sizeof buf, "%.17g", c[t]);
                out << ',' << buf;
            }
            out << '\n';
        }
    }
    if (!out) throw LoadError("failed writing panel file '" + path + "'");
}

}  // namespace qesn
