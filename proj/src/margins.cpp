#include "qesn/margins.hpp"
#include "qesn/kernels.hpp"
#include "qesn/special.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace qesn {

double PriceTransform::to_y(double price) const {
    const double arg = price + shift;
    if (!(arg > 0.0)) {
        std::ostringstream msg;
        msg << "transform_price: price " << price << " + shift " << shift << " is not positive";
        throw DomainError(msg.str());
    }
    return std::log(arg);
}

double PriceTransform::to_price(double y) const { return std::exp(y) - shift; }

double PriceTransform::upper_y(double cap, bool log_cap) const {
    return log_cap ? std::log(cap) : to_y(cap);
}

double transform_price(double price, const PriceTransform& t) { return t.to_y(price); }
double inverse_transform_price(double y, const PriceTransform& t) { return t.to_price(y); }

double silverman_bandwidth(std::span<const double> samples) {
    const auto n = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : samples) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    auto q = [&](double p) {
        const double pos = p * (n - 1.0);
        const auto i = static_cast<std::size_t>(pos);
        const double f = pos - static_cast<double>(i);
        return i + 1 < sorted.size() ? sorted[i] * (1 - f) + sorted[i + 1] * f : sorted[i];
    };
    const double iqr = q(0.75) - q(0.25);
    double spread = sd;
    if (iqr > 0.0) spread = std::min(sd, iqr / 1.349);
    return 0.9 * spread * std::pow(n, -0.2);
}

namespace {

void finish_tabulation(MarginModel& m) {
    const std::size_t n = m.grid.size();
    m.cdf.assign(n, 0.0);
    for (std::size_t i = 1; i < n; ++i)
        m.cdf[i] = m.cdf[i - 1] + 0.5 * (m.pdf[i] + m.pdf[i - 1]) * (m.grid[i] - m.grid[i - 1]);
    const double total = m.cdf.back();
    if (!(total > 0.0) || !std::isfinite(total)) throw NumericError("margin: density has no mass on the grid");
    for (std::size_t i = 0; i < n; ++i) {
        m.pdf[i] /= total;
        m.cdf[i] /= total;
    }
    m.cdf.front() = 0.0;
    m.cdf.back() = 1.0;
}

std::size_t cell_of(const std::vector<double>& grid, double y) {
    auto it = std::upper_bound(grid.begin(), grid.end(), y);
    auto i = static_cast<std::size_t>(it - grid.begin());
    if (i == 0) return 0;
    if (i >= grid.size()) return grid.size() - 2;
    return i - 1;
}

}  // namespace

MarginModel fit_bounded_kde(std::span<const double> samples, double lower_y, double upper_y,
                            const KdeOptions& options) {
    if (!(lower_y < upper_y)) throw InvalidArgument("fit_bounded_kde: lower bound must be below upper bound");
    if (samples.size() < 30)
        throw InputError("fit_bounded_kde: need at least 30 samples, got " + std::to_string(samples.size()));
    if (options.grid_points < 2) throw InvalidArgument("fit_bounded_kde: grid needs >= 2 points");
    std::vector<std::size_t> offenders;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (!(samples[i] >= lower_y && samples[i] <= upper_y)) offenders.push_back(i);
    if (!offenders.empty()) {
        std::ostringstream msg;
        msg << "fit_bounded_kde: " << offenders.size() << " samples outside [" << lower_y << ", " << upper_y
            << "]:";
        for (std::size_t k = 0; k < std::min<std::size_t>(offenders.size(), 10); ++k)
            msg << " #" << offenders[k] << "=" << samples[offenders[k]];
        if (offenders.size() > 10) msg << " ...";
        throw InputError(msg.str());
    }
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back() && !options.bandwidth)
        throw InputError("fit_bounded_kde: all samples identical; bandwidth is degenerate");

    MarginModel m;
    m.lower_y = lower_y;
    m.upper_y = upper_y;
    m.bandwidth = options.bandwidth ? *options.bandwidth : silverman_bandwidth(sorted);
    if (!(m.bandwidth > 0.0)) throw InputError("fit_bounded_kde: bandwidth must be positive");
    const auto n = static_cast<std::size_t>(options.grid_points);
    m.grid.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        m.grid[i] = lower_y + (upper_y - lower_y) * static_cast<double>(i) / static_cast<double>(n - 1);
    m.grid.back() = upper_y;
    m.pdf.assign(n, 0.0);
    kernels::reflected_kde_grid(sorted, lower_y, upper_y, m.bandwidth, m.grid, m.pdf, options.exec);
    finish_tabulation(m);
    return m;
}

MarginModel margin_from_density(std::vector<double> grid, std::vector<double> pdf) {
    if (grid.size() < 2 || grid.size() != pdf.size()) throw InvalidArgument("margin_from_density: bad grid");
    MarginModel m;
    m.grid = std::move(grid);
    m.pdf = std::move(pdf);
    m.lower_y = m.grid.front();
    m.upper_y = m.grid.back();
    m.bandwidth = m.grid[1] - m.grid[0];
    finish_tabulation(m);
    return m;
}

double MarginModel::pdf_at(double y) const {
    if (!(y >= lower_y && y <= upper_y)) return 0.0;
    const std::size_t i = cell_of(grid, y);
    const double f = (y - grid[i]) / (grid[i + 1] - grid[i]);
    return pdf[i] + f * (pdf[i + 1] - pdf[i]);
}

double MarginModel::cdf_at(double y) const {
    if (y <= lower_y) return 0.0;
    if (y >= upper_y) return 1.0;
    const std::size_t i = cell_of(grid, y);
    const double f = (y - grid[i]) / (grid[i + 1] - grid[i]);
    return cdf[i] + f * (cdf[i + 1] - cdf[i]);
}

double MarginModel::quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("margin_quantile: level must lie in (0,1)");
    // First cell whose right cdf value reaches u; flat cells are skipped.
    auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    auto j = static_cast<std::size_t>(it - cdf.begin());
    if (j == 0) return grid.front();
    const std::size_t i = j - 1;
    const double span = cdf[j] - cdf[i];
    if (span <= 0.0) return grid[j];
    return grid[i] + (u - cdf[i]) / span * (grid[j] - grid[i]);
}

double margin_pdf(const MarginModel& m, double y) { return m.pdf_at(y); }
double margin_cdf(const MarginModel& m, double y) { return m.cdf_at(y); }
double margin_quantile(const MarginModel& m, double u) { return m.quantile(u); }

double to_normal_score(const MarginModel& m, double y) {
    const double u = std::clamp(m.cdf_at(y), kNormalScoreClamp, 1.0 - kNormalScoreClamp);
    return normal_quantile(u);
}

std::vector<double> to_normal_scores(const MarginModel& m, std::span<const double> y) {
    std::vector<double> z(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) z[i] = to_normal_score(m, y[i]);
    return z;
}

double from_normal_score(const MarginModel& m, double z) {
    const double u = std::clamp(normal_cdf(z), kNormalScoreClamp, 1.0 - kNormalScoreClamp);
    return m.quantile(u);
}

void write_margin(std::ostream& os, const MarginModel& m) {
    os << std::setprecision(17);
    os << "# margin_model v1\n";
    os << "# id=" << m.id << "\n";
    os << "# bandwidth=" << m.bandwidth << "\n";
    os << "# lower_y=" << m.lower_y << "\n";
    os << "# upper_y=" << m.upper_y << "\n";
    os << "# points=" << m.grid.size() << "\n";
    os << "grid,pdf,cdf\n";
    for (std::size_t i = 0; i < m.grid.size(); ++i) os << m.grid[i] << ',' << m.pdf[i] << ',' << m.cdf[i] << '\n';
}

MarginModel read_margin(std::istream& is) {
    MarginModel m;
    std::string line;
    std::size_t expected = 0;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = line.substr(2, eq - 2);
            const std::string val = line.substr(eq + 1);
            if (key == "id") m.id = val;
            else if (key == "bandwidth") m.bandwidth = std::stod(val);
            else if (key == "lower_y") m.lower_y = std::stod(val);
            else if (key == "upper_y") m.upper_y = std::stod(val);
            else if (key == "points") expected = std::stoul(val);
            continue;
        }
        if (!header_seen) {
            if (line != "grid,pdf,cdf") throw LoadError("read_margin: missing column header");
            header_seen = true;
            continue;
        }
        std::istringstream row(line);
        double g, p, c;
        char c1, c2;
        if (!(row >> g >> c1 >> p >> c2 >> c) || c1 != ',' || c2 != ',')
            throw LoadError("read_margin: malformed row '" + line + "'");
        m.grid.push_back(g);
        m.pdf.push_back(p);
        m.cdf.push_back(c);
    }
    if (m.grid.size() < 2 || (expected && m.grid.size() != expected))
        throw LoadError("read_margin: point count mismatch");
    return m;
}

}  // namespace qesn
