#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace qesn::testing {

/// Two-sided Kolmogorov-Smirnov distance between a sample and a CDF.
inline double ks_distance(std::vector<double> x, const std::function<double(double)>& cdf) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
    }
    return d;
}

/// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return acc * h / 3.0;
}

/// CDF of a density by Simpson integration from `lo`, tabulated for lookup.
class TabulatedCdf {
public:
    TabulatedCdf(const std::function<double(double)>& pdf, double lo, double hi, int n = 200000)
        : lo_(lo), h_((hi - lo) / n), cdf_(static_cast<std::size_t>(n) + 1, 0.0) {
        double prev = pdf(lo);
        for (int i = 1; i <= n; ++i) {
            const double mid = pdf(lo + (i - 0.5) * h_), cur = pdf(lo + i * h_);
            cdf_[static_cast<std::size_t>(i)] = cdf_[static_cast<std::size_t>(i - 1)] + h_ * (prev + 4 * mid + cur) / 6;
            prev = cur;
        }
    }
    double operator()(double x) const {
        const double pos = (x - lo_) / h_;
        if (pos <= 0) return 0.0;
        if (pos >= static_cast<double>(cdf_.size() - 1)) return cdf_.back();
        const auto i = static_cast<std::size_t>(pos);
        const double w = pos - static_cast<double>(i);
        return cdf_[i] + w * (cdf_[i + 1] - cdf_[i]);
    }

private:
    double lo_, h_;
    std::vector<double> cdf_;
};

inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("qesn_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline std::string source_dir() {
    const char* s = std::getenv("QESN_SOURCE_DIR");
    return s ? s : ".";
}

inline double mean(const std::vector<double>& v) {
    double a = 0;
    for (double x : v) a += x;
    return a / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
    const double m = mean(v);
    double a = 0;
    for (double x : v) a += (x - m) * (x - m);
    return a / static_cast<double>(v.size() - 1);
}

}  // namespace qesn::testing
