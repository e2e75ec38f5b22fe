#pragma once

#include "qesn/common.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qesn {

/// Maps nominal prices to the log scale Y = log(price + shift).
struct PriceTransform {
    double shift = 1001.0;
    double lower_price = -1000.0;
    double upper_price = 14500.0;

    double to_y(double price) const;
    double to_price(double y) const;
    double lower_y() const { return to_y(lower_price); }
    /// Upper Y bound for a price cap. `log_cap` selects log(cap) instead of
    /// log(cap + shift).
    double upper_y(double cap, bool log_cap = false) const;
};

double transform_price(double price, const PriceTransform& t);
double inverse_transform_price(double y, const PriceTransform& t);

/// Time-invariant margin: bounded KDE tabulated on a uniform grid.
struct MarginModel {
    std::vector<double> grid;
    std::vector<double> pdf;
    std::vector<double> cdf;
    double bandwidth = 0.0;
    double lower_y = 0.0;
    double upper_y = 1.0;
    std::string id;  // free-form reference used by copula fits

    double pdf_at(double y) const;
    double cdf_at(double y) const;
    double quantile(double u) const;
};

struct KdeOptions {
    std::optional<double> bandwidth;  // Silverman's rule when unset
    int grid_points = 2048;
    Exec exec = Exec::parallel;
};

double silverman_bandwidth(std::span<const double> samples);

MarginModel fit_bounded_kde(std::span<const double> samples, double lower_y, double upper_y,
                            const KdeOptions& options = {});

double margin_pdf(const MarginModel& m, double y);
double margin_cdf(const MarginModel& m, double y);
double margin_quantile(const MarginModel& m, double u);

inline constexpr double kNormalScoreClamp = 1e-7;

double to_normal_score(const MarginModel& m, double y);
std::vector<double> to_normal_scores(const MarginModel& m, std::span<const double> y);
/// Inverse of to_normal_score: F^{-1}(Phi(z)).
double from_normal_score(const MarginModel& m, double z);

/// Columnar text: '#'-prefixed key=value header, then grid,pdf,cdf rows.
void write_margin(std::ostream& os, const MarginModel& m);
MarginModel read_margin(std::istream& is);

/// Builds a MarginModel from a tabulated density (normalized internally).
MarginModel margin_from_density(std::vector<double> grid, std::vector<double> pdf);

}  // namespace qesn
