#include "qesn/special.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <limits>

namespace qesn {

double normal_pdf(double x) { return std::exp(normal_logpdf(x)); }

double normal_logpdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    if (p >= 1.0) return std::numeric_limits<double>::infinity();
    if (p < 0.5) return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
    return std::sqrt(2.0) * boost::math::erfc_inv(2.0 * (1.0 - p));
}

double student_t_logpdf(double x, double nu) {
    return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
           0.5 * std::log(nu * M_PI) - 0.5 * (nu + 1.0) * std::log1p(x * x / nu);
}

double student_t_pdf(double x, double nu) { return std::exp(student_t_logpdf(x, nu)); }

double student_t_cdf(double x, double nu) {
    return boost::math::cdf(boost::math::students_t_distribution<double>(nu), x);
}

}  // namespace qesn
