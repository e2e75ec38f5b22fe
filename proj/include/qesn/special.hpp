#pragma once

namespace qesn {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))

double normal_pdf(double x);
double normal_logpdf(double x);
double normal_cdf(double x);
/// Phi^{-1}(p) for p in (0,1); +-inf at the endpoints.
double normal_quantile(double p);

double student_t_pdf(double x, double nu);
double student_t_logpdf(double x, double nu);
double student_t_cdf(double x, double nu);

}  // namespace qesn
