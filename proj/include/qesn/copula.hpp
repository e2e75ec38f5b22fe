#pragma once

#include "qesn/bayes.hpp"
#include "qesn/common.hpp"
#include "qesn/margins.hpp"
#include "qesn/reservoir.hpp"

#include <span>
#include <string>

namespace qesn {

class Rng;

/// Weibull(shape, scale) prior on tau^2.
struct WeibullTau2Prior {
    double shape = 0.5;
    double scale = 2.5;
    void validate() const;
    double log_density(double tau2) const;
};

struct CopulaMcmcOptions {
    McmcOptions mcmc;
    double target_acceptance = 0.44;
    double initial_log_step = 0.5;
    double initial_tau2 = 1.0;
};

/// Fitted copula output layer for one reservoir configuration. sigma^2 is
/// absent: the copula is scale free.
struct CopulaFit {
    Vector beta_mean;   // length 2 n_h (no intercept)
    double tau2_mean = 0.0;
    PosteriorDraws draws;
    std::string margin_ref;
};

/// (1 + |b|^2 / tau2)^{-1/2}
double psi_scale(std::span<const double> b_row, double tau2);
double psi_scale_from_norm2(double b_norm2, double tau2);

/// sum_t log phi((z_t - psi_t b_t'beta)/psi_t) - log psi_t. The constant
/// margin-ratio term is excluded.
double conditional_loglik(const DesignMatrix& B, std::span<const double> z, const Vector& beta, double tau2);

CopulaFit mcmc_copula(const DesignMatrix& B, std::span<const double> z, const WeibullTau2Prior& prior,
                      const CopulaMcmcOptions& options);

/// Location and scale of the normal-score predictive N(mu, psi^2).
struct CopulaPredictiveScale {
    double mu;
    double psi;
};
CopulaPredictiveScale copula_predictive_scale(std::span<const double> b_row, const Vector& beta, double tau2);

double copula_predictive_density(double y, std::span<const double> b_row, const Vector& beta, double tau2,
                                 const MarginModel& margin);
inline double copula_predictive_density(double y, std::span<const double> b_row, const CopulaFit& fit,
                                        const MarginModel& margin) {
    return copula_predictive_density(y, b_row, fit.beta_mean, fit.tau2_mean, margin);
}

struct CopulaDraw {
    double y;
    double z;
};
CopulaDraw copula_predictive_draw(std::span<const double> b_row, const Vector& beta, double tau2,
                                  const MarginModel& margin, Rng& rng);

/// R = S (I + B B'/tau2) S for small t; used to validate the O(T) likelihood.
Matrix copula_correlation(const DesignMatrix& B, double tau2);
/// log phi(z; 0, R) - sum log phi_1(z_t): the copula log density in normal scores.
double copula_log_density_direct(const DesignMatrix& B, std::span<const double> z, double tau2);

}  // namespace qesn
