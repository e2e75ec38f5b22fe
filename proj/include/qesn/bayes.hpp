#pragma once

#include "qesn/common.hpp"
#include "qesn/reservoir.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qesn {

class Rng;

/// sigma^2 ~ IG(a, b), tau^2 ~ IG(a_tilde, b_tilde), beta | tau^2 ~ N(0, tau^2 I).
struct GaussianRidgePrior {
    double a = 0.001;
    double b = 0.001;
    double a_tilde = 0.001;
    double b_tilde = 0.001;
    void validate() const;
};

/// psi ~ N(0, D0), sigma^2 ~ IG(c0, C0), tau^2 ~ IG(b0, B0), fixed nu.
/// C0 unset means 0.5 * sample variance of the response.
struct SkewTPrior {
    double D0 = 1.0;
    double c0 = 2.5;
    std::optional<double> C0;
    double b0 = 1.0;
    double B0 = 0.005;
    double nu = 7.0;
    void validate() const;
};

struct McmcOptions {
    int n_iter = 10000;
    int n_burn = 2000;
    std::uint64_t seed = 1;
    bool keep_beta_draws = true;
};

struct PosteriorDraws {
    std::string family;      // "gaussian", "skew_t" or "copula"
    Matrix beta;             // n_draw x p (empty when draws were not kept)
    Vector beta_mean;        // running mean over post-burn-in draws
    std::vector<double> sigma2;
    std::vector<double> tau2;
    std::vector<double> psi;  // skew-t only
    std::vector<double> zeta_mean;  // skew-t only, per observation
    std::vector<double> w_mean;     // skew-t only, per observation
    double acceptance_rate = 1.0;   // Metropolis steps (copula tau^2); 1 for pure Gibbs
    double proposal_scale = 0.0;
    bool acceptance_warning = false;
    double nu = 0.0;

    int n_draw() const { return static_cast<int>(tau2.size()); }
};

/// Point parameters from posterior means.
struct PointParameters {
    Vector beta;
    double sigma2 = 0.0;
    double tau2 = 0.0;
    double psi = 0.0;
    double nu = 0.0;
};

PosteriorDraws gibbs_gaussian(const DesignMatrix& B, std::span<const double> y,
                              const GaussianRidgePrior& prior, const McmcOptions& options);

PosteriorDraws gibbs_skew_t(const DesignMatrix& B, std::span<const double> y, const SkewTPrior& prior,
                            const McmcOptions& options);

PointParameters posterior_mean(const PosteriorDraws& draws);

/// Azzalini-Capitanio skew-t density with location 0.
double skew_t_density(double e, double omega2, double alpha, double nu);
inline double marginal_error_density_skew_t(double e, double omega2, double alpha, double nu) {
    return skew_t_density(e, omega2, alpha, nu);
}

/// (omega^2, alpha) <-> (psi, sigma^2) with psi = omega*alpha/sqrt(1+alpha^2)
/// and sigma^2 = omega^2 - psi^2.
struct SkewTLatentParams {
    double psi;
    double sigma2;
};
SkewTLatentParams skew_t_to_latent(double omega2, double alpha);
void latent_to_skew_t(double psi, double sigma2, double& omega2, double& alpha);

/// One draw of psi*zeta + eps with eps|w ~ N(0, sigma^2/w), w ~ G(nu/2, nu/2),
/// zeta|w ~ TN_[0,inf)(0, 1/w).
double draw_skew_t_latent(Rng& rng, double psi, double sigma2, double nu);

}  // namespace qesn
