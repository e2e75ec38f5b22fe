#include "qesn/copula.hpp"
#include "qesn/kernels.hpp"
#include "qesn/random.hpp"
#include "qesn/special.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>

namespace qesn {

void WeibullTau2Prior::validate() const {
    if (!(shape > 0 && scale > 0)) throw PriorError("WeibullTau2Prior: shape and scale must be positive");
}

double WeibullTau2Prior::log_density(double tau2) const {
    const double x = tau2 / scale;
    return std::log(shape / scale) + (shape - 1.0) * std::log(x) - std::pow(x, shape);
}

double psi_scale_from_norm2(double b_norm2, double tau2) {
    if (!(tau2 > 0.0)) throw DomainError("psi_scale: tau2 must be positive");
    return 1.0 / std::sqrt(1.0 + b_norm2 / tau2);
}

double psi_scale(std::span<const double> b_row, double tau2) {
    double n2 = 0.0;
    for (double b : b_row) n2 += b * b;
    return psi_scale_from_norm2(n2, tau2);
}

namespace {

// Conditional log-likelihood from precomputed row norms and b_t'beta.
double loglik_from_parts(const Vector& norm2, const Vector& mean_part, std::span<const double> z, double tau2) {
    double ll = 0.0;
    for (Eigen::Index t = 0; t < norm2.size(); ++t) {
        const double psi = psi_scale_from_norm2(norm2[t], tau2);
        const double u = (z[static_cast<std::size_t>(t)] - psi * mean_part[t]) / psi;
        ll += normal_logpdf(u) - std::log(psi);
    }
    return ll;
}

}  // namespace

double conditional_loglik(const DesignMatrix& B, std::span<const double> z, const Vector& beta, double tau2) {
    if (B.rows() != static_cast<Eigen::Index>(z.size()))
        throw DimensionError("conditional_loglik: design rows != length of z");
    if (B.cols() != beta.size()) throw DimensionError("conditional_loglik: beta length mismatch");
    if (!B.B.allFinite() || !beta.allFinite() || !std::isfinite(tau2))
        throw InputError("conditional_loglik: non-finite input");
    for (double v : z)
        if (!std::isfinite(v)) throw InputError("conditional_loglik: non-finite normal score");
    const Vector norm2 = B.B.rowwise().squaredNorm();
    const Vector mean_part = B.B * beta;
    return loglik_from_parts(norm2, mean_part, z, tau2);
}

CopulaFit mcmc_copula(const DesignMatrix& design, std::span<const double> z, const WeibullTau2Prior& prior,
                      const CopulaMcmcOptions& options) {
    prior.validate();
    const McmcOptions& opt = options.mcmc;
    const Matrix& B = design.B;
    const Eigen::Index T = B.rows(), p = B.cols();
    if (T != static_cast<Eigen::Index>(z.size())) throw DimensionError("mcmc_copula: design rows != length of z");
    if (opt.n_iter <= opt.n_burn || opt.n_burn < 0) throw InvalidArgument("mcmc_copula: need n_iter > n_burn >= 0");
    if (!B.allFinite()) throw NumericError("mcmc_copula: non-finite design");
    for (double v : z)
        if (!std::isfinite(v)) throw InputError("mcmc_copula: non-finite normal score");

    const Matrix BtB = kernels::gram(B, Exec::parallel);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(BtB);
    if (eig.info() != Eigen::Success) throw NumericError("mcmc_copula: eigendecomposition of B'B failed");
    const Matrix& Q = eig.eigenvectors();
    const Vector lambda = eig.eigenvalues().cwiseMax(0.0);
    const Vector norm2 = B.rowwise().squaredNorm();
    const Eigen::Map<const Vector> zv(z.data(), T);

    Rng rng(opt.seed);
    const int n_draw = opt.n_iter - opt.n_burn;
    CopulaFit fit;
    PosteriorDraws& d = fit.draws;
    d.family = "copula";
    d.beta_mean = Vector::Zero(p);
    if (opt.keep_beta_draws) d.beta.resize(n_draw, p);

    double tau2 = options.initial_tau2;
    double log_step = options.initial_log_step;
    Vector beta = Vector::Zero(p), coef(p), ztilde(T), mean_part(T);
    int accepted = 0, accepted_window = 0, window = 0, adapt_rounds = 0;

    auto log_target = [&](double t2, double beta_sq) {
        // log conditional likelihood + log N(beta; 0, I/t2) + log Weibull + Jacobian of log t2
        return loglik_from_parts(norm2, mean_part, z, t2) + 0.5 * static_cast<double>(p) * std::log(t2) -
               0.5 * t2 * beta_sq + prior.log_density(t2) + std::log(t2);
    };

    for (int it = 0; it < opt.n_iter; ++it) {
        // beta | tau2, z ~ N((B'B + tau2 I)^{-1} B' ztilde, (B'B + tau2 I)^{-1}), ztilde = z / psi.
        for (Eigen::Index t = 0; t < T; ++t) ztilde[t] = zv[t] / psi_scale_from_norm2(norm2[t], tau2);
        const Vector Qtr = Q.transpose() * (B.transpose() * ztilde);
        for (Eigen::Index j = 0; j < p; ++j) {
            const double prec = lambda[j] + tau2;
            coef[j] = Qtr[j] / prec + rng.normal() / std::sqrt(prec);
        }
        beta.noalias() = Q * coef;
        mean_part.noalias() = B * beta;
        const double beta_sq = beta.squaredNorm();

        // tau2 | beta, z: random-walk Metropolis on log tau2.
        const double current = log_target(tau2, beta_sq);
        const double proposal = tau2 * std::exp(log_step * rng.normal());
        const double candidate = log_target(proposal, beta_sq);
        const bool accept = std::log(rng.uniform()) < candidate - current;
        if (accept) tau2 = proposal;
        if (!std::isfinite(tau2) || !(tau2 > 0.0) || !beta.allFinite())
            throw NumericError("mcmc_copula: non-finite draw at iteration " + std::to_string(it));

        if (it < opt.n_burn) {
            // Adapt the step toward the target acceptance in windows of 50.
            accepted_window += accept ? 1 : 0;
            if (++window == 50) {
                ++adapt_rounds;
                const double rate = accepted_window / 50.0;
                const double gain = std::min(0.5, 1.0 / std::sqrt(static_cast<double>(adapt_rounds)));
                log_step *= std::exp(gain * (rate - options.target_acceptance));
                window = accepted_window = 0;
            }
        } else {
            accepted += accept ? 1 : 0;
            if (opt.keep_beta_draws) d.beta.row(it - opt.n_burn) = beta.transpose();
            d.beta_mean += beta;
            d.tau2.push_back(tau2);
        }
    }
    d.beta_mean /= static_cast<double>(n_draw);
    d.acceptance_rate = static_cast<double>(accepted) / n_draw;
    d.proposal_scale = log_step;
    d.acceptance_warning = d.acceptance_rate < 0.05 || d.acceptance_rate > 0.9;
    fit.beta_mean = d.beta_mean;
    double s = 0.0;
    for (double v : d.tau2) s += v;
    fit.tau2_mean = s / n_draw;
    return fit;
}

CopulaPredictiveScale copula_predictive_scale(std::span<const double> b_row, const Vector& beta, double tau2) {
    if (static_cast<Eigen::Index>(b_row.size()) != beta.size())
        throw DimensionError("copula predictive: b_row length mismatch");
    double n2 = 0.0, dot = 0.0;
    for (std::size_t j = 0; j < b_row.size(); ++j) {
        n2 += b_row[j] * b_row[j];
        dot += b_row[j] * beta[static_cast<Eigen::Index>(j)];
    }
    const double psi = psi_scale_from_norm2(n2, tau2);
    return {psi * dot, psi};
}

double copula_predictive_density(double y, std::span<const double> b_row, const Vector& beta, double tau2,
                                 const MarginModel& margin) {
    if (!(y >= margin.lower_y && y <= margin.upper_y)) return 0.0;
    const auto [mu, psi] = copula_predictive_scale(b_row, beta, tau2);
    const double z = to_normal_score(margin, y);
    const double u = (z - mu) / psi;
    return std::exp(normal_logpdf(u) - normal_logpdf(z)) / psi * margin.pdf_at(y);
}

CopulaDraw copula_predictive_draw(std::span<const double> b_row, const Vector& beta, double tau2,
                                  const MarginModel& margin, Rng& rng) {
    const auto [mu, psi] = copula_predictive_scale(b_row, beta, tau2);
    const double z = mu + psi * rng.normal();
    return {from_normal_score(margin, z), z};
}

Matrix copula_correlation(const DesignMatrix& B, double tau2) {
    if (!(tau2 > 0.0)) throw DomainError("copula_correlation: tau2 must be positive");
    const Eigen::Index t = B.rows();
    Matrix C = Matrix::Identity(t, t) + B.B * B.B.transpose() / tau2;
    Vector s(t);
    for (Eigen::Index i = 0; i < t; ++i) s[i] = psi_scale_from_norm2(B.B.row(i).squaredNorm(), tau2);
    return s.asDiagonal() * C * s.asDiagonal();
}

double copula_log_density_direct(const DesignMatrix& B, std::span<const double> z, double tau2) {
    const Matrix R = copula_correlation(B, tau2);
    Eigen::LLT<Matrix> llt(R);
    if (llt.info() != Eigen::Success) throw NumericError("copula_log_density_direct: R not positive definite");
    const Eigen::Map<const Vector> zv(z.data(), static_cast<Eigen::Index>(z.size()));
    const Vector L_inv_z = llt.matrixL().solve(zv);
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < R.rows(); ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
    const double n = static_cast<double>(z.size());
    double log_phi = -0.5 * L_inv_z.squaredNorm() - 0.5 * log_det - n * kLogSqrt2Pi;
    for (double v : z) log_phi -= normal_logpdf(v);
    return log_phi;
}

}  // namespace qesn
