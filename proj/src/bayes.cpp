#include "qesn/bayes.hpp"
#include "qesn/kernels.hpp"
#include "qesn/random.hpp"
#include "qesn/special.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <numeric>

namespace qesn {

void GaussianRidgePrior::validate() const {
    if (!(a > 0 && b > 0 && a_tilde > 0 && b_tilde > 0))
        throw PriorError("GaussianRidgePrior: hyperparameters must be positive");
}

void SkewTPrior::validate() const {
    if (!(nu > 0)) throw PriorError("SkewTPrior: nu must be positive");
    if (!(D0 > 0 && c0 > 0 && b0 > 0 && B0 > 0)) throw PriorError("SkewTPrior: hyperparameters must be positive");
    if (C0 && !(*C0 > 0)) throw PriorError("SkewTPrior: C0 must be positive");
}

namespace {

void check_inputs(const DesignMatrix& B, std::span<const double> y, const McmcOptions& opt, const char* who) {
    if (B.rows() != static_cast<Eigen::Index>(y.size()))
        throw DimensionError(std::string(who) + ": design rows " + std::to_string(B.rows()) +
                             " != response length " + std::to_string(y.size()));
    if (y.empty()) throw InputError(std::string(who) + ": empty response");
    for (double v : y)
        if (!std::isfinite(v)) throw InputError(std::string(who) + ": non-finite response");
    if (!B.B.allFinite()) throw NumericError(std::string(who) + ": non-finite design matrix");
    if (opt.n_iter <= opt.n_burn || opt.n_burn < 0)
        throw InvalidArgument(std::string(who) + ": need n_iter > n_burn >= 0");
}

double sample_variance(std::span<const double> y) {
    const double n = static_cast<double>(y.size());
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : y) ss += (v - mean) * (v - mean);
    return ss / std::max(1.0, n - 1.0);
}

void record_beta(PosteriorDraws& d, const Vector& beta, int slot, bool keep) {
    if (keep) d.beta.row(slot) = beta.transpose();
    d.beta_mean += beta;
}

}  // namespace

PosteriorDraws gibbs_gaussian(const DesignMatrix& design, std::span<const double> y_span,
                              const GaussianRidgePrior& prior, const McmcOptions& opt) {
    check_inputs(design, y_span, opt, "gibbs_gaussian");
    prior.validate();
    const Matrix& B = design.B;
    const Eigen::Index T = B.rows(), p = B.cols();
    const Eigen::Map<const Vector> y(y_span.data(), T);

    // B'B = Q diag(lambda) Q' once; each beta draw then costs O(p^2):
    // posterior precision B'B/sigma2 + I/tau2 shares the eigenvectors.
    const Matrix BtB = kernels::gram(B, Exec::parallel);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(BtB);
    if (eig.info() != Eigen::Success) throw NumericError("gibbs_gaussian: eigendecomposition of B'B failed");
    const Matrix& Q = eig.eigenvectors();
    const Vector lambda = eig.eigenvalues().cwiseMax(0.0);
    const Vector Qty = Q.transpose() * (B.transpose() * y);

    Rng rng(opt.seed);
    const int n_draw = opt.n_iter - opt.n_burn;
    PosteriorDraws d;
    d.family = "gaussian";
    d.beta_mean = Vector::Zero(p);
    if (opt.keep_beta_draws) d.beta.resize(n_draw, p);
    d.sigma2.reserve(n_draw);
    d.tau2.reserve(n_draw);

    double sigma2 = std::max(sample_variance(y_span), 1e-8);
    double tau2 = 1.0;
    Vector beta(p), coef(p), resid(T);
    for (int it = 0; it < opt.n_iter; ++it) {
        for (Eigen::Index j = 0; j < p; ++j) {
            const double prec = lambda[j] / sigma2 + 1.0 / tau2;
            if (!(prec > 0.0) || !std::isfinite(prec)) throw NumericError("gibbs_gaussian: singular posterior precision");
            coef[j] = Qty[j] / sigma2 / prec + rng.normal() / std::sqrt(prec);
        }
        beta.noalias() = Q * coef;
        resid = y - B * beta;
        const double ssr = resid.squaredNorm();
        sigma2 = rng.inv_gamma(prior.a + 0.5 * static_cast<double>(T), prior.b + 0.5 * ssr);
        tau2 = rng.inv_gamma(prior.a_tilde + 0.5 * static_cast<double>(p), prior.b_tilde + 0.5 * beta.squaredNorm());
        if (!std::isfinite(sigma2) || !std::isfinite(tau2) || !beta.allFinite())
            throw NumericError("gibbs_gaussian: non-finite draw at iteration " + std::to_string(it));
        if (it >= opt.n_burn) {
            record_beta(d, beta, it - opt.n_burn, opt.keep_beta_draws);
            d.sigma2.push_back(sigma2);
            d.tau2.push_back(tau2);
        }
    }
    d.beta_mean /= static_cast<double>(n_draw);
    return d;
}

PosteriorDraws gibbs_skew_t(const DesignMatrix& design, std::span<const double> y_span, const SkewTPrior& prior,
                            const McmcOptions& opt) {
    check_inputs(design, y_span, opt, "gibbs_skew_t");
    prior.validate();
    const Matrix& B = design.B;
    const Eigen::Index T = B.rows(), p = B.cols();
    const Eigen::Map<const Vector> y(y_span.data(), T);
    const double nu = prior.nu;
    const double C0 = prior.C0 ? *prior.C0 : 0.5 * sample_variance(y_span);
    if (!(C0 > 0.0)) throw PriorError("gibbs_skew_t: C0 must be positive (constant response?)");

    Rng rng(opt.seed);
    const int n_draw = opt.n_iter - opt.n_burn;
    PosteriorDraws d;
    d.family = "skew_t";
    d.nu = nu;
    d.beta_mean = Vector::Zero(p);
    if (opt.keep_beta_draws) d.beta.resize(n_draw, p);
    d.zeta_mean.assign(static_cast<std::size_t>(T), 0.0);
    d.w_mean.assign(static_cast<std::size_t>(T), 0.0);

    // Augmented regression on [B, zeta]: coefficient vector (beta, psi).
    Matrix Bz(T, p + 1);
    Bz.leftCols(p) = B;
    Vector theta = Vector::Zero(p + 1);
    Vector zeta = Vector::Ones(T), w = Vector::Ones(T), fitted(T), resid(T);
    double sigma2 = std::max(sample_variance(y_span), 1e-8);
    double tau2 = 1.0;
    Matrix prec(p + 1, p + 1);
    for (int it = 0; it < opt.n_iter; ++it) {
        double psi = theta[p];
        fitted.noalias() = B * theta.head(p);
        // zeta_t | rest
        const double denom = sigma2 + psi * psi;
        for (Eigen::Index t = 0; t < T; ++t) {
            const double r = y[t] - fitted[t];
            const double mean = psi * r / denom;
            const double sd = std::sqrt(sigma2 / denom / w[t]);
            zeta[t] = rng.truncated_normal_positive(mean, sd);
        }
        // w_t | rest
        for (Eigen::Index t = 0; t < T; ++t) {
            const double e = y[t] - fitted[t] - psi * zeta[t];
            w[t] = rng.gamma(0.5 * (nu + 2.0), 0.5 * (nu + zeta[t] * zeta[t] + e * e / sigma2));
        }
        // (beta, psi) | rest: weighted regression, weights w/sigma2.
        Bz.col(p) = zeta;
        const Vector sw = (w / sigma2).cwiseSqrt();
        const Matrix Bw = Bz.array().colwise() * sw.array();
        prec.setZero();
        prec.selfadjointView<Eigen::Lower>().rankUpdate(Bw.transpose());
        for (Eigen::Index j = 0; j < p; ++j) prec(j, j) += 1.0 / tau2;
        prec(p, p) += 1.0 / prior.D0;
        Eigen::LLT<Matrix> llt(prec.selfadjointView<Eigen::Lower>());
        if (llt.info() != Eigen::Success)
            throw NumericError("gibbs_skew_t: posterior precision not positive definite at iteration " +
                               std::to_string(it));
        const Vector rhs = Bw.transpose() * (y.array() * sw.array()).matrix();
        const Vector mean = llt.solve(rhs);
        Vector zdraw(p + 1);
        for (Eigen::Index j = 0; j <= p; ++j) zdraw[j] = rng.normal();
        theta = mean + llt.matrixU().solve(zdraw);
        psi = theta[p];
        // sigma^2 | rest
        resid = y - Bz * theta;
        const double wss = (w.array() * resid.array().square()).sum();
        sigma2 = rng.inv_gamma(prior.c0 + 0.5 * static_cast<double>(T), C0 + 0.5 * wss);
        // tau^2 | beta
        tau2 = rng.inv_gamma(prior.b0 + 0.5 * static_cast<double>(p), prior.B0 + 0.5 * theta.head(p).squaredNorm());
        if (!std::isfinite(sigma2) || !std::isfinite(tau2) || !theta.allFinite())
            throw NumericError("gibbs_skew_t: non-finite draw at iteration " + std::to_string(it));
        if (it >= opt.n_burn) {
            const Vector beta = theta.head(p);
            record_beta(d, beta, it - opt.n_burn, opt.keep_beta_draws);
            d.sigma2.push_back(sigma2);
            d.tau2.push_back(tau2);
            d.psi.push_back(psi);
            for (Eigen::Index t = 0; t < T; ++t) {
                d.zeta_mean[static_cast<std::size_t>(t)] += zeta[t];
                d.w_mean[static_cast<std::size_t>(t)] += w[t];
            }
        }
    }
    d.beta_mean /= static_cast<double>(n_draw);
    for (auto& v : d.zeta_mean) v /= n_draw;
    for (auto& v : d.w_mean) v /= n_draw;
    return d;
}

PointParameters posterior_mean(const PosteriorDraws& d) {
    if (d.n_draw() < 1) throw InvalidArgument("posterior_mean: no draws");
    auto mean = [](const std::vector<double>& v) {
        return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    PointParameters p;
    p.beta = d.beta.rows() > 0 ? Vector(d.beta.colwise().mean().transpose()) : d.beta_mean;
    p.sigma2 = mean(d.sigma2);
    p.tau2 = mean(d.tau2);
    p.psi = mean(d.psi);
    p.nu = d.nu;
    return p;
}

double skew_t_density(double e, double omega2, double alpha, double nu) {
    const double omega = std::sqrt(omega2);
    const double x = e / omega;
    const double arg = alpha * x * std::sqrt((nu + 1.0) / (nu + x * x));
    return 2.0 / omega * student_t_pdf(x, nu) * student_t_cdf(arg, nu + 1.0);
}

SkewTLatentParams skew_t_to_latent(double omega2, double alpha) {
    const double delta = alpha / std::sqrt(1.0 + alpha * alpha);
    const double psi = std::sqrt(omega2) * delta;
    return {psi, omega2 - psi * psi};
}

void latent_to_skew_t(double psi, double sigma2, double& omega2, double& alpha) {
    omega2 = sigma2 + psi * psi;
    alpha = psi / std::sqrt(sigma2);
}

double draw_skew_t_latent(Rng& rng, double psi, double sigma2, double nu) {
    const double w = rng.gamma(0.5 * nu, 0.5 * nu);
    const double zeta = std::abs(rng.normal()) / std::sqrt(w);
    return psi * zeta + std::sqrt(sigma2 / w) * rng.normal();
}

}  // namespace qesn
