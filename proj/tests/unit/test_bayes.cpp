#include "qesn/bayes.hpp"
#include "qesn/random.hpp"
#include "qesn/special.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace qesn;

namespace {

DesignMatrix random_design(int T, int p, Rng& rng) {
    DesignMatrix d;
    d.B.resize(T, p);
    for (int t = 0; t < T; ++t) {
        d.B(t, 0) = 1.0;
        for (int j = 1; j < p; ++j) d.B(t, j) = rng.normal();
    }
    return d;
}

double posterior_sd(const PosteriorDraws& d, int j) {
    const Vector col = d.beta.col(j);
    return std::sqrt((col.array() - col.mean()).square().sum() / static_cast<double>(col.size() - 1));
}

/// Monte Carlo standard error of a chain mean from 30 non-overlapping batches.
double batch_means_se(const Vector& chain) {
    const int n_batch = 30, len = static_cast<int>(chain.size()) / n_batch;
    std::vector<double> means;
    for (int b = 0; b < n_batch; ++b) means.push_back(chain.segment(b * len, len).mean());
    return std::sqrt(qesn::testing::variance(means) / n_batch);
}

std::vector<double> vec(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST_CASE("prior defaults and validation") {
    GaussianRidgePrior g;
    CHECK(g.a == 0.001);
    CHECK(g.b == 0.001);
    CHECK(g.a_tilde == 0.001);
    CHECK(g.b_tilde == 0.001);
    SkewTPrior s;
    CHECK(s.D0 == 1.0);
    CHECK(s.c0 == 2.5);
    CHECK(s.b0 == 1.0);
    CHECK(s.B0 == 0.005);
    g.a = 0;
    CHECK_THROWS_AS(g.validate(), PriorError);
    s.nu = 0;
    CHECK_THROWS_AS(s.validate(), PriorError);
}

TEST_CASE("near-noiseless data recover the coefficients") {
    Rng rng(1);
    const auto B = random_design(500, 20, rng);
    Vector beta(20);
    for (auto& b : beta) b = rng.normal();
    const Vector yv = B.B * beta + 1e-4 * Vector::NullaryExpr(500, [&] { return rng.normal(); });
    McmcOptions o;
    o.n_iter = 600;
    o.n_burn = 200;
    const auto d = gibbs_gaussian(B, vec(yv), {}, o);
    CHECK((d.beta_mean - beta).cwiseAbs().maxCoeff() < 1e-2);
    CHECK(d.n_draw() == 400);
    for (double s : d.sigma2) CHECK(s > 0.0);
    for (double t : d.tau2) CHECK(t > 0.0);
}

TEST_CASE("one-parameter model matches the conjugate posterior") {
    Rng rng(2);
    DesignMatrix B;
    B.B = Matrix::Ones(400, 1);
    std::vector<double> y(400);
    for (auto& v : y) v = rng.normal(1.7, 1.0);
    McmcOptions o;
    o.n_iter = 6000;
    o.n_burn = 1000;
    const auto d = gibbs_gaussian(B, y, {}, o);
    const double ybar = qesn::testing::mean(y);
    const double sd = posterior_sd(d, 0);
    CHECK(sd == doctest::Approx(1.0 / std::sqrt(400.0)).epsilon(0.1));
    CHECK(std::abs(d.beta_mean(0) - ybar) < 3 * sd);
    // Monte Carlo error of the chain mean is far below the posterior SD.
    CHECK(std::abs(d.beta_mean(0) - ybar) < 3 * sd / std::sqrt(d.n_draw() / 10.0) + 0.02 * sd);
}

TEST_CASE("vague prior approaches least squares") {
    Rng rng(3);
    const auto B = random_design(2000, 6, rng);
    Vector beta(6);
    beta << 0.5, 1, -2, 0.3, 0, 4;
    const Vector yv = B.B * beta + 0.5 * Vector::NullaryExpr(2000, [&] { return rng.normal(); });
    GaussianRidgePrior vague{1e-8, 1e-8, 1e-8, 1e-8};
    McmcOptions o;
    o.n_iter = 4000;
    o.n_burn = 500;
    const auto d = gibbs_gaussian(B, vec(yv), vague, o);
    const Vector ls = B.B.colPivHouseholderQr().solve(yv);
    CHECK((d.beta_mean - ls).norm() / ls.norm() < 0.01);
}

TEST_CASE("chains are bitwise reproducible and stable in length") {
    Rng rng(4);
    const auto B = random_design(300, 8, rng);
    Vector beta = Vector::NullaryExpr(8, [&] { return rng.normal(); });
    const Vector yv = B.B * beta + 0.3 * Vector::NullaryExpr(300, [&] { return rng.normal(); });
    McmcOptions o;
    o.n_iter = 2000;
    o.n_burn = 500;
    o.seed = 77;
    const auto a = gibbs_gaussian(B, vec(yv), {}, o), b = gibbs_gaussian(B, vec(yv), {}, o);
    CHECK(a.beta == b.beta);
    CHECK(a.sigma2 == b.sigma2);
    McmcOptions o2 = o;
    o2.n_iter = 3500;
    const auto c = gibbs_gaussian(B, vec(yv), {}, o2);
    for (int j = 0; j < 8; ++j) {
        const double se = batch_means_se(a.beta.col(j));
        CHECK(std::abs(c.beta_mean(j) - a.beta_mean(j)) < 2 * se);
    }
}

TEST_CASE("input errors") {
    DesignMatrix B;
    B.B = Matrix::Ones(10, 2);
    std::vector<double> y(10, 1.0);
    y[3] = std::nan("");
    McmcOptions o;
    o.n_iter = 10;
    o.n_burn = 2;
    CHECK_THROWS_AS(gibbs_gaussian(B, y, {}, o), InputError);
    std::vector<double> short_y(5, 1.0);
    CHECK_THROWS_AS(gibbs_gaussian(B, short_y, {}, o), DimensionError);
    B.B(0, 0) = std::numeric_limits<double>::infinity();
    std::vector<double> ok(10, 1.0);
    CHECK_THROWS_AS(gibbs_gaussian(B, ok, {}, o), NumericError);
    SkewTPrior bad;
    bad.nu = -1;
    B.B = Matrix::Ones(10, 2);
    CHECK_THROWS_AS(gibbs_skew_t(B, ok, bad, o), PriorError);
}

TEST_CASE("posterior_mean of short chains") {
    PosteriorDraws d;
    d.family = "gaussian";
    d.beta_mean = Vector::Constant(2, 3.0);
    d.sigma2 = {2.0, 2.0, 2.0};
    d.tau2 = {0.0, 2.0};
    auto p = posterior_mean(d);
    CHECK(p.sigma2 == 2.0);
    CHECK(p.tau2 == 1.0);
    CHECK(p.beta(1) == 3.0);
    PosteriorDraws empty;
    CHECK_THROWS(posterior_mean(empty));
}

TEST_CASE("skew-t density special cases") {
    for (double e : {-3.0, -0.2, 0.0, 1.1, 5.0})
        CHECK(skew_t_density(e, 4.0, 0.0, 7.0) == doctest::Approx(student_t_pdf(e / 2.0, 7.0) / 2.0).epsilon(1e-12));
    for (double alpha : {-3.0, 0.5, 10.0})
        CHECK(skew_t_density(0.0, 1.0, alpha, 5.0) == doctest::Approx(student_t_pdf(0.0, 5.0)).epsilon(1e-12));
    const double mass = qesn::testing::simpson([](double e) { return skew_t_density(e, 1.0, 2.0, 7.0); }, -200, 200, 400000);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("parameter maps are mutual inverses") {
    const auto l = skew_t_to_latent(1.0, 2.0);
    CHECK(l.psi == doctest::Approx(2.0 / std::sqrt(5.0)));
    CHECK(l.sigma2 == doctest::Approx(1.0 - 0.8));
    double o2 = 0, a = 0;
    latent_to_skew_t(l.psi, l.sigma2, o2, a);
    CHECK(o2 == doctest::Approx(1.0));
    CHECK(a == doctest::Approx(2.0));
}

TEST_CASE("latent scheme draws follow the closed-form density") {
    struct Case {
        double omega, alpha, nu;
    };
    for (const Case c : {Case{1, 2, 7}, Case{1, -3, 7}, Case{2, 0, 30}}) {
        const auto l = skew_t_to_latent(c.omega * c.omega, c.alpha);
        Rng rng(derive_seed(5, static_cast<std::uint64_t>(c.alpha + 10)));
        std::vector<double> x(100000);
        for (auto& v : x) v = draw_skew_t_latent(rng, l.psi, l.sigma2, c.nu);
        const qesn::testing::TabulatedCdf cdf(
            [&](double e) { return skew_t_density(e, c.omega * c.omega, c.alpha, c.nu); }, -80 * c.omega, 80 * c.omega,
            400000);
        CHECK(qesn::testing::ks_distance(x, cdf) < 0.02);
    }
}

TEST_CASE("skew-t sampler on symmetric data keeps psi near zero") {
    Rng rng(6);
    const auto B = random_design(1500, 4, rng);
    Vector beta(4);
    beta << 1.0, 0.5, -0.5, 0.2;
    std::vector<double> y(1500);
    for (int t = 0; t < 1500; ++t) y[static_cast<std::size_t>(t)] = B.B.row(t).dot(beta) + 0.5 * draw_skew_t_latent(rng, 0.0, 1.0, 7.0);
    SkewTPrior prior;
    prior.nu = 7.0;
    McmcOptions o;
    o.n_iter = 3000;
    o.n_burn = 1000;
    const auto d = gibbs_skew_t(B, y, prior, o);
    const double m = qesn::testing::mean(d.psi), sd = std::sqrt(qesn::testing::variance(d.psi));
    CHECK(std::abs(m) < 2 * sd);
    CHECK(static_cast<int>(d.psi.size()) == d.n_draw());
    for (double s : d.sigma2) CHECK(s > 0.0);
    const auto again = gibbs_skew_t(B, y, prior, o);
    CHECK(again.psi == d.psi);
}
