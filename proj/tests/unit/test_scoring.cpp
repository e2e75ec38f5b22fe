#include "qesn/random.hpp"
#include "qesn/scoring.hpp"
#include "qesn/special.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace qesn;

namespace {

std::vector<double> sorted_normals(int n, std::uint64_t seed, double mu = 0.0, double sd = 1.0) {
    Rng rng(seed);
    std::vector<double> x(static_cast<std::size_t>(n));
    for (auto& v : x) v = rng.normal(mu, sd);
    std::sort(x.begin(), x.end());
    return x;
}

std::vector<double> normal_quantiles(double mu, double sd) {
    std::vector<double> q;
    for (int i = 1; i <= 199; ++i) q.push_back(mu + sd * normal_quantile(i / 200.0));
    return q;
}

}  // namespace

TEST_CASE("quantile score examples") {
    CHECK(quantile_score(1.3, 1.3, 0.2) == 0.0);
    CHECK(quantile_score(1.0, 0.0, 0.95) == doctest::Approx(0.1));
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) CHECK(quantile_score(rng.normal(), rng.normal(), rng.uniform()) >= 0.0);
    // Piecewise linear with the kink at q = y.
    const double a = quantile_score(2.0, 1.0, 0.3), b = quantile_score(3.0, 1.0, 0.3), c = quantile_score(4.0, 1.0, 0.3);
    CHECK(b - a == doctest::Approx(c - b));
}

TEST_CASE("pinball loss is minimized at the true quantile") {
    Rng rng(2);
    std::vector<double> y(1000000);
    for (auto& v : y) v = rng.normal();
    for (double alpha : {0.05, 0.5, 0.95}) {
        double best = 1e300, arg = 0;
        for (double q = -2.5; q <= 2.5 + 1e-9; q += 0.01) {
            double s = 0;
            for (double v : y) s += quantile_score(q, v, alpha);
            if (s < best) best = s, arg = q;
        }
        CHECK(std::abs(arg - normal_quantile(alpha)) <= 0.01 + 1e-9);
    }
}

TEST_CASE("CRPS oracles") {
    CHECK(std::abs(crps([](double a) { return normal_quantile(a); }, 0.0) - (std::sqrt(2.0) - 1) / std::sqrt(M_PI)) < 1e-3);
    CHECK(crps([](double) { return 2.5; }, 2.5) == 0.0);
    CHECK(crps_from_quantiles(std::vector<double>(199, 4.0), 4.0) == 0.0);
    CHECK_THROWS_AS(crps([](double a) { return a; }, 0.0, 10), InvalidArgument);
    const std::vector<double> unsorted = {1, 0, 2};
    CHECK_THROWS_AS(crps_sorted(unsorted, 0.0), InvalidArgument);
    const std::vector<double> nan = {0, std::nan(""), 2};
    CHECK_THROWS_AS(crps_sorted(nan, 0.0), InvalidArgument);

    // Gaussian closed form at an off-centre observation.
    const double y = 0.7;
    const double closed = y * (2 * normal_cdf(y) - 1) + 2 * normal_pdf(y) - 1 / std::sqrt(M_PI);
    CHECK(std::abs(crps_from_quantiles(normal_quantiles(0, 1), y) - closed) < 1e-3);
}

TEST_CASE("quantile-integral CRPS matches the energy form") {
    Rng rng(3);
    for (int rep = 0; rep < 5; ++rep) {
        const auto x = sorted_normals(100000, 10 + rep, rng.normal(), 0.5 + rng.uniform());
        const double y = rng.normal();
        const double energy = crps_energy_form(x, y);
        // Monte Carlo error of the energy form at this sample size, plus quadrature error.
        CHECK(std::abs(crps_sorted(x, y, 1999) - energy) < 3 * 0.003 + 1e-3);
    }
    const std::vector<double> point = {1.0, 1.0, 1.0};
    CHECK(crps_energy_form(point, 1.0) == 0.0);
}

TEST_CASE("upper tail loss examples") {
    CHECK(upper_tail_loss(0.0, 0.0, -1.0, 0.975) == doctest::Approx(0.025));
    CHECK(upper_tail_loss(0.0, 0.0, 0.0, 0.975) == doctest::Approx(0.025));
    CHECK(std::isfinite(upper_tail_loss(9.0, 9.5, 9.7)));
    CHECK_THROWS_AS(upper_tail_loss(9.0, 701.0, 9.7), DomainError);
    CHECK_THROWS_AS(upper_tail_loss(0, 0, 0, 1.0), InvalidArgument);
}

TEST_CASE("expected longrise estimator") {
    const auto x = sorted_normals(400000, 4);
    const double z = normal_quantile(0.975);
    CHECK(expected_longrise(x) == doctest::Approx(normal_pdf(z) / 0.025).epsilon(0.01));
    const std::vector<double> flat(10, 3.0);
    CHECK(expected_longrise(flat) == 3.0);
}

TEST_CASE("interval coverage") {
    const std::vector<double> lo = {0, 0, 0}, hi = {1, 1, 1};
    CHECK(interval_coverage(lo, hi, std::vector<double>{0.5, 0.0, 1.0}) == 1.0);
    CHECK(interval_coverage(lo, hi, std::vector<double>{-1, 2, 3}) == 0.0);
    CHECK_THROWS_AS(interval_coverage(lo, hi, std::vector<double>{1}), DimensionError);
    Rng rng(5);
    const double z = normal_quantile(0.975);
    std::vector<double> l, u, y;
    for (int i = 0; i < 10000; ++i) {
        const double mu = rng.normal(0, 3);
        l.push_back(mu - z);
        u.push_back(mu + z);
        y.push_back(rng.normal(mu, 1));
    }
    CHECK(std::abs(interval_coverage(l, u, y) - 0.95) <= 0.01);
}

TEST_CASE("point errors") {
    const std::vector<double> y = {1, 2};
    auto e = point_errors(y, y);
    CHECK(e.mae == 0.0);
    CHECK(e.rmse == 0.0);
    e = point_errors(std::vector<double>{2, 1}, y);
    CHECK(e.mae == 1.0);
    CHECK(e.rmse == 1.0);
    e = point_errors(std::vector<double>{1, 4}, y);
    CHECK(e.mae == 1.0);
    CHECK(e.rmse == doctest::Approx(std::sqrt(2.0)));
    CHECK_THROWS_AS(point_errors(std::vector<double>{}, std::vector<double>{}), InvalidArgument);
}

TEST_CASE("system weights") {
    const auto w = default_system_weights({"NSW1", "VIC1", "QLD1", "SA1", "TAS1"});
    const std::vector<double> expect = {0.3687, 0.2355, 0.2818, 0.0624, 0.0516};
    CHECK(w == expect);
    const std::vector<double> v(5, 2.5);
    CHECK(system_weighted(v, w) == doctest::Approx(2.5));
    CHECK(system_weighted(std::vector<double>{1, 2, 3}, std::vector<double>{0, 1, 0}) == 2.0);
    CHECK_THROWS_AS(system_weighted(std::vector<double>{1, 2}, std::vector<double>{0.5, 0.6}), InvalidArgument);
    const auto sub = default_system_weights({"NSW1", "SA1"});
    CHECK(sub[0] + sub[1] == doctest::Approx(1.0));
    CHECK(sub[0] / sub[1] == doctest::Approx(0.3687 / 0.0624));
    CHECK(default_system_weights({"S1", "S2"}) == std::vector<double>{0.5, 0.5});
}

TEST_CASE("marginal calibration identities") {
    const std::vector<double> obs = {1.0, 2.0, 2.5, 4.0};
    std::vector<double> grid;
    for (int i = 0; i <= 50; ++i) grid.push_back(i * 0.1);
    std::vector<std::vector<double>> empirical(obs.size(), obs);
    const auto c = marginal_calibration(empirical, obs, grid);
    CHECK(c.F_bar == c.H_hat);
    CHECK(c.sup_distance() == 0.0);
    std::vector<std::vector<double>> points;
    for (double v : obs) points.push_back({v});
    CHECK(marginal_calibration(points, obs, grid).sup_distance() == 0.0);
    CHECK_THROWS_AS(marginal_calibration(points, std::vector<double>{}, grid), InvalidArgument);

    std::vector<std::function<double(double)>> cdfs;
    for (double v : obs) cdfs.push_back([v](double y) { return y >= v ? 1.0 : 0.0; });
    CHECK(marginal_calibration(cdfs, obs, grid).sup_distance() == 0.0);
    for (std::size_t i = 1; i < grid.size(); ++i) CHECK(c.F_bar[i] >= c.F_bar[i - 1]);

    CalibrationAccumulator acc(grid, {"S1"});
    for (double v : obs) acc.add("m", 0, obs, v);
    const auto ac = acc.curves("m", 0);
    CHECK(ac.F_bar == c.F_bar);
    CHECK(ac.H_hat == c.H_hat);
}

TEST_CASE("cdf from quantiles") {
    const auto q = normal_quantiles(0, 1);
    CHECK(cdf_from_quantiles(q, 0.0) == doctest::Approx(0.5));
    CHECK(cdf_from_quantiles(q, -10.0) == 0.0);
    CHECK(cdf_from_quantiles(q, 10.0) == 1.0);
    CHECK(cdf_from_quantiles(q, q[9]) == doctest::Approx(0.05));
}

TEST_CASE("Diebold-Mariano test") {
    std::vector<double> a(40);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = static_cast<double>(i % 7);
    auto r = dm_test(a, a, 1);
    CHECK(r.degenerate);
    CHECK(r.statistic == 0.0);

    Rng rng(6);
    std::vector<double> la(100), lb(100, 0.0);
    for (auto& v : la) v = rng.normal(1.0, 0.1);
    r = dm_test(la, lb, 1);
    CHECK(std::abs(r.statistic) > 10);
    CHECK(r.p_value < 1e-10);

    int reject = 0;
    for (int rep = 0; rep < 10000; ++rep) {
        std::vector<double> d(200), zero(200, 0.0);
        for (auto& v : d) v = rng.normal();
        reject += dm_test(d, zero, 1).p_value < 0.05;
    }
    const double size = reject / 10000.0;
    CHECK(size >= 0.04);
    CHECK(size <= 0.06);
}

TEST_CASE("score accumulator and report") {
    ScoreAccumulator acc({"S1", "S2"}, {0.25, 0.75}, 2);
    const auto q = normal_quantiles(0, 1);
    for (std::int64_t origin = 10; origin < 14; ++origin) {
        acc.note_origin(origin);
        for (int step = 1; step <= 2; ++step)
            for (int s = 0; s < 2; ++s) acc.add("gaussian", step, s, q, 0.0, 2.338, 0.1 * static_cast<double>(s + step));
    }
    const auto rep = acc.report();
    CHECK_NOTHROW(rep.validate());
    CHECK(rep.n_origins == 4);
    CHECK(rep.window_begin == 10);
    CHECK(rep.window_end == 13);
    CHECK(rep.value("gaussian", "S1", 1, "MAE") == doctest::Approx(0.1));
    CHECK(rep.value("gaussian", "S2", 2, "MAE") == doctest::Approx(0.3));
    CHECK(rep.value("gaussian", "system", 1, "MAE") == doctest::Approx(0.25 * 0.1 + 0.75 * 0.2));
    CHECK(rep.value("gaussian", "S1", 1, "C95") == 1.0);
    CHECK(rep.value("gaussian", "S1", 1, "CRPS") == doctest::Approx(crps_from_quantiles(q, 0.1)));
    CHECK(rep.value("gaussian", "S1", 1, "QS95") == doctest::Approx(quantile_score(q[189], 0.1, 0.95)));
    CHECK(rep.value("gaussian", "S1", 1, "JS") == doctest::Approx(upper_tail_loss(q[194], 2.338, 0.1)));
    CHECK(std::isnan(rep.value("other", "S1", 1, "MAE")));
    for (const auto& m : {"MAE", "RMSE", "CRPS", "QS05", "QS95", "JS", "C95"})
        CHECK(std::find(score_metrics().begin(), score_metrics().end(), m) != score_metrics().end());
    CHECK(acc.losses("gaussian", 0, 1, "CRPS").size() == 4);
    CHECK(acc.system_losses("gaussian", 2, "AE").size() == 4);

    const auto table = render_score_table(rep);
    CHECK(table.find("QS95") != std::string::npos);
    CHECK(table.find("system") != std::string::npos);
}
