#include "qesn/kernels.hpp"
#include "qesn/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace qesn;

TEST_CASE("reflected KDE grid: serial and parallel agree bitwise") {
    Rng rng(1);
    std::vector<double> x(20000);
    for (auto& v : x) v = rng.uniform(0.0, 2.0);
    std::sort(x.begin(), x.end());
    std::vector<double> grid(1000);
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = 2.0 * static_cast<double>(i) / 999.0;
    std::vector<double> a(grid.size()), b(grid.size());
    kernels::reflected_kde_grid(x, 0.0, 2.0, 0.05, grid, a, Exec::serial);
    kernels::reflected_kde_grid(x, 0.0, 2.0, 0.05, grid, b, Exec::parallel);
    CHECK(a == b);
    // Unnormalized values still integrate to one thanks to the reflections.
    double mass = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) mass += 0.5 * (a[i] + a[i - 1]) * (grid[i] - grid[i - 1]);
    CHECK(mass == doctest::Approx(1.0).epsilon(2e-3));
    std::vector<double> wrong(3);
    CHECK_THROWS_AS(kernels::reflected_kde_grid(x, 0.0, 2.0, 0.05, grid, wrong, Exec::serial), DimensionError);
}

TEST_CASE("Gram matrix") {
    Rng rng(2);
    Matrix B(700, 41);
    for (Eigen::Index i = 0; i < B.rows(); ++i)
        for (Eigen::Index j = 0; j < B.cols(); ++j) B(i, j) = rng.normal();
    const Matrix s = kernels::gram(B, Exec::serial), p = kernels::gram(B, Exec::parallel);
    CHECK(s == p);
    CHECK((s - B.transpose() * B).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(s == s.transpose());
}

TEST_CASE("thread count control") {
    const int before = kernels::thread_count();
    CHECK(before >= 1);
    kernels::set_thread_count(2);
    CHECK(kernels::thread_count() == 2);
    kernels::set_thread_count(0);
    CHECK(kernels::thread_count() == 2);
    kernels::set_thread_count(before);
}
