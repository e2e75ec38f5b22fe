#include "qesn/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

namespace qesn::kernels {

namespace {

constexpr double kKernelCut = 8.0;  // kernel support in bandwidths

// Sum of exp(-0.5 ((g - x)/h)^2) over samples x in an affine image of the
// sorted sample: x = sign*s + shift.
double image_sum(std::span<const double> sorted, double sign, double shift, double g, double h) {
    // Locate s with |sign*s + shift - g| <= cut*h.
    const double lo_x = g - kKernelCut * h, hi_x = g + kKernelCut * h;
    double lo_s, hi_s;
    if (sign > 0) {
        lo_s = lo_x - shift;
        hi_s = hi_x - shift;
    } else {
        lo_s = shift - hi_x;
        hi_s = shift - lo_x;
    }
    auto first = std::lower_bound(sorted.begin(), sorted.end(), lo_s);
    auto last = std::upper_bound(first, sorted.end(), hi_s);
    double acc = 0.0;
    for (auto it = first; it != last; ++it) {
        const double u = (g - (sign * *it + shift)) / h;
        acc += std::exp(-0.5 * u * u);
    }
    return acc;
}

double kde_point(std::span<const double> sorted, double lower, double upper, double h, double g) {
    // Images of the reflected process on [lower, upper] have period 2*width:
    // x + 2kW and 2*lower - x + 2kW.
    const double width = upper - lower;
    double acc = image_sum(sorted, 1.0, 0.0, g, h);
    const int max_images = width > 0 ? static_cast<int>(std::ceil(kKernelCut * h / (2.0 * width))) + 1 : 1;
    for (int k = -max_images; k <= max_images; ++k) {
        const double period = 2.0 * k * width;
        if (k != 0) acc += image_sum(sorted, 1.0, period, g, h);
        acc += image_sum(sorted, -1.0, 2.0 * lower + period, g, h);
    }
    return acc;
}

}  // namespace

void reflected_kde_grid(std::span<const double> sorted, double lower, double upper, double bandwidth,
                        std::span<const double> grid, std::span<double> out, Exec exec) {
    if (grid.size() != out.size()) throw DimensionError("reflected_kde_grid: grid/out size mismatch");
    const double norm = 1.0 / (static_cast<double>(sorted.size()) * bandwidth * std::sqrt(2.0 * M_PI));
    const auto n = static_cast<std::ptrdiff_t>(grid.size());
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i)
            out[i] = norm * kde_point(sorted, lower, upper, bandwidth, grid[i]);
    } else {
        for (std::ptrdiff_t i = 0; i < n; ++i)
            out[i] = norm * kde_point(sorted, lower, upper, bandwidth, grid[i]);
    }
}

namespace {

// Column-pair dot products; each (i,j) entry is one fixed-order reduction.
Matrix gram_impl(const Matrix& B, Exec exec) {
    const Eigen::Index p = B.cols();
    Matrix G(p, p);
    auto entry = [&](Eigen::Index i, Eigen::Index j) {
        double acc = 0.0;
        const double* bi = B.col(i).data();
        const double* bj = B.col(j).data();
        for (Eigen::Index t = 0; t < B.rows(); ++t) acc += bi[t] * bj[t];
        return acc;
    };
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
        for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index j = 0; j <= i; ++j) G(i, j) = entry(i, j);
    } else {
        for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index j = 0; j <= i; ++j) G(i, j) = entry(i, j);
    }
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = i + 1; j < p; ++j) G(i, j) = G(j, i);
    return G;
}

}  // namespace

Matrix gram(const Matrix& B, Exec exec) {
    return gram_impl(B, exec);
}

int thread_count() { return omp_get_max_threads(); }

void set_thread_count(int n) {
    if (n > 0) omp_set_num_threads(n);
}

void configure_threads_from_env() {
    if (const char* env = std::getenv("QESN_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) omp_set_num_threads(n);
    }
}

}  // namespace qesn::kernels
