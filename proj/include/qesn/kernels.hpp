#pragma once

// Data-parallel inner loops. Every kernel has a serial reference path and an
// OpenMP path selected by Exec; the two are bitwise identical because each
// output element is computed by exactly one iteration in a fixed order.

#include "qesn/common.hpp"

#include <span>
#include <vector>

namespace qesn::kernels {

/// Reflected Gaussian KDE on a grid. `sorted` must be ascending and within
/// [lower, upper]. Unnormalized: sum of kernel weights / (n h).
void reflected_kde_grid(std::span<const double> sorted, double lower, double upper, double bandwidth,
                        std::span<const double> grid, std::span<double> out, Exec exec);

/// G = B' B (symmetric, full storage).
Matrix gram(const Matrix& B, Exec exec);

/// Number of OpenMP worker threads currently configured.
int thread_count();

/// Sets the OpenMP worker count (ignored when n < 1).
void set_thread_count(int n);

/// Applies QESN_THREADS from the environment when set.
void configure_threads_from_env();

}  // namespace qesn::kernels
