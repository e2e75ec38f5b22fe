#pragma once

#include "qesn/common.hpp"
#include "qesn/sparse.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace qesn {

struct ReservoirConfig {
    int n_h = 120;
    double delta = 0.35;   // target spectral radius of the scaled recurrent matrix
    double kappa = 1.0;    // leaking rate
    double a_v = 0.1;
    double a_u = 0.1;
    double pi_v = 0.1;
    double pi_u = 0.1;
    std::uint64_t seed = 0;

    /// Throws InvalidArgument when any field is out of range.
    void validate() const;
};

struct ReservoirWeights {
    CsrMatrix V;            // n_h x n_h
    CsrMatrix U;            // n_h x n_x
    double lambda_V = 0.0;  // spectral radius of V
    int n_h = 0;
    int n_x = 0;

    /// delta / lambda_V, or 0 when V has no spectrum.
    double recurrent_scale(double delta) const { return lambda_V > 0.0 ? delta / lambda_V : 0.0; }
};

/// Hidden states stored row-major, one row per time step.
struct HiddenStatePath {
    RowMatrix H;
    Vector h_last;
};

struct DesignMatrix {
    Matrix B;
    bool has_intercept = true;

    Eigen::Index rows() const { return B.rows(); }
    Eigen::Index cols() const { return B.cols(); }
};

/// Draws V and U from spike-and-slab uniform mixtures and stores lambda_V.
ReservoirWeights sample_weights(const ReservoirConfig& config, int n_x);

struct SpectralOptions {
    double tol = 1e-10;
    int max_iter = 2000;
    int restarts = 3;
    int dense_threshold = 64;  // dimension at or below which the dense solver is used directly
    std::uint64_t seed = 0x5eed;
};

/// Largest eigenvalue modulus. Power iteration (handling a dominant complex
/// pair through a two-step recurrence fit) with a dense fallback.
double spectral_radius(const Matrix& V, const SpectralOptions& options = {});
double spectral_radius(const CsrMatrix& V, const SpectralOptions& options = {});

/// Scratch buffer for repeated single-step updates.
struct ReservoirWorkspace {
    std::vector<double> pre;
    explicit ReservoirWorkspace(int n_h = 0) : pre(static_cast<std::size_t>(n_h)) {}
};

/// One step of the leaky tanh recursion, updating h in place.
void advance_state(const ReservoirWeights& weights, const ReservoirConfig& config,
                   std::span<const double> x, std::span<double> h, ReservoirWorkspace& ws);

/// Runs the recursion over every row of X starting from h0 (zero when empty).
HiddenStatePath run_hidden_states(const ReservoirWeights& weights, const RowMatrix& X,
                                  const ReservoirConfig& config, const Vector& h0 = Vector());

/// Quadratic readout design [1, H, H.^2] (intercept optional).
DesignMatrix build_design(const RowMatrix& H, bool with_intercept);

/// Single design row for hidden state h.
void design_row(std::span<const double> h, bool with_intercept, std::span<double> out);

}  // namespace qesn
