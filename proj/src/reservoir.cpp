#include "qesn/reservoir.hpp"
#include "qesn/random.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace qesn {

void ReservoirConfig::validate() const {
    if (n_h < 1) throw DimensionError("reservoir: n_h must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("reservoir: delta must lie in (0,1)");
    if (!(kappa > 0.0 && kappa <= 1.0)) throw InvalidArgument("reservoir: kappa must lie in (0,1]");
    if (!(a_v > 0.0 && a_u > 0.0)) throw InvalidArgument("reservoir: a_v and a_u must be positive");
    if (!(pi_v >= 0.0 && pi_v <= 1.0 && pi_u >= 0.0 && pi_u <= 1.0))
        throw InvalidArgument("reservoir: pi_v and pi_u must lie in [0,1]");
}

namespace {

CsrMatrix sample_sparse(int rows, int cols, double pi, double a, Rng& rng) {
    CsrMatrix m;
    m.rows = static_cast<std::size_t>(rows);
    m.cols = static_cast<std::size_t>(cols);
    m.row_ptr.assign(1, 0);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            // Consume both draws unconditionally so the stream layout does not
            // depend on pi.
            const bool nonzero = rng.uniform() < pi;
            const double value = rng.uniform(-a, a);
            if (nonzero) {
                m.col_idx.push_back(static_cast<std::size_t>(j));
                m.values.push_back(value);
            }
        }
        m.row_ptr.push_back(m.values.size());
    }
    return m;
}

double dense_spectral_radius(const Matrix& V) {
    Eigen::EigenSolver<Matrix> solver(V, false);
    if (solver.info() != Eigen::Success)
        throw NumericError("spectral_radius: dense eigenvalue solver failed (n=" +
                           std::to_string(V.rows()) + ")");
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

// Power iteration. Each step tests a one-term fit V u = r u (real dominant
// eigenvalue) and a two-term fit V^2 u = c1 V u + c0 u (dominant complex
// pair). Returns a negative value if neither converges.
template <typename Apply>
double power_radius(Eigen::Index n, Apply&& apply, const SpectralOptions& opt, int& iters_used) {
    Rng rng(opt.seed);
    Vector u(n), v(n), w(n);
    double last = -1.0;
    iters_used = 0;
    for (int restart = 0; restart < opt.restarts; ++restart) {
        for (Eigen::Index i = 0; i < n; ++i) u[i] = rng.normal();
        u.normalize();
        for (int it = 0; it < opt.max_iter; ++it) {
            ++iters_used;
            apply(u, v);
            const double vn = v.norm();
            if (vn == 0.0) return 0.0;  // V^k u vanished: nilpotent direction
            apply(v, w);
            const double rho1 = u.dot(v);
            const double res1 = (v - rho1 * u).norm();
            if (res1 <= opt.tol * std::max(1.0, std::abs(rho1))) return std::abs(rho1);

            // Least squares for w ~ c1 v + c0 u.
            const double uu = 1.0, uv = u.dot(v), vv = vn * vn;
            const double uw = u.dot(w), vw = v.dot(w);
            const double det = vv * uu - uv * uv;
            if (det > 1e-300 * vv) {
                const double c1 = (vw * uu - uv * uw) / det;
                const double c0 = (uw * vv - uv * vw) / det;
                const double res2 = (w - c1 * v - c0 * u).norm();
                const double disc = c1 * c1 + 4.0 * c0;
                double rho2;
                if (disc < 0.0) {
                    rho2 = std::sqrt(-c0);
                } else {
                    const double s = std::sqrt(disc);
                    rho2 = std::max(std::abs(0.5 * (c1 + s)), std::abs(0.5 * (c1 - s)));
                }
                if (res2 <= opt.tol * std::max(1.0, rho2 * rho2)) return rho2;
                last = rho2;
            }
            u = w / w.norm();
            if (!u.allFinite()) break;
        }
    }
    (void)last;
    return -1.0;
}

}  // namespace

double spectral_radius(const Matrix& V, const SpectralOptions& options) {
    if (V.rows() != V.cols()) throw DimensionError("spectral_radius: matrix must be square");
    if (!V.allFinite()) throw InputError("spectral_radius: non-finite entries");
    if (V.rows() == 0) return 0.0;
    if (V.isZero(0.0)) return 0.0;
    if (V.rows() <= options.dense_threshold) return dense_spectral_radius(V);
    int iters = 0;
    const double rho = power_radius(
        V.rows(), [&](const Vector& in, Vector& out) { out.noalias() = V * in; }, options, iters);
    if (rho >= 0.0) return rho;
    return dense_spectral_radius(V);
}

double spectral_radius(const CsrMatrix& V, const SpectralOptions& options) {
    if (V.rows != V.cols) throw DimensionError("spectral_radius: matrix must be square");
    if (V.nnz() == 0) return 0.0;
    if (static_cast<int>(V.rows) <= options.dense_threshold) return spectral_radius(V.to_dense(), options);
    for (double x : V.values)
        if (!std::isfinite(x)) throw InputError("spectral_radius: non-finite entries");
    int iters = 0;
    const double rho = power_radius(
        static_cast<Eigen::Index>(V.rows),
        [&](const Vector& in, Vector& out) {
            out.setZero(in.size());
            V.multiply_add({in.data(), static_cast<std::size_t>(in.size())}, 1.0,
                           {out.data(), static_cast<std::size_t>(out.size())});
        },
        options, iters);
    if (rho >= 0.0) return rho;
    try {
        return dense_spectral_radius(V.to_dense());
    } catch (const NumericError& e) {
        std::ostringstream msg;
        msg << e.what() << " after " << iters << " power iterations";
        throw NumericError(msg.str());
    }
}

ReservoirWeights sample_weights(const ReservoirConfig& config, int n_x) {
    if (n_x <= 0) throw DimensionError("sample_weights: n_x must be positive");
    config.validate();
    ReservoirWeights w;
    w.n_h = config.n_h;
    w.n_x = n_x;
    Rng rng_v(derive_seed(config.seed, 0x56));  // 'V'
    Rng rng_u(derive_seed(config.seed, 0x55));  // 'U'
    w.V = sample_sparse(config.n_h, config.n_h, config.pi_v, config.a_v, rng_v);
    w.U = sample_sparse(config.n_h, n_x, config.pi_u, config.a_u, rng_u);
    SpectralOptions opt;
    opt.seed = derive_seed(config.seed, 0x5e);
    w.lambda_V = spectral_radius(w.V, opt);
    return w;
}

void advance_state(const ReservoirWeights& weights, const ReservoirConfig& config,
                   std::span<const double> x, std::span<double> h, ReservoirWorkspace& ws) {
    const auto n_h = static_cast<std::size_t>(weights.n_h);
    if (x.size() != static_cast<std::size_t>(weights.n_x))
        throw DimensionError("advance_state: feature length " + std::to_string(x.size()) +
                             " does not match U columns " + std::to_string(weights.n_x));
    if (h.size() != n_h) throw DimensionError("advance_state: state length mismatch");
    ws.pre.assign(n_h, 0.0);
    const double scale = weights.recurrent_scale(config.delta);
    if (scale != 0.0) weights.V.multiply_add(h, scale, ws.pre);
    weights.U.multiply_add(x, 1.0, ws.pre);
    const double kappa = config.kappa;
    if (kappa == 1.0) {
        for (std::size_t i = 0; i < n_h; ++i) h[i] = std::tanh(ws.pre[i]);
    } else {
        for (std::size_t i = 0; i < n_h; ++i) h[i] = (1.0 - kappa) * h[i] + kappa * std::tanh(ws.pre[i]);
    }
}

HiddenStatePath run_hidden_states(const ReservoirWeights& weights, const RowMatrix& X,
                                  const ReservoirConfig& config, const Vector& h0) {
    if (X.cols() != weights.n_x)
        throw DimensionError("run_hidden_states: X has " + std::to_string(X.cols()) +
                             " columns, U expects " + std::to_string(weights.n_x));
    if (!X.allFinite()) throw InputError("run_hidden_states: non-finite features");
    HiddenStatePath path;
    path.H.resize(X.rows(), weights.n_h);
    path.h_last = h0.size() == 0 ? Vector::Zero(weights.n_h) : h0;
    if (path.h_last.size() != weights.n_h) throw DimensionError("run_hidden_states: h0 length mismatch");
    ReservoirWorkspace ws(weights.n_h);
    std::span<double> h{path.h_last.data(), static_cast<std::size_t>(weights.n_h)};
    for (Eigen::Index t = 0; t < X.rows(); ++t) {
        advance_state(weights, config, {X.row(t).data(), static_cast<std::size_t>(X.cols())}, h, ws);
        path.H.row(t) = path.h_last.transpose();
    }
    return path;
}

void design_row(std::span<const double> h, bool with_intercept, std::span<double> out) {
    const std::size_t n = h.size();
    const std::size_t off = with_intercept ? 1 : 0;
    if (out.size() != 2 * n + off) throw DimensionError("design_row: output length mismatch");
    if (with_intercept) out[0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        out[off + i] = h[i];
        out[off + n + i] = h[i] * h[i];
    }
}

DesignMatrix build_design(const RowMatrix& H, bool with_intercept) {
    if (!H.allFinite()) throw InputError("build_design: non-finite hidden states");
    const Eigen::Index n = H.cols();
    const Eigen::Index off = with_intercept ? 1 : 0;
    DesignMatrix d;
    d.has_intercept = with_intercept;
    d.B.resize(H.rows(), 2 * n + off);
    if (with_intercept) d.B.col(0).setOnes();
    d.B.middleCols(off, n) = H;
    d.B.middleCols(off + n, n) = H.array().square().matrix();
    return d;
}

}  // namespace qesn
