#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "csf/geometry.hpp"

namespace csf {

enum class Scheme { explicit_euler, semi_implicit };

inline std::string_view to_string(Scheme s) { return s == Scheme::explicit_euler ? "explicit" : "semi_implicit"; }

inline Scheme parse_scheme(std::string_view s) {
    if (s == "explicit") return Scheme::explicit_euler;
    if (s == "semi_implicit" || s == "semi-implicit") return Scheme::semi_implicit;
    throw Error(ErrorCode::invalid_argument, "unknown scheme '" + std::string(s) + "'");
}

/// One time slice of the flow; `geometry` always describes `curve`.
struct FlowState {
    SampledCurve curve;
    double t = 0.0;
    std::size_t step = 0;
    CurveGeometry geometry;

    static FlowState start(SampledCurve curve, double t = 0.0) {
        FlowState s;
        s.geometry = compute_geometry(curve);
        s.curve = std::move(curve);
        s.t = t;
        return s;
    }
};

/// Largest stable explicit step, min(segment)^2 / 2.
inline double explicit_step_bound(const CurveGeometry& g) {
    const double h = min_segment(g);
    return 0.5 * h * h;
}

namespace detail {

inline FlowState advance(const FlowState& state, SampledCurve moved, double dt) {
    for (const Vec3& p : moved.points) {
        if (!is_finite(p)) throw Error(ErrorCode::numerical_failure, "non-finite vertex after step at t = " + std::to_string(state.t));
    }
    FlowState next;
    try {
        next.geometry = compute_geometry(moved);
    } catch (const Error& e) {
        throw Error(ErrorCode::numerical_failure, std::string("curve degenerated: ") + e.what());
    }
    next.curve = std::move(moved);
    next.t = state.t + dt;
    next.step = state.step + 1;
    return next;
}

// Thomas algorithm for a tridiagonal system with vector right-hand sides.
// lower[0] and upper[n-1] are ignored.
template <class T>
std::vector<T> solve_tridiagonal(const std::vector<double>& lower, const std::vector<double>& diag,
                                 const std::vector<double>& upper, std::vector<T> rhs) {
    const std::size_t n = diag.size();
    std::vector<double> c(n);
    double pivot = diag[0];
    if (std::abs(pivot) < 1e-300) throw Error(ErrorCode::numerical_failure, "singular tridiagonal system");
    c[0] = upper[0] / pivot;
    rhs[0] = rhs[0] / pivot;
    for (std::size_t i = 1; i < n; ++i) {
        pivot = diag[i] - lower[i] * c[i - 1];
        if (std::abs(pivot) < 1e-300) throw Error(ErrorCode::numerical_failure, "singular tridiagonal system");
        c[i] = i + 1 < n ? upper[i] / pivot : 0.0;
        rhs[i] = (rhs[i] - rhs[i - 1] * lower[i]) / pivot;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = rhs[i] - rhs[i + 1] * c[i];
    return rhs;
}

// Cyclic tridiagonal solve by Sherman-Morrison. lower[0] couples row 0 to
// column n-1 and upper[n-1] couples row n-1 to column 0.
inline std::vector<Vec3> solve_cyclic(const std::vector<double>& lower, const std::vector<double>& diag,
                                      const std::vector<double>& upper, const std::vector<Vec3>& rhs) {
    const std::size_t n = diag.size();
    const double beta = lower[0];
    const double alpha = upper[n - 1];
    const double gamma = -diag[0];
    std::vector<double> bb = diag;
    bb[0] = diag[0] - gamma;
    bb[n - 1] = diag[n - 1] - alpha * beta / gamma;
    const std::vector<Vec3> x = solve_tridiagonal(lower, bb, upper, rhs);
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = alpha;
    const std::vector<double> z = solve_tridiagonal(lower, bb, upper, u);
    const double denom = 1.0 + z[0] + beta * z[n - 1] / gamma;
    if (std::abs(denom) < 1e-300) throw Error(ErrorCode::numerical_failure, "singular cyclic system");
    const Vec3 fact = (x[0] + x[n - 1] * (beta / gamma)) / denom;
    std::vector<Vec3> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - fact * z[i];
    return out;
}

}  // namespace detail

/// Forward Euler: every vertex moves by dt times its curvature vector. Open
/// curves keep their end points fixed.
inline FlowState step_explicit(const FlowState& state, double dt) {
    if (!(dt > 0.0)) throw Error(ErrorCode::invalid_argument, "time step must be positive");
    const double bound = explicit_step_bound(state.geometry);
    if (dt > bound * (1.0 + 1e-12)) {
        throw Error(ErrorCode::invalid_argument,
                    "explicit step " + std::to_string(dt) + " exceeds stability bound " + std::to_string(bound));
    }
    SampledCurve moved = state.curve;
    const std::size_t n = moved.size();
    const std::size_t first = moved.wraps() ? 0 : 1;
    const std::size_t last = moved.wraps() ? n : n - 1;
    for (std::size_t i = first; i < last; ++i) moved.points[i] += state.geometry.curvature_vectors[i] * dt;
    return detail::advance(state, std::move(moved), dt);
}

/// Backward Euler with the arc-length Laplacian frozen at the current curve:
/// (I - dt L) x_new = x_old. Solved for the displacement, so the periodic
/// offset never enters the linear system.
inline FlowState step_semi_implicit(const FlowState& state, double dt) {
    if (!(dt > 0.0)) throw Error(ErrorCode::invalid_argument, "time step must be positive");
    const SampledCurve& curve = state.curve;
    const CurveGeometry& g = state.geometry;
    const std::size_t n = curve.size();

    const auto coefficients = [dt](double h1, double h2, double& lo, double& di, double& up) {
        lo = -dt * 2.0 / ((h1 + h2) * h1);
        up = -dt * 2.0 / ((h1 + h2) * h2);
        di = 1.0 - lo - up;
    };

    SampledCurve moved = curve;
    if (curve.wraps()) {
        std::vector<double> lower(n), diag(n), upper(n);
        std::vector<Vec3> rhs(n);
        for (std::size_t i = 0; i < n; ++i) {
            coefficients(g.segment_lengths[(i + n - 1) % n], g.segment_lengths[i], lower[i], diag[i], upper[i]);
            rhs[i] = g.curvature_vectors[i] * dt;
        }
        const std::vector<Vec3> delta = detail::solve_cyclic(lower, diag, upper, rhs);
        for (std::size_t i = 0; i < n; ++i) moved.points[i] += delta[i];
    } else {
        const std::size_t m = n - 2;
        std::vector<double> lower(m), diag(m), upper(m);
        std::vector<Vec3> rhs(m);
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t i = k + 1;
            coefficients(g.segment_lengths[i - 1], g.segment_lengths[i], lower[k], diag[k], upper[k]);
            rhs[k] = g.curvature_vectors[i] * dt;
        }
        const std::vector<Vec3> delta = detail::solve_tridiagonal(lower, diag, upper, rhs);
        for (std::size_t k = 0; k < m; ++k) moved.points[k + 1] += delta[k];
    }
    return detail::advance(state, std::move(moved), dt);
}

inline FlowState step(const FlowState& state, double dt, Scheme scheme) {
    return scheme == Scheme::explicit_euler ? step_explicit(state, dt) : step_semi_implicit(state, dt);
}

}  // namespace csf
