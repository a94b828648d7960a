#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "csf/flow.hpp"

namespace csf {

/// max_i | |x_i|^2 - (r0^2 - 2t) |.
inline double sphere_residual(const SampledCurve& curve, double t, double r0) {
    const double target = r0 * r0 - 2.0 * t;
    if (!(target > 0.0)) throw Error(ErrorCode::domain, "sphere has collapsed by t = " + std::to_string(t));
    double worst = 0.0;
    for (const Vec3& p : curve.points) worst = std::max(worst, std::abs(norm2(p) - target));
    return worst;
}

/// Splitting of the curvature vector on a sphere centred at the origin:
/// k N = k_g Q + k_n n, with n = -x/|x| the inner normal and Q = n x T.
struct SphereDecomposition {
    std::vector<double> k_g;
    std::vector<double> k_n;
    std::vector<Vec3> n_vec;
    std::vector<Vec3> q_vec;
};

/// Mean distance to the origin; throws `not_on_sphere` when any vertex strays
/// more than `rel_tol` (relative) from it.
inline double sphere_radius(const SampledCurve& curve, double rel_tol = 1e-3) {
    double mean = 0.0;
    for (const Vec3& p : curve.points) mean += norm(p);
    mean /= static_cast<double>(curve.size());
    for (const Vec3& p : curve.points) {
        if (std::abs(norm(p) - mean) > rel_tol * mean) {
            throw Error(ErrorCode::not_on_sphere, "vertex radius " + std::to_string(norm(p)) +
                                                      " departs from mean radius " + std::to_string(mean));
        }
    }
    return mean;
}

/// Uses the tangent projected into the sphere's tangent plane.
inline SphereDecomposition decompose_curvature(const SampledCurve& curve, const CurveGeometry& g) {
    sphere_radius(curve);
    const std::size_t n = curve.size();
    SphereDecomposition out;
    out.k_g.resize(n);
    out.k_n.resize(n);
    out.n_vec.resize(n);
    out.q_vec.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 inner = -curve.points[i] / norm(curve.points[i]);
        const Vec3 tangent = normalized(g.tangents[i] - inner * dot(g.tangents[i], inner));
        const Vec3 q = cross(inner, tangent);
        out.n_vec[i] = inner;
        out.q_vec[i] = q;
        out.k_g[i] = dot(g.curvature_vectors[i], q);
        out.k_n[i] = dot(g.curvature_vectors[i], inner);
    }
    return out;
}

inline SphereDecomposition decompose_curvature(const SampledCurve& curve) {
    return decompose_curvature(curve, compute_geometry(curve));
}

/// t~ = -1/2 log(1/2 - t).
inline double dilated_time(double t) {
    if (!(t < 0.5)) throw Error(ErrorCode::domain, "time dilation needs t < 1/2");
    return -0.5 * std::log(0.5 - t);
}

inline double undilated_time(double t_tilde) { return 0.5 - std::exp(-2.0 * t_tilde); }

/// A curve on the unit sphere together with its dilated and original time.
struct RescaledState {
    SampledCurve curve_tilde;
    double t_tilde = 0.0;
    double source_t = 0.0;
};

inline void project_to_unit_sphere(SampledCurve& curve) {
    for (Vec3& p : curve.points) p = p / norm(p);
}

/// gamma~ = gamma / sqrt(1 - 2t), then radially projected to |gamma~| = 1.
inline RescaledState rescale(const SampledCurve& curve, double t, double rel_tol = 5e-2) {
    if (!(t < 0.5)) throw Error(ErrorCode::domain, "rescaling needs t < 1/2");
    const double radius = std::sqrt(1.0 - 2.0 * t);
    const double measured = sphere_radius(curve, rel_tol);
    if (std::abs(measured - radius) > rel_tol * radius) {
        throw Error(ErrorCode::not_on_sphere, "curve radius " + std::to_string(measured) + " does not match sqrt(1-2t) = " +
                                                  std::to_string(radius));
    }
    RescaledState out;
    out.curve_tilde = curve;
    for (Vec3& p : out.curve_tilde.points) p = p / radius;
    project_to_unit_sphere(out.curve_tilde);
    out.t_tilde = dilated_time(t);
    out.source_t = t;
    return out;
}

/// One explicit step of the geodesic-curvature flow on the unit sphere,
/// x += dt~ k_g Q, followed by radial projection.
inline RescaledState step_geodesic_flow(const RescaledState& state, double dt_tilde) {
    if (!(dt_tilde > 0.0)) throw Error(ErrorCode::invalid_argument, "time step must be positive");
    const CurveGeometry g = compute_geometry(state.curve_tilde);
    const double bound = explicit_step_bound(g);
    if (dt_tilde > bound * (1.0 + 1e-12)) {
        throw Error(ErrorCode::invalid_argument, "geodesic step " + std::to_string(dt_tilde) +
                                                     " exceeds stability bound " + std::to_string(bound));
    }
    const SphereDecomposition dec = decompose_curvature(state.curve_tilde, g);
    RescaledState next = state;
    for (std::size_t i = 0; i < next.curve_tilde.size(); ++i) {
        next.curve_tilde.points[i] += dec.q_vec[i] * (dec.k_g[i] * dt_tilde);
        if (!is_finite(next.curve_tilde.points[i])) {
            throw Error(ErrorCode::numerical_failure, "non-finite vertex in geodesic flow");
        }
    }
    project_to_unit_sphere(next.curve_tilde);
    next.t_tilde = state.t_tilde + dt_tilde;
    next.source_t = undilated_time(next.t_tilde);
    return next;
}

/// Steps the geodesic flow until `t_tilde_target` is hit exactly.
inline RescaledState evolve_geodesic(RescaledState state, double t_tilde_target, double cfl = 0.5) {
    while (state.t_tilde < t_tilde_target) {
        const double bound = cfl * explicit_step_bound(compute_geometry(state.curve_tilde));
        const double remaining = t_tilde_target - state.t_tilde;
        if (remaining <= bound) {
            state = step_geodesic_flow(state, remaining);
            state.t_tilde = t_tilde_target;
            break;
        }
        state = step_geodesic_flow(state, bound);
    }
    return state;
}

struct ConsistencyRow {
    double t = 0.0;
    double t_tilde = 0.0;
    double max_deviation = 0.0;
};

struct ConsistencyReport {
    std::vector<ConsistencyRow> rows;
    double max_deviation = 0.0;
};

/// Vertex-wise distance between rescaled ambient snapshots and geodesic-flow
/// snapshots taken at the dilated times.
inline ConsistencyReport consistency_check(const std::vector<Snapshot>& extrinsic,
                                           const std::vector<RescaledState>& intrinsic) {
    if (extrinsic.size() != intrinsic.size()) {
        throw Error(ErrorCode::invalid_argument, "time grid mismatch: " + std::to_string(extrinsic.size()) + " vs " +
                                                     std::to_string(intrinsic.size()) + " snapshots");
    }
    ConsistencyReport report;
    for (std::size_t k = 0; k < extrinsic.size(); ++k) {
        const Snapshot& ext = extrinsic[k];
        const RescaledState& in = intrinsic[k];
        const double expected = dilated_time(ext.t);
        if (std::abs(in.t_tilde - expected) > 1e-9 * std::max(1.0, std::abs(expected))) {
            throw Error(ErrorCode::invalid_argument, "time grid mismatch at snapshot " + std::to_string(k) +
                                                         ": t~ = " + std::to_string(in.t_tilde) + ", expected " +
                                                         std::to_string(expected));
        }
        if (ext.curve.size() != in.curve_tilde.size()) {
            throw Error(ErrorCode::invalid_argument, "vertex count mismatch at snapshot " + std::to_string(k));
        }
        const RescaledState scaled = rescale(ext.curve, ext.t);
        double worst = 0.0;
        for (std::size_t i = 0; i < in.curve_tilde.size(); ++i) {
            worst = std::max(worst, distance(scaled.curve_tilde.points[i], in.curve_tilde.points[i]));
        }
        report.rows.push_back({ext.t, in.t_tilde, worst});
        report.max_deviation = std::max(report.max_deviation, worst);
    }
    return report;
}

/// Runs the ambient flow (explicit, no remeshing) from a curve on the unit
/// sphere and the geodesic flow from its rescaling, sampling both at
/// `checkpoints` evenly spaced times in (0, t_end], then compares them.
struct SphereConsistencyRun {
    std::vector<Snapshot> extrinsic;
    std::vector<RescaledState> intrinsic;
    ConsistencyReport report;
};

inline SphereConsistencyRun run_sphere_consistency(const SampledCurve& initial, double t_end, std::size_t checkpoints,
                                                   double cfl = 0.5) {
    if (!(t_end > 0.0 && t_end < 0.5)) throw Error(ErrorCode::invalid_argument, "t_end must lie in (0, 1/2)");
    if (checkpoints == 0) throw Error(ErrorCode::invalid_argument, "need at least one checkpoint");
    SphereConsistencyRun out;
    FlowState ambient = FlowState::start(initial);
    RescaledState rescaled = rescale(initial, 0.0);
    for (std::size_t k = 1; k <= checkpoints; ++k) {
        const double target = t_end * static_cast<double>(k) / static_cast<double>(checkpoints);
        while (ambient.t < target) {
            const double dt = std::min(cfl * explicit_step_bound(ambient.geometry), target - ambient.t);
            ambient = step_explicit(ambient, dt);
            if (target - ambient.t < 1e-15) ambient.t = target;
        }
        out.extrinsic.push_back({ambient.step, ambient.t, ambient.curve});
        rescaled = evolve_geodesic(rescaled, dilated_time(target), cfl);
        out.intrinsic.push_back(rescaled);
    }
    out.report = consistency_check(out.extrinsic, out.intrinsic);
    return out;
}

/// max k / min k of the curve scaled to unit diameter.
inline double curvature_ratio(const SampledCurve& curve) {
    double diameter = 0.0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        for (std::size_t j = i + 1; j < curve.size(); ++j) {
            diameter = std::max(diameter, distance(curve.points[i], curve.points[j]));
        }
    }
    SampledCurve scaled = curve;
    for (Vec3& p : scaled.points) p = p / diameter;
    const CurveGeometry g = compute_geometry(scaled);
    const auto [lo, hi] = std::minmax_element(g.scalar_curvature.begin(), g.scalar_curvature.end());
    return *hi / *lo;
}

}  // namespace csf
