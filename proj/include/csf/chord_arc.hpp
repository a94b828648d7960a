#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "csf/geometry.hpp"
#include "csf/threads.hpp"

namespace csf {

enum class RatioMetric { d_over_l, d_over_psi };

inline std::string_view to_string(RatioMetric m) { return m == RatioMetric::d_over_l ? "d_over_l" : "d_over_psi"; }

inline RatioMetric parse_metric(std::string_view s) {
    if (s == "d_over_l") return RatioMetric::d_over_l;
    if (s == "d_over_psi") return RatioMetric::d_over_psi;
    throw Error(ErrorCode::invalid_argument, "unknown metric '" + std::string(s) + "'");
}

/// psi = (L/pi) sin(l pi / L), the closed-curve replacement for l.
inline double psi_of(double l, double length) {
    return length / std::numbers::pi * std::sin(l * std::numbers::pi / length);
}

/// Ratio over all vertex pairs of a closed curve, stored densely (n x n).
/// Pairs within `exclusion_band` of the diagonal (cyclically) hold NaN.
struct RatioField {
    RatioMetric metric = RatioMetric::d_over_l;
    std::size_t n = 0;
    std::size_t exclusion_band = 2;
    double length = 0.0;
    std::vector<double> values;

    double value(std::size_t i, std::size_t j) const { return values[i * n + j]; }

    bool excluded(std::size_t i, std::size_t j) const {
        const std::size_t gap = i > j ? i - j : j - i;
        return std::min(gap, n - gap) <= exclusion_band;
    }
};

namespace detail {

inline double pair_ratio(RatioMetric metric, const PairDistance& pd, double length) {
    return metric == RatioMetric::d_over_l ? pd.d / pd.l : pd.d / psi_of(pd.l, length);
}

inline void require_field_curve(const SampledCurve& curve) {
    if (curve.topology != Topology::closed) {
        throw Error(ErrorCode::unsupported_topology,
                    "ratio fields need a closed curve, got " + std::string(to_string(curve.topology)));
    }
    if (curve.size() < 16) throw Error(ErrorCode::invalid_argument, "ratio fields need at least 16 vertices");
}

}  // namespace detail

inline RatioField ratio_field(const SampledCurve& curve, RatioMetric metric, std::size_t exclusion_band = 2,
                              std::size_t workers = worker_count()) {
    detail::require_field_curve(curve);
    const CurveGeometry g = compute_geometry(curve);
    const ArcTable arcs(curve, g);

    RatioField field;
    field.metric = metric;
    field.n = curve.size();
    field.exclusion_band = exclusion_band;
    field.length = arcs.length();
    field.values.assign(field.n * field.n, std::numeric_limits<double>::quiet_NaN());

    parallel_rows(field.n, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            for (std::size_t j = 0; j < field.n; ++j) {
                if (field.excluded(i, j)) continue;
                const PairDistance pd = pair_distances(curve, arcs, i, j);
                field.values[i * field.n + j] = detail::pair_ratio(metric, pd, field.length);
            }
        }
    });
    return field;
}

struct PairValue {
    std::size_t i = 0;
    std::size_t j = 0;
    double value = 0.0;
};

/// Discrete local minima of the pair function: a cell is a minimum when it is
/// no larger than each of its 8 torus neighbours and strictly smaller than at
/// least one, with a 1e-12 relative tolerance on comparisons.
/// Only i < j is reported; result sorted by value, then (i, j).
inline std::vector<PairValue> find_local_minima(const RatioField& field) {
    const std::size_t n = field.n;
    bool any = false;
    for (double v : field.values) any = any || !std::isnan(v);
    if (!any) throw Error(ErrorCode::invalid_argument, "ratio field has no admissible pairs");

    std::vector<PairValue> minima;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (field.excluded(i, j)) continue;
            const double v = field.value(i, j);
            const double slack = 1e-12 * std::max(1.0, std::abs(v));
            bool lowest = true;
            bool strict = false;
            for (int di = -1; di <= 1 && lowest; ++di) {
                for (int dj = -1; dj <= 1; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    const std::size_t a = (i + n + static_cast<std::size_t>(di + 1) - 1) % n;
                    const std::size_t b = (j + n + static_cast<std::size_t>(dj + 1) - 1) % n;
                    if (a == b || field.excluded(a, b)) continue;
                    const double w = field.value(a, b);
                    if (v > w + slack) {
                        lowest = false;
                        break;
                    }
                    if (v < w - slack) strict = true;
                }
            }
            if (lowest && strict) minima.push_back({i, j, v});
        }
    }
    std::sort(minima.begin(), minima.end(), [](const PairValue& a, const PairValue& b) {
        if (a.value != b.value) return a.value < b.value;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
    return minima;
}

/// Everything attached to a vertex pair (p, q).
///
/// `e1`, `e2` are the unit tangents at p and q oriented along the shorter arc
/// from p to q, and `omega` points from p to q; with those orientations the
/// first-variation identities read <omega, e> = d/l and <omega, e> = (d/psi) cos(alpha).
struct PairDiagnostics {
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    double l = 0.0;
    double length = 0.0;
    Vec3 omega{};
    Vec3 e1{};
    Vec3 e2{};
    double psi = std::numeric_limits<double>::quiet_NaN();
    double alpha = std::numeric_limits<double>::quiet_NaN();
    /// Integral of |k| ds over the arc between p and q.
    double arc_curvature = 0.0;
    double cond_dl = 0.0;
    double cond_dpsi = std::numeric_limits<double>::quiet_NaN();
    std::pair<double, double> first_var_residual_dl{};
    std::pair<double, double> first_var_residual_dpsi{std::numeric_limits<double>::quiet_NaN(),
                                                      std::numeric_limits<double>::quiet_NaN()};
};

/// -|e1+e2|^2 + <e1+e2, omega>^2 + (d/l)^2 K^2, with K the curvature integral.
inline double dl_pair_condition(const PairDiagnostics& diag, double total_curvature) {
    const Vec3 sum = diag.e1 + diag.e2;
    const double along = dot(sum, diag.omega);
    const double ratio = diag.d / diag.l;
    return -norm2(sum) + along * along + ratio * ratio * total_curvature * total_curvature;
}

/// cos(a) K^2 - cos(a) 4 pi^2 l^2 / L^2 - psi l |e1+e2|^2 / d^2 + (4 l / psi) cos^2(a),
/// with K the integral of |k| over the shorter arc.
inline double dpsi_pair_condition(const PairDiagnostics& diag, double arc_curvature_integral) {
    const double c = std::cos(diag.alpha);
    const double pi = std::numbers::pi;
    const double k2 = arc_curvature_integral * arc_curvature_integral;
    const double frac = diag.l / diag.length;
    return c * k2 - c * 4.0 * pi * pi * frac * frac - diag.psi * diag.l * norm2(diag.e1 + diag.e2) / (diag.d * diag.d) +
           4.0 * diag.l / diag.psi * c * c;
}

namespace detail {

inline void fill_conditions(PairDiagnostics& diag) {
    const double dl = diag.d / diag.l;
    diag.first_var_residual_dl = {dot(diag.omega, diag.e1) - dl, dot(diag.omega, diag.e2) - dl};
    diag.cond_dl = dl_pair_condition(diag, diag.arc_curvature);
    if (!std::isnan(diag.psi)) {
        const double target = diag.d / diag.psi * std::cos(diag.alpha);
        diag.first_var_residual_dpsi = {dot(diag.omega, diag.e1) - target, dot(diag.omega, diag.e2) - target};
        diag.cond_dpsi = dpsi_pair_condition(diag, diag.arc_curvature);
    }
}

}  // namespace detail

inline PairDiagnostics pair_diagnostics(const SampledCurve& curve, const CurveGeometry& g, const ArcTable& arcs,
                                        std::size_t i, std::size_t j) {
    const PairDistance pd = pair_distances(curve, arcs, i, j);
    PairDiagnostics diag;
    diag.i = i;
    diag.j = j;
    diag.d = pd.d;
    diag.l = pd.l;
    diag.length = arcs.length();
    diag.omega = (curve.points[j] - curve.points[i]) / pd.d;
    const double orient = pd.forward ? 1.0 : -1.0;
    diag.e1 = g.tangents[i] * orient;
    diag.e2 = g.tangents[j] * orient;
    diag.psi = psi_of(pd.l, diag.length);
    diag.alpha = pd.l * std::numbers::pi / diag.length;
    diag.arc_curvature = pd.arc_curvature;
    detail::fill_conditions(diag);
    return diag;
}

inline PairDiagnostics pair_diagnostics(const SampledCurve& curve, std::size_t i, std::size_t j) {
    require_closed_pair(curve, i, j);
    const CurveGeometry g = compute_geometry(curve);
    return pair_diagnostics(curve, g, ArcTable(curve, g), i, j);
}

/// Pair diagnostics on a periodic curve between vertex `i` and the unrolled
/// vertex `i + separation`. The arc is the unrolled arc, so psi, alpha and the
/// closed-curve condition stay NaN.
inline PairDiagnostics periodic_pair_diagnostics(const SampledCurve& curve, const CurveGeometry& g,
                                                 const ArcTable& arcs, std::size_t i, std::size_t separation) {
    if (curve.topology != Topology::periodic) {
        throw Error(ErrorCode::unsupported_topology, "periodic pair diagnostics need a periodic curve");
    }
    if (separation == 0) throw Error(ErrorCode::diagonal_pair, "zero separation");
    const auto si = static_cast<std::ptrdiff_t>(i);
    const auto sj = si + static_cast<std::ptrdiff_t>(separation);
    PairDiagnostics diag;
    diag.i = i;
    diag.j = static_cast<std::size_t>(sj) % curve.size();
    const Vec3 chord = curve.unrolled(sj) - curve.points[i];
    diag.d = norm(chord);
    diag.l = arcs.unrolled_arc(sj) - arcs.unrolled_arc(si);
    diag.length = arcs.length();
    diag.omega = chord / diag.d;
    diag.e1 = g.tangents[i];
    diag.e2 = g.tangents[diag.j];
    diag.arc_curvature = arcs.unrolled_curvature(sj) - arcs.unrolled_curvature(si);
    detail::fill_conditions(diag);
    return diag;
}

/// Minimum of d/l on a periodic curve over separations in (band, max_separation].
struct PeriodicMinimum {
    double value = std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    std::size_t separation = 0;
};

inline PeriodicMinimum periodic_min_ratio(const SampledCurve& curve, std::size_t max_separation,
                                          std::size_t exclusion_band = 2) {
    if (curve.topology != Topology::periodic) {
        throw Error(ErrorCode::unsupported_topology, "periodic scan needs a periodic curve");
    }
    const CurveGeometry g = compute_geometry(curve);
    const ArcTable arcs(curve, g);
    PeriodicMinimum best;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const auto si = static_cast<std::ptrdiff_t>(i);
        const double base = arcs.unrolled_arc(si);
        for (std::size_t s = exclusion_band + 1; s <= max_separation; ++s) {
            const auto sj = si + static_cast<std::ptrdiff_t>(s);
            const double d = distance(curve.points[i], curve.unrolled(sj));
            const double v = d / (arcs.unrolled_arc(sj) - base);
            if (v < best.value) best = {v, i, s};
        }
    }
    return best;
}

/// Default separation window for periodic scans: one and a half periods.
inline std::size_t default_max_separation(const SampledCurve& curve) { return curve.size() * 3 / 2; }

/// Global minima of d/l and d/psi over admissible pairs, without storing the field.
struct RatioMinima {
    std::optional<double> d_over_l;
    std::optional<double> d_over_psi;
};

inline RatioMinima ratio_minima(const SampledCurve& curve, std::size_t exclusion_band = 2) {
    RatioMinima out;
    if (curve.topology == Topology::open) return out;
    if (curve.topology == Topology::periodic) {
        out.d_over_l = periodic_min_ratio(curve, default_max_separation(curve), exclusion_band).value;
        return out;
    }
    if (curve.size() < 16) return out;
    const CurveGeometry g = compute_geometry(curve);
    const ArcTable arcs(curve, g);
    const double length = arcs.length();
    RatioField shape;
    shape.n = curve.size();
    shape.exclusion_band = exclusion_band;
    double best_l = std::numeric_limits<double>::infinity();
    double best_psi = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < shape.n; ++i) {
        for (std::size_t j = i + 1; j < shape.n; ++j) {
            if (shape.excluded(i, j)) continue;
            const PairDistance pd = pair_distances(curve, arcs, i, j);
            best_l = std::min(best_l, detail::pair_ratio(RatioMetric::d_over_l, pd, length));
            best_psi = std::min(best_psi, detail::pair_ratio(RatioMetric::d_over_psi, pd, length));
        }
    }
    out.d_over_l = best_l;
    out.d_over_psi = best_psi;
    return out;
}

/// Global-minimum time series of a ratio across snapshots, with forward
/// finite-difference slopes (one fewer than points).
struct MinRatioSeries {
    std::vector<double> t;
    std::vector<double> value;
    std::vector<double> slope;
};

inline MinRatioSeries min_ratio_series(const std::vector<Snapshot>& snapshots, RatioMetric metric,
                                       std::size_t exclusion_band = 2) {
    if (snapshots.size() < 2) throw Error(ErrorCode::invalid_argument, "min_ratio_series needs at least 2 snapshots");
    MinRatioSeries out;
    for (const Snapshot& snap : snapshots) {
        const RatioMinima mins = ratio_minima(snap.curve, exclusion_band);
        const auto& v = metric == RatioMetric::d_over_l ? mins.d_over_l : mins.d_over_psi;
        if (!v) {
            throw Error(ErrorCode::unsupported_topology,
                        std::string(to_string(metric)) + " is undefined for this curve topology");
        }
        out.t.push_back(snap.t);
        out.value.push_back(*v);
    }
    for (std::size_t k = 0; k + 1 < out.t.size(); ++k) {
        out.slope.push_back((out.value[k + 1] - out.value[k]) / (out.t[k + 1] - out.t[k]));
    }
    return out;
}

}  // namespace csf
