#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "csf/curve.hpp"

namespace csf {

/// Per-vertex differential geometry of a sampled curve.
struct CurveGeometry {
    std::vector<Vec3> tangents;
    std::vector<Vec3> curvature_vectors;
    std::vector<double> scalar_curvature;
    std::vector<double> ds;
    std::vector<double> segment_lengths;
    double total_length = 0.0;

    std::size_t size() const { return tangents.size(); }
};

namespace detail {

// Three-point second derivative with respect to arc length on non-uniform
// spacing: 2/(h1+h2) * ((q-x)/h2 - (x-p)/h1).
inline Vec3 second_difference(const Vec3& p, const Vec3& x, const Vec3& q, double h1, double h2) {
    return ((q - x) / h2 - (x - p) / h1) * (2.0 / (h1 + h2));
}

}  // namespace detail

/// Tangents are the normalized sum of the two unit chord directions at a vertex
/// (the centered difference on uniform spacing). That choice makes the tangent
/// exactly orthogonal to the three-point curvature vector for any spacing.
inline CurveGeometry compute_geometry(const SampledCurve& curve) {
    validate(curve);
    const std::size_t n = curve.size();
    const std::size_t segments = curve.segment_count();

    CurveGeometry g;
    g.tangents.resize(n);
    g.curvature_vectors.resize(n);
    g.scalar_curvature.resize(n);
    g.ds.resize(n);
    g.segment_lengths.resize(segments);

    for (std::size_t s = 0; s < segments; ++s) {
        g.segment_lengths[s] = curve.segment_length(s);
        g.total_length += g.segment_lengths[s];
    }

    const auto interior = [&](std::size_t i, const Vec3& p, const Vec3& q, double h1, double h2) {
        const Vec3& x = curve.points[i];
        const Vec3 ahead = (q - x) / h2;
        const Vec3 behind = (x - p) / h1;
        g.tangents[i] = normalized(ahead + behind);
        g.curvature_vectors[i] = detail::second_difference(p, x, q, h1, h2);
        g.ds[i] = 0.5 * (h1 + h2);
    };

    if (curve.wraps()) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto si = static_cast<std::ptrdiff_t>(i);
            const double h1 = g.segment_lengths[(i + n - 1) % n];
            const double h2 = g.segment_lengths[i];
            interior(i, curve.unrolled(si - 1), curve.unrolled(si + 1), h1, h2);
        }
    } else {
        for (std::size_t i = 1; i + 1 < n; ++i) {
            interior(i, curve.points[i - 1], curve.points[i + 1], g.segment_lengths[i - 1], g.segment_lengths[i]);
        }
        // One-sided at the ends: chord tangent, and the neighbour's second
        // difference with its tangential part removed.
        const auto boundary = [&](std::size_t end, std::size_t next, std::size_t seg) {
            const Vec3 t = end == 0 ? normalized(curve.points[next] - curve.points[end])
                                    : normalized(curve.points[end] - curve.points[next]);
            const Vec3 k = g.curvature_vectors[next];
            g.tangents[end] = t;
            g.curvature_vectors[end] = k - t * dot(k, t);
            g.ds[end] = 0.5 * g.segment_lengths[seg];
        };
        boundary(0, 1, 0);
        boundary(n - 1, n - 2, n - 2);
    }

    for (std::size_t i = 0; i < n; ++i) {
        g.scalar_curvature[i] = norm(g.curvature_vectors[i]);
        if (!std::isfinite(g.scalar_curvature[i])) {
            throw Error(ErrorCode::invalid_curve, "non-finite curvature at vertex " + std::to_string(i));
        }
    }
    return g;
}

/// Discrete total absolute curvature, sum of k_i * ds_i.
inline double total_absolute_curvature(const CurveGeometry& g) {
    double total = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) total += g.scalar_curvature[i] * g.ds[i];
    return total;
}

/// Discrete integral of k^2 over the curve.
inline double total_squared_curvature(const CurveGeometry& g) {
    double total = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) total += g.scalar_curvature[i] * g.scalar_curvature[i] * g.ds[i];
    return total;
}

inline double max_curvature(const CurveGeometry& g) {
    return g.size() == 0 ? 0.0 : *std::max_element(g.scalar_curvature.begin(), g.scalar_curvature.end());
}

inline double min_segment(const CurveGeometry& g) {
    return *std::min_element(g.segment_lengths.begin(), g.segment_lengths.end());
}

/// Length of the circular arc with mean end-point curvature `k` spanning a
/// chord of length `chord`. Reduces to the chord for k -> 0.
inline double circular_arc_length(double chord, double k) {
    const double z = 0.5 * k * chord;
    if (z < 1e-4) {
        const double kc2 = k * k * chord * chord;
        return chord * (1.0 + kc2 / 24.0 + 3.0 * kc2 * kc2 / 640.0);
    }
    return 2.0 * std::asin(std::min(z, 1.0)) / k;
}

/// Arc-length bookkeeping for pair quantities on wrapping curves.
///
/// Segment arc lengths use the circular arc through each chord, which is exact
/// on circles and fourth-order otherwise; chord sums would bias every ratio by
/// O(h^2).
class ArcTable {
  public:
    ArcTable(const SampledCurve& curve, const CurveGeometry& g) {
        const std::size_t segments = curve.segment_count();
        const std::size_t n = curve.size();
        arc_.resize(segments + 1, 0.0);
        curv_.resize(segments + 1, 0.0);
        for (std::size_t s = 0; s < segments; ++s) {
            const std::size_t a = s;
            const std::size_t b = (s + 1) % n;
            const double kmean = 0.5 * (g.scalar_curvature[a] + g.scalar_curvature[b]);
            const double len = circular_arc_length(g.segment_lengths[s], kmean);
            arc_[s + 1] = arc_[s] + len;
            curv_[s + 1] = curv_[s] + kmean * len;
        }
    }

    /// Total arc length L.
    double length() const { return arc_.back(); }

    /// Total of |k| ds, trapezoidal over segments.
    double total_curvature() const { return curv_.back(); }

    /// Arc length from vertex `lo` forward to vertex `hi` (lo <= hi < n).
    double forward_arc(std::size_t lo, std::size_t hi) const { return arc_[hi] - arc_[lo]; }

    double forward_curvature(std::size_t lo, std::size_t hi) const { return curv_[hi] - curv_[lo]; }

    /// Unrolled arc length from vertex 0 to vertex `index` (index may exceed n
    /// on periodic curves).
    double unrolled_arc(std::ptrdiff_t index) const {
        const auto segs = static_cast<std::ptrdiff_t>(arc_.size() - 1);
        const std::ptrdiff_t lap = index / segs;
        return static_cast<double>(lap) * length() + arc_[static_cast<std::size_t>(index - lap * segs)];
    }

    double unrolled_curvature(std::ptrdiff_t index) const {
        const auto segs = static_cast<std::ptrdiff_t>(curv_.size() - 1);
        const std::ptrdiff_t lap = index / segs;
        return static_cast<double>(lap) * total_curvature() + curv_[static_cast<std::size_t>(index - lap * segs)];
    }

  private:
    std::vector<double> arc_;
    std::vector<double> curv_;
};

/// Chord `d` and shorter intrinsic arc `l` between two vertices of a closed curve.
struct PairDistance {
    double d = 0.0;
    double l = 0.0;
    /// True when the shorter arc runs from i towards increasing indices.
    bool forward = true;
    /// Integral of |k| ds over the shorter arc.
    double arc_curvature = 0.0;
};

inline void require_closed_pair(const SampledCurve& curve, std::size_t i, std::size_t j) {
    if (curve.topology != Topology::closed) {
        throw Error(ErrorCode::unsupported_topology,
                    "pair analysis needs a closed curve, got " + std::string(to_string(curve.topology)));
    }
    if (i >= curve.size() || j >= curve.size()) throw Error(ErrorCode::invalid_argument, "vertex index out of range");
    if (i == j) throw Error(ErrorCode::diagonal_pair, "pair (" + std::to_string(i) + ", " + std::to_string(i) + ")");
}

inline PairDistance pair_distances(const SampledCurve& curve, const ArcTable& arcs, std::size_t i, std::size_t j) {
    require_closed_pair(curve, i, j);
    const std::size_t lo = std::min(i, j);
    const std::size_t hi = std::max(i, j);
    const double inner = arcs.forward_arc(lo, hi);
    const double outer = arcs.length() - inner;
    PairDistance out;
    out.d = distance(curve.points[i], curve.points[j]);
    const bool inner_shorter = inner <= outer;
    out.l = inner_shorter ? inner : outer;
    const double inner_curv = arcs.forward_curvature(lo, hi);
    out.arc_curvature = inner_shorter ? inner_curv : arcs.total_curvature() - inner_curv;
    // The inner arc runs forward from lo; from hi it runs backward.
    out.forward = inner_shorter == (i == lo);
    return out;
}

inline PairDistance pair_distances(const SampledCurve& curve, std::size_t i, std::size_t j) {
    require_closed_pair(curve, i, j);
    const CurveGeometry g = compute_geometry(curve);
    return pair_distances(curve, ArcTable(curve, g), i, j);
}

}  // namespace csf
