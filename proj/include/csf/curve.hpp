#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "csf/error.hpp"
#include "csf/vec3.hpp"

namespace csf {

enum class Topology { closed, open, periodic };

inline std::string_view to_string(Topology t) {
    switch (t) {
        case Topology::closed: return "closed";
        case Topology::open: return "open";
        case Topology::periodic: return "periodic";
    }
    return "closed";
}

inline Topology parse_topology(std::string_view s) {
    if (s == "closed") return Topology::closed;
    if (s == "open") return Topology::open;
    if (s == "periodic") return Topology::periodic;
    throw Error(ErrorCode::invalid_argument, "unknown topology '" + std::string(s) + "'");
}

inline std::size_t min_vertices(Topology t) { return t == Topology::open ? 4 : 8; }

/// Ordered vertex list standing in for one time slice of the flow.
///
/// For `Topology::periodic` the successor of the last vertex is the first
/// vertex translated by `offset`, so one period of a helix (offset (0,0,2*pi*b))
/// is a compact object with wrap-around stencils.
struct SampledCurve {
    std::vector<Vec3> points;
    Topology topology = Topology::closed;
    Vec3 offset{};

    std::size_t size() const { return points.size(); }

    bool wraps() const { return topology != Topology::open; }

    /// Number of segments: n for closed/periodic curves, n-1 for open ones.
    std::size_t segment_count() const { return wraps() ? points.size() : points.size() - 1; }

    /// Position of vertex `i + k*n` on the unrolled curve. Only meaningful for
    /// wrapping topologies; closed curves ignore the lap count.
    Vec3 unrolled(std::ptrdiff_t index) const {
        const auto n = static_cast<std::ptrdiff_t>(points.size());
        std::ptrdiff_t lap = index >= 0 ? index / n : -((-index + n - 1) / n);
        const std::ptrdiff_t local = index - lap * n;
        Vec3 p = points[static_cast<std::size_t>(local)];
        if (topology == Topology::periodic && lap != 0) p += offset * static_cast<double>(lap);
        return p;
    }

    /// End point of segment `s`, i.e. vertex s+1 with wrap-around applied.
    Vec3 segment_end(std::size_t s) const { return unrolled(static_cast<std::ptrdiff_t>(s) + 1); }

    double segment_length(std::size_t s) const { return distance(points[s], segment_end(s)); }
};

/// A curve captured at flow time `t` after `step` steps.
struct Snapshot {
    std::size_t step = 0;
    double t = 0.0;
    SampledCurve curve;
};

/// Throws `ErrorCode::invalid_curve` unless the vertex-count, distinct-neighbour
/// and finiteness invariants hold.
inline void validate(const SampledCurve& curve) {
    const std::size_t n = curve.size();
    if (n < min_vertices(curve.topology)) {
        throw Error(ErrorCode::invalid_curve, std::string(to_string(curve.topology)) + " curve needs at least " +
                                                  std::to_string(min_vertices(curve.topology)) + " vertices, got " +
                                                  std::to_string(n));
    }
    if (curve.topology == Topology::periodic && norm2(curve.offset) == 0.0) {
        throw Error(ErrorCode::invalid_curve, "periodic curve requires a nonzero offset");
    }
    for (const Vec3& p : curve.points) {
        if (!is_finite(p)) throw Error(ErrorCode::invalid_curve, "non-finite vertex");
    }
    for (std::size_t s = 0; s < curve.segment_count(); ++s) {
        if (!(curve.segment_length(s) > 0.0)) {
            throw Error(ErrorCode::invalid_curve, "degenerate segment at vertex " + std::to_string(s));
        }
    }
}

/// Plain chord-sum length, independent of any geometry cache.
inline double polyline_length(const SampledCurve& curve) {
    double total = 0.0;
    for (std::size_t s = 0; s < curve.segment_count(); ++s) total += curve.segment_length(s);
    return total;
}

}  // namespace csf
