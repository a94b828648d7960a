#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "csf/curve.hpp"

namespace csf {

/// Parameters u_0 < u_1 < ... along `position` whose consecutive chords all have
/// the same length. `u_begin` and `u_begin + span` are fixed; the last parameter
/// is included only for open curves. `position(u_begin + span)` must return the
/// closing point (the first point, or the first point plus the period offset).
template <class Position>
std::vector<double> equal_chord_parameters(Position&& position, double u_begin, double span, std::size_t n,
                                           Topology topology) {
    const std::size_t segs = topology == Topology::open ? n - 1 : n;
    std::vector<double> u(segs + 1);
    for (std::size_t k = 0; k <= segs; ++k) u[k] = u_begin + span * static_cast<double>(k) / static_cast<double>(segs);
    u[segs] = u_begin + span;

    std::vector<Vec3> pts(segs + 1);
    std::vector<double> chord(segs);
    std::vector<double> next(segs + 1);
    for (int iter = 0; iter < 200; ++iter) {
        for (std::size_t k = 0; k <= segs; ++k) pts[k] = position(u[k]);
        double total = 0.0;
        for (std::size_t k = 0; k < segs; ++k) {
            chord[k] = distance(pts[k], pts[k + 1]);
            total += chord[k];
        }
        const double target = total / static_cast<double>(segs);
        double worst = 0.0;
        double cumulative = 0.0;
        next = u;
        for (std::size_t k = 1; k < segs; ++k) {
            cumulative += chord[k - 1];
            const double miss = target * static_cast<double>(k) - cumulative;
            worst = std::max(worst, std::abs(miss));
            const double speed = (chord[k - 1] + chord[k]) / (u[k + 1] - u[k - 1]);
            double du = miss / speed;
            // Keep the ordering; a half step towards either neighbour is always safe.
            const double room = 0.5 * (du > 0 ? u[k + 1] - u[k] : u[k] - u[k - 1]);
            du = std::clamp(du, -room, room);
            next[k] = u[k] + du;
        }
        u.swap(next);
        if (worst <= 1e-14 * target) break;
    }
    if (topology != Topology::open) u.pop_back();
    return u;
}

/// Resamples the piecewise-linear interpolant with `n` vertices of equal chord
/// length. Vertex 0 (and for open curves the last vertex) stays put; topology
/// and offset are preserved.
inline SampledCurve resample_uniform(const SampledCurve& curve, std::size_t n) {
    validate(curve);
    if (n < min_vertices(curve.topology)) {
        throw Error(ErrorCode::invalid_argument, "resample target " + std::to_string(n) + " is below the minimum of " +
                                                     std::to_string(min_vertices(curve.topology)));
    }
    const std::size_t segments = curve.segment_count();
    std::vector<double> cumulative(segments + 1, 0.0);
    for (std::size_t s = 0; s < segments; ++s) cumulative[s + 1] = cumulative[s] + curve.segment_length(s);
    const double length = cumulative.back();

    const auto position = [&](double sigma) -> Vec3 {
        sigma = std::clamp(sigma, 0.0, length);
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), sigma);
        std::size_t s = it == cumulative.begin() ? 0 : static_cast<std::size_t>(it - cumulative.begin()) - 1;
        if (s >= segments) s = segments - 1;
        const double span = cumulative[s + 1] - cumulative[s];
        const double frac = (sigma - cumulative[s]) / span;
        const Vec3 a = curve.points[s];
        const Vec3 b = curve.segment_end(s);
        return a + (b - a) * frac;
    };

    const std::vector<double> params = equal_chord_parameters(position, 0.0, length, n, curve.topology);
    SampledCurve out;
    out.topology = curve.topology;
    out.offset = curve.offset;
    out.points.reserve(params.size());
    for (double sigma : params) out.points.push_back(position(sigma));
    out.points.front() = curve.points.front();
    if (curve.topology == Topology::open) out.points.back() = curve.points.back();
    return out;
}

}  // namespace csf
