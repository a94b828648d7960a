#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <numbers>
#include <string>
#include <string_view>

#include "csf/curve_io.hpp"
#include "csf/geometry.hpp"
#include "csf/resample.hpp"

namespace csf {

enum class PresetKind { circle, ellipse, helix, graph_curve, cos2u_curve, sphere_perturbed, custom_file };

inline std::string_view to_string(PresetKind p) {
    switch (p) {
        case PresetKind::circle: return "circle";
        case PresetKind::ellipse: return "ellipse";
        case PresetKind::helix: return "helix";
        case PresetKind::graph_curve: return "graph-curve";
        case PresetKind::cos2u_curve: return "cos2u-curve";
        case PresetKind::sphere_perturbed: return "sphere-perturbed";
        case PresetKind::custom_file: return "custom-file";
    }
    return "circle";
}

inline PresetKind parse_preset(std::string_view s) {
    for (PresetKind p : {PresetKind::circle, PresetKind::ellipse, PresetKind::helix, PresetKind::graph_curve,
                         PresetKind::cos2u_curve, PresetKind::sphere_perturbed, PresetKind::custom_file}) {
        if (s == to_string(p)) return p;
    }
    throw Error(ErrorCode::invalid_argument, "unknown preset '" + std::string(s) + "'");
}

/// Named initial curve. Shape parameters are shared across presets:
/// circle uses `radius`; ellipse uses `a`, `b` as semi-axes; helix and
/// graph-curve use `a` (radius) and `b` (pitch per radian); graph-curve also
/// uses `eps`; sphere-perturbed uses `eps` and `k`.
struct Preset {
    PresetKind kind = PresetKind::circle;
    std::size_t n = 512;
    double radius = 1.0;
    double a = 1.0;
    double b = 1.0;
    double eps = 0.2;
    int k = 3;
    std::filesystem::path file;
};

inline Preset default_preset(PresetKind kind) {
    Preset p;
    p.kind = kind;
    switch (kind) {
        case PresetKind::ellipse: p.a = 2.0; p.b = 1.0; break;
        case PresetKind::graph_curve: p.eps = 0.1; break;
        default: break;
    }
    return p;
}

/// Samples `position` over one period with equal chords.
template <class Position>
SampledCurve sample_equal_chord(Position&& position, std::size_t n, Topology topology, Vec3 offset = {}) {
    if (n < min_vertices(topology)) {
        throw Error(ErrorCode::invalid_argument, "preset needs at least " + std::to_string(min_vertices(topology)) +
                                                     " vertices, got " + std::to_string(n));
    }
    const double period = 2.0 * std::numbers::pi;
    SampledCurve curve;
    curve.topology = topology;
    curve.offset = offset;
    for (double u : equal_chord_parameters(position, 0.0, period, n, topology)) curve.points.push_back(position(u));
    validate(curve);
    return curve;
}

inline SampledCurve circle_curve(double radius, std::size_t n) {
    return sample_equal_chord([radius](double u) { return Vec3{radius * std::cos(u), radius * std::sin(u), 0.0}; }, n,
                              Topology::closed);
}

inline SampledCurve ellipse_curve(double a, double b, std::size_t n) {
    return sample_equal_chord([a, b](double u) { return Vec3{a * std::cos(u), b * std::sin(u), 0.0}; }, n,
                              Topology::closed);
}

/// One period of (a cos u, a sin u, b u) with offset (0, 0, 2 pi b).
inline SampledCurve helix_curve(double a, double b, std::size_t n) {
    return sample_equal_chord([a, b](double u) { return Vec3{a * std::cos(u), a * std::sin(u), b * u}; }, n,
                              Topology::periodic, Vec3{0.0, 0.0, 2.0 * std::numbers::pi * b});
}

/// One period of (a cos u + eps cos 3u, a sin u - eps sin 3u, b u).
inline SampledCurve graph_curve(double a, double b, double eps, std::size_t n) {
    return sample_equal_chord(
        [a, b, eps](double u) {
            return Vec3{a * std::cos(u) + eps * std::cos(3.0 * u), a * std::sin(u) - eps * std::sin(3.0 * u), b * u};
        },
        n, Topology::periodic, Vec3{0.0, 0.0, 2.0 * std::numbers::pi * b});
}

inline SampledCurve cos2u_curve(std::size_t n) {
    return sample_equal_chord([](double u) { return Vec3{std::cos(u), std::sin(u), std::cos(2.0 * u)}; }, n,
                              Topology::closed);
}

/// normalize(cos u, sin u, eps cos(k u)) on the unit sphere.
inline SampledCurve sphere_perturbed_curve(double eps, int k, std::size_t n) {
    if (!(eps > 0.0 && eps <= 0.5) || k < 2) {
        throw Error(ErrorCode::invalid_argument, "sphere-perturbed preset needs eps in (0, 0.5] and k >= 2");
    }
    SampledCurve c = sample_equal_chord(
        [eps, k](double u) { return normalized(Vec3{std::cos(u), std::sin(u), eps * std::cos(k * u)}); }, n,
        Topology::closed);
    return c;
}

inline SampledCurve make_preset(const Preset& p) {
    switch (p.kind) {
        case PresetKind::circle: return circle_curve(p.radius, p.n);
        case PresetKind::ellipse: return ellipse_curve(p.a, p.b, p.n);
        case PresetKind::helix: return helix_curve(p.a, p.b, p.n);
        case PresetKind::graph_curve: return graph_curve(p.a, p.b, p.eps, p.n);
        case PresetKind::cos2u_curve: return cos2u_curve(p.n);
        case PresetKind::sphere_perturbed: return sphere_perturbed_curve(p.eps, p.k, p.n);
        case PresetKind::custom_file: {
            SampledCurve c = load_curve(p.file);
            validate(c);
            return c;
        }
    }
    throw Error(ErrorCode::invalid_argument, "unknown preset");
}

/// Total absolute curvature of a closed initial curve and whether it is below 4 pi.
struct CurvatureGate {
    double value = 0.0;
    bool satisfied = false;
};

inline CurvatureGate check_total_curvature_gate(const SampledCurve& curve) {
    if (curve.topology != Topology::closed) {
        throw Error(ErrorCode::unsupported_topology, "the total-curvature gate is defined for closed curves");
    }
    const double value = total_absolute_curvature(compute_geometry(curve));
    return {value, value < 4.0 * std::numbers::pi};
}

}  // namespace csf
