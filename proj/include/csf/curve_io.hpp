#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "csf/curve.hpp"
#include "csf/format.hpp"

namespace csf {

// csf-curve v1:
//   # csf-curve v1
//   topology <closed|open|periodic> [ox oy oz]
//   x y z            (one vertex per line)

inline void write_curve(std::ostream& out, const SampledCurve& curve) {
    out << "# csf-curve v1\n";
    out << "topology " << to_string(curve.topology);
    if (curve.topology == Topology::periodic) {
        out << ' ' << format_double(curve.offset.x) << ' ' << format_double(curve.offset.y) << ' '
            << format_double(curve.offset.z);
    }
    out << '\n';
    for (const Vec3& p : curve.points) {
        out << format_double(p.x) << ' ' << format_double(p.y) << ' ' << format_double(p.z) << '\n';
    }
}

inline SampledCurve read_curve(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || tokenize(line) != std::vector<std::string_view>{"#", "csf-curve", "v1"}) {
        throw Error(ErrorCode::io, "malformed csf-curve header line");
    }
    if (!std::getline(in, line)) throw Error(ErrorCode::io, "missing topology line");
    const auto head = tokenize(line);
    if (head.size() < 2 || head[0] != "topology") throw Error(ErrorCode::io, "malformed topology line '" + line + "'");

    SampledCurve curve;
    try {
        curve.topology = parse_topology(head[1]);
    } catch (const Error&) {
        throw Error(ErrorCode::io, "unknown topology '" + std::string(head[1]) + "'");
    }
    const std::size_t expected = curve.topology == Topology::periodic ? 5 : 2;
    if (head.size() != expected) throw Error(ErrorCode::io, "malformed topology line '" + line + "'");
    if (curve.topology == Topology::periodic) {
        const auto ox = parse_double(head[2]);
        const auto oy = parse_double(head[3]);
        const auto oz = parse_double(head[4]);
        if (!ox || !oy || !oz) throw Error(ErrorCode::io, "malformed periodic offset");
        curve.offset = {*ox, *oy, *oz};
    }

    std::size_t line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        const auto tok = tokenize(line);
        if (tok.empty()) continue;
        if (tok.size() != 3) throw Error(ErrorCode::io, "expected 'x y z' on line " + std::to_string(line_no));
        const auto x = parse_double(tok[0]);
        const auto y = parse_double(tok[1]);
        const auto z = parse_double(tok[2]);
        if (!x || !y || !z) throw Error(ErrorCode::io, "bad number on line " + std::to_string(line_no));
        curve.points.push_back({*x, *y, *z});
    }
    return curve;
}

inline void save_curve(const std::filesystem::path& path, const SampledCurve& curve) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
    write_curve(out, curve);
    if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

inline SampledCurve load_curve(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
    return read_curve(in);
}

}  // namespace csf
