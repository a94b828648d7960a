#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "csf/analytic.hpp"
#include "csf/chord_arc.hpp"
#include "csf/curve_io.hpp"
#include "csf/presets.hpp"
#include "csf/run.hpp"
#include "csf/sphere.hpp"

namespace csf {

inline constexpr std::string_view run_csv_header =
    "step,t,L,k_max,total_abs_curv,total_sq_curv,dl_min,dpsi_min,sphere_residual,sing_indicator";
inline constexpr std::string_view minima_csv_header = "i,j,value,d,l,psi,alpha,cond22,cond31";
inline constexpr std::string_view fscan_csv_header = "m,y,F,G,exact_derivative";
inline constexpr std::string_view consistency_csv_header = "t,t_tilde,max_deviation";

namespace detail {

inline std::string optional_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
    return out;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
    return in;
}

inline void finish_output(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

inline void expect_header(std::istream& in, std::string_view header, std::string_view what) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::io, std::string(what) + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header) throw Error(ErrorCode::io, std::string(what) + ": unexpected header '" + line + "'");
}

inline double number_field(std::string_view text, std::size_t line_no) {
    const auto v = parse_double(text);
    if (!v) throw Error(ErrorCode::io, "bad number '" + std::string(text) + "' on line " + std::to_string(line_no));
    return *v;
}

inline std::optional<double> optional_number_field(std::string_view text, std::size_t line_no) {
    if (text.empty()) return std::nullopt;
    return number_field(text, line_no);
}

inline std::size_t index_field(std::string_view text, std::size_t line_no) {
    std::size_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw Error(ErrorCode::io, "bad index '" + std::string(text) + "' on line " + std::to_string(line_no));
    }
    return v;
}

/// Reads comma-separated rows with exactly `columns` fields after the header.
template <class Row>
void read_csv_rows(std::istream& in, std::size_t columns, Row&& row) {
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != columns) {
            throw Error(ErrorCode::io, "expected " + std::to_string(columns) + " fields on line " + std::to_string(line_no));
        }
        row(fields, line_no);
    }
}

inline nlohmann::json number_json(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

}  // namespace detail

// run.csv

inline void write_run_csv(std::ostream& out, const std::vector<RunRow>& rows) {
    out << run_csv_header << '\n';
    for (const RunRow& r : rows) {
        out << r.step << ',' << format_double(r.t) << ',' << format_double(r.length) << ',' << format_double(r.k_max)
            << ',' << format_double(r.total_abs_curvature) << ',' << format_double(r.total_sq_curvature) << ','
            << detail::optional_field(r.dl_min) << ',' << detail::optional_field(r.dpsi_min) << ','
            << detail::optional_field(r.sphere_residual) << ',' << detail::optional_field(r.sing_indicator) << '\n';
    }
}

inline std::vector<RunRow> read_run_csv(std::istream& in) {
    detail::expect_header(in, run_csv_header, "run.csv");
    std::vector<RunRow> rows;
    detail::read_csv_rows(in, 10, [&](const std::vector<std::string_view>& f, std::size_t ln) {
        RunRow r;
        r.step = detail::index_field(f[0], ln);
        r.t = detail::number_field(f[1], ln);
        r.length = detail::number_field(f[2], ln);
        r.k_max = detail::number_field(f[3], ln);
        r.total_abs_curvature = detail::number_field(f[4], ln);
        r.total_sq_curvature = detail::number_field(f[5], ln);
        r.dl_min = detail::optional_number_field(f[6], ln);
        r.dpsi_min = detail::optional_number_field(f[7], ln);
        r.sphere_residual = detail::optional_number_field(f[8], ln);
        r.sing_indicator = detail::optional_number_field(f[9], ln);
        rows.push_back(r);
    });
    return rows;
}

inline void save_run_csv(const std::filesystem::path& path, const std::vector<RunRow>& rows) {
    auto out = detail::open_output(path);
    write_run_csv(out, rows);
    detail::finish_output(out, path);
}

inline std::vector<RunRow> load_run_csv(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    return read_run_csv(in);
}

// run.json

inline nlohmann::json config_json(const FlowConfig& c) {
    nlohmann::json j;
    j["cfl"] = c.cfl;
    j["remesh_every"] = c.remesh_every;
    j["record_every"] = c.record_every;
    j["t_end"] = c.t_end ? nlohmann::json(*c.t_end) : nlohmann::json("auto");
    j["stop_length_fraction"] = c.stop_length_fraction;
    j["stop_curvature_resolution"] = c.stop_curvature_resolution;
    j["scheme"] = std::string(to_string(c.scheme));
    j["sphere_radius"] = c.sphere_radius ? nlohmann::json(*c.sphere_radius) : nlohmann::json(nullptr);
    j["track_ratios"] = c.track_ratios;
    j["exclusion_band"] = c.exclusion_band;
    j["max_steps"] = c.max_steps;
    return j;
}

inline nlohmann::json row_json(const RunRow& r) {
    const auto opt = [](const std::optional<double>& v) { return v ? detail::number_json(*v) : nlohmann::json(nullptr); };
    return {{"step", r.step},
            {"t", r.t},
            {"L", r.length},
            {"k_max", r.k_max},
            {"total_abs_curv", r.total_abs_curvature},
            {"total_sq_curv", r.total_sq_curvature},
            {"dl_min", opt(r.dl_min)},
            {"dpsi_min", opt(r.dpsi_min)},
            {"sphere_residual", opt(r.sphere_residual)},
            {"sing_indicator", opt(r.sing_indicator)}};
}

/// Run summary: config echo, stop reason, T_est, initial total curvature,
/// total-curvature gate verdict (closed curves only) and the final row.
inline nlohmann::json run_summary_json(const RunRecord& record, const FlowConfig& config,
                                       const std::optional<CurvatureGate>& gate, const nlohmann::json& source = {}) {
    if (record.rows.empty()) throw Error(ErrorCode::invalid_argument, "cannot summarize an empty record");
    nlohmann::json j;
    j["config"] = config_json(config);
    if (!source.is_null()) j["source"] = source;
    j["stop_reason"] = record.stop_reason;
    j["T_est"] = detail::number_json(record.T_est);
    j["initial_total_abs_curv"] = record.rows.front().total_abs_curvature;
    if (gate) {
        j["total_curvature_gate"] = {{"value", gate->value}, {"below_4pi", gate->satisfied}};
    } else {
        j["total_curvature_gate"] = nullptr;
    }
    j["rows"] = record.rows.size();
    j["final"] = row_json(record.rows.back());
    return j;
}

inline std::string snapshot_name(std::size_t step) { return "snap_" + std::to_string(step) + ".curve"; }

inline void prepare_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw Error(ErrorCode::io, "cannot create output directory " + dir.string());
    }
}

/// Writes run.csv, run.json and one snap_<step>.curve per stored snapshot,
/// overwriting earlier output.
inline void emit_record(const RunRecord& record, const FlowConfig& config, const std::filesystem::path& dir,
                        const std::optional<CurvatureGate>& gate, const nlohmann::json& source = {}) {
    if (record.rows.empty()) throw Error(ErrorCode::invalid_argument, "cannot emit an empty record");
    prepare_directory(dir);
    save_run_csv(dir / "run.csv", record.rows);
    {
        const auto path = dir / "run.json";
        auto out = detail::open_output(path);
        out << run_summary_json(record, config, gate, source).dump(2) << '\n';
        detail::finish_output(out, path);
    }
    for (const Snapshot& snap : record.snapshots) save_curve(dir / snapshot_name(snap.step), snap.curve);
}

/// Snapshot files in a directory, ordered by step, with times taken from run.csv.
inline std::vector<Snapshot> load_snapshots(const std::filesystem::path& dir) {
    const std::vector<RunRow> rows = load_run_csv(dir / "run.csv");
    std::vector<Snapshot> out;
    for (const RunRow& r : rows) {
        const auto path = dir / snapshot_name(r.step);
        if (!std::filesystem::exists(path)) throw Error(ErrorCode::io, "missing snapshot " + path.string());
        out.push_back({r.step, r.t, load_curve(path)});
    }
    return out;
}

// csf-ratiofield v1

inline void write_ratio_field(std::ostream& out, const RatioField& field) {
    out << "# csf-ratiofield v1\n";
    out << "metric " << to_string(field.metric) << '\n';
    out << "n " << field.n << '\n';
    for (std::size_t i = 0; i < field.n; ++i) {
        for (std::size_t j = 0; j < field.n; ++j) {
            if (field.excluded(i, j)) continue;
            out << i << ' ' << j << ' ' << format_double(field.value(i, j)) << '\n';
        }
    }
}

/// Cells absent from the file read back as NaN (excluded).
inline RatioField read_ratio_field(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || tokenize(line) != std::vector<std::string_view>{"#", "csf-ratiofield", "v1"}) {
        throw Error(ErrorCode::io, "malformed csf-ratiofield header line");
    }
    RatioField field;
    if (!std::getline(in, line)) throw Error(ErrorCode::io, "missing metric line");
    auto tok = tokenize(line);
    if (tok.size() != 2 || tok[0] != "metric") throw Error(ErrorCode::io, "malformed metric line '" + line + "'");
    try {
        field.metric = parse_metric(tok[1]);
    } catch (const Error&) {
        throw Error(ErrorCode::io, "unknown metric '" + std::string(tok[1]) + "'");
    }
    if (!std::getline(in, line)) throw Error(ErrorCode::io, "missing n line");
    tok = tokenize(line);
    if (tok.size() != 2 || tok[0] != "n") throw Error(ErrorCode::io, "malformed n line '" + line + "'");
    field.n = detail::index_field(tok[1], 3);
    field.values.assign(field.n * field.n, std::numeric_limits<double>::quiet_NaN());
    std::size_t line_no = 3;
    std::size_t min_gap = field.n;
    while (std::getline(in, line)) {
        ++line_no;
        tok = tokenize(line);
        if (tok.empty()) continue;
        if (tok.size() != 3) throw Error(ErrorCode::io, "expected 'i j value' on line " + std::to_string(line_no));
        const std::size_t i = detail::index_field(tok[0], line_no);
        const std::size_t j = detail::index_field(tok[1], line_no);
        if (i >= field.n || j >= field.n) throw Error(ErrorCode::io, "index out of range on line " + std::to_string(line_no));
        field.values[i * field.n + j] = detail::number_field(tok[2], line_no);
        const std::size_t gap = i > j ? i - j : j - i;
        min_gap = std::min(min_gap, std::min(gap, field.n - gap));
    }
    field.exclusion_band = min_gap > 0 ? min_gap - 1 : 0;
    return field;
}

// minima.csv

struct MinimumRow {
    std::size_t i = 0;
    std::size_t j = 0;
    double value = 0.0;
    double d = 0.0;
    double l = 0.0;
    double psi = 0.0;
    double alpha = 0.0;
    double cond_dl = 0.0;
    double cond_dpsi = 0.0;
};

inline MinimumRow minimum_row(const PairDiagnostics& diag, double value) {
    return {diag.i, diag.j, value, diag.d, diag.l, diag.psi, diag.alpha, diag.cond_dl, diag.cond_dpsi};
}

inline void write_minima_csv(std::ostream& out, const std::vector<MinimumRow>& rows) {
    out << minima_csv_header << '\n';
    for (const MinimumRow& r : rows) {
        out << r.i << ',' << r.j << ',' << format_double(r.value) << ',' << format_double(r.d) << ','
            << format_double(r.l) << ',' << format_double(r.psi) << ',' << format_double(r.alpha) << ','
            << format_double(r.cond_dl) << ',' << format_double(r.cond_dpsi) << '\n';
    }
}

inline std::vector<MinimumRow> read_minima_csv(std::istream& in) {
    detail::expect_header(in, minima_csv_header, "minima.csv");
    std::vector<MinimumRow> rows;
    detail::read_csv_rows(in, 9, [&](const std::vector<std::string_view>& f, std::size_t ln) {
        rows.push_back({detail::index_field(f[0], ln), detail::index_field(f[1], ln), detail::number_field(f[2], ln),
                        detail::number_field(f[3], ln), detail::number_field(f[4], ln), detail::number_field(f[5], ln),
                        detail::number_field(f[6], ln), detail::number_field(f[7], ln), detail::number_field(f[8], ln)});
    });
    return rows;
}

// fscan.csv

struct FScanRow {
    double m = 0.0;
    double y = 0.0;
    double F = 0.0;
    double G = 0.0;
    double exact_derivative = 0.0;
};

/// One row per (m, y) cell; the exact derivative is evaluated with a = 1, b = sqrt(m).
inline std::vector<FScanRow> helix_scan(const std::vector<double>& m_grid, const std::vector<double>& y_grid) {
    std::vector<FScanRow> rows;
    rows.reserve(m_grid.size() * y_grid.size());
    for (double m : m_grid) {
        const analytic::HelixParams p{1.0, std::sqrt(m)};
        for (double y : y_grid) {
            rows.push_back({m, y, analytic::helix_F(y, m), analytic::helix_G(y, m),
                            analytic::helix_exact_ratio_derivative(p, y)});
        }
    }
    return rows;
}

inline void write_fscan_csv(std::ostream& out, const std::vector<FScanRow>& rows) {
    out << fscan_csv_header << '\n';
    for (const FScanRow& r : rows) {
        out << format_double(r.m) << ',' << format_double(r.y) << ',' << format_double(r.F) << ','
            << format_double(r.G) << ',' << format_double(r.exact_derivative) << '\n';
    }
}

inline std::vector<FScanRow> read_fscan_csv(std::istream& in) {
    detail::expect_header(in, fscan_csv_header, "fscan.csv");
    std::vector<FScanRow> rows;
    detail::read_csv_rows(in, 5, [&](const std::vector<std::string_view>& f, std::size_t ln) {
        rows.push_back({detail::number_field(f[0], ln), detail::number_field(f[1], ln), detail::number_field(f[2], ln),
                        detail::number_field(f[3], ln), detail::number_field(f[4], ln)});
    });
    return rows;
}

// consistency.csv

inline void write_consistency_csv(std::ostream& out, const std::vector<ConsistencyRow>& rows) {
    out << consistency_csv_header << '\n';
    for (const ConsistencyRow& r : rows) {
        out << format_double(r.t) << ',' << format_double(r.t_tilde) << ',' << format_double(r.max_deviation) << '\n';
    }
}

inline std::vector<ConsistencyRow> read_consistency_csv(std::istream& in) {
    detail::expect_header(in, consistency_csv_header, "consistency.csv");
    std::vector<ConsistencyRow> rows;
    detail::read_csv_rows(in, 3, [&](const std::vector<std::string_view>& f, std::size_t ln) {
        rows.push_back({detail::number_field(f[0], ln), detail::number_field(f[1], ln), detail::number_field(f[2], ln)});
    });
    return rows;
}

/// Writes `rows` to `path` with `writer(out, rows)`.
template <class Rows, class Writer>
void save_table(const std::filesystem::path& path, const Rows& rows, Writer&& writer) {
    auto out = detail::open_output(path);
    writer(out, rows);
    detail::finish_output(out, path);
}

}  // namespace csf
