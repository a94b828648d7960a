#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "csf/csf.hpp"

namespace fs = std::filesystem;
using namespace csf;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_invalid = 1;
constexpr int exit_numerical = 2;

struct PresetOptions {
    std::string name = "circle";
    std::optional<std::size_t> n;
    std::optional<double> radius, a, b, eps;
    std::optional<int> k;
    std::string file;

    void attach(CLI::App* app) {
        app->add_option("--preset", name, "circle|ellipse|helix|graph-curve|cos2u-curve|sphere-perturbed|custom-file");
        app->add_option("--n", n, "vertex count (default 512)");
        app->add_option("--radius", radius, "circle radius");
        app->add_option("--a", a, "ellipse semi-axis / helix radius");
        app->add_option("--b", b, "ellipse semi-axis / helix pitch");
        app->add_option("--eps", eps, "perturbation amplitude");
        app->add_option("--k", k, "perturbation wave number");
        app->add_option("--file", file, "csf-curve v1 file for custom-file");
    }

    Preset resolve() const {
        Preset p = default_preset(parse_preset(name));
        if (n) p.n = *n;
        if (radius) p.radius = *radius;
        if (a) p.a = *a;
        if (b) p.b = *b;
        if (eps) p.eps = *eps;
        if (k) p.k = *k;
        p.file = file;
        if (p.kind == PresetKind::custom_file && file.empty()) {
            throw Error(ErrorCode::invalid_argument, "custom-file preset needs --file");
        }
        return p;
    }

    nlohmann::json echo(const Preset& p) const {
        nlohmann::json j = {{"preset", std::string(to_string(p.kind))}, {"n", p.n}};
        switch (p.kind) {
            case PresetKind::circle: j["radius"] = p.radius; break;
            case PresetKind::ellipse:
            case PresetKind::helix: j["a"] = p.a; j["b"] = p.b; break;
            case PresetKind::graph_curve: j["a"] = p.a; j["b"] = p.b; j["eps"] = p.eps; break;
            case PresetKind::sphere_perturbed: j["eps"] = p.eps; j["k"] = p.k; break;
            case PresetKind::custom_file: j["file"] = p.file.string(); break;
            case PresetKind::cos2u_curve: break;
        }
        return j;
    }
};

struct FlowOptions {
    std::string t_end = "auto";
    double cfl = FlowConfig{}.cfl;
    std::string scheme = "semi_implicit";
    std::size_t remesh_every = FlowConfig{}.remesh_every;
    std::size_t record_every = FlowConfig{}.record_every;
    double stop_length_fraction = FlowConfig{}.stop_length_fraction;
    double stop_resolution = FlowConfig{}.stop_curvature_resolution;
    std::size_t band = 2;
    std::size_t max_steps = FlowConfig{}.max_steps;
    bool no_ratios = false;

    void attach(CLI::App* app, bool with_t_end = true) {
        if (with_t_end) app->add_option("--t-end", t_end, "end time or 'auto'");
        app->add_option("--cfl", cfl, "time step factor in (0, 1]");
        app->add_option("--scheme", scheme, "explicit|semi_implicit");
        app->add_option("--remesh-every", remesh_every, "steps between resamplings");
        app->add_option("--record-every", record_every, "steps between records");
        app->add_option("--stop-length-fraction", stop_length_fraction, "stop when L < fraction * L0");
        app->add_option("--stop-resolution", stop_resolution, "stop when k_max * min(ds) exceeds this");
        app->add_option("--band", band, "near-diagonal exclusion half-width");
        app->add_option("--max-steps", max_steps, "step limit");
        app->add_flag("--no-ratios", no_ratios, "skip ratio minima columns");
    }

    FlowConfig config() const {
        FlowConfig c;
        if (t_end != "auto") {
            const auto v = parse_double(t_end);
            if (!v) throw Error(ErrorCode::invalid_argument, "--t-end must be a number or 'auto'");
            c.t_end = *v;
        }
        c.cfl = cfl;
        c.scheme = parse_scheme(scheme);
        c.remesh_every = remesh_every;
        c.record_every = record_every;
        c.stop_length_fraction = stop_length_fraction;
        c.stop_curvature_resolution = stop_resolution;
        c.exclusion_band = band;
        c.max_steps = max_steps;
        c.track_ratios = !no_ratios;
        c.validate();
        return c;
    }
};

std::optional<CurvatureGate> gate_for(const SampledCurve& curve) {
    if (curve.topology != Topology::closed) return std::nullopt;
    return check_total_curvature_gate(curve);
}

void print_row(const char* label, const RunRow& r) {
    std::printf("%s step=%zu t=%s L=%s k_max=%s\n", label, r.step, format_double(r.t).c_str(),
                format_double(r.length).c_str(), format_double(r.k_max).c_str());
}

/// Runs the flow and writes the record; a numerical failure still writes the
/// partial record before being rethrown.
RunRecord run_and_emit(const SampledCurve& curve, const FlowConfig& config, const fs::path& out,
                       const nlohmann::json& source) {
    const auto gate = gate_for(curve);
    try {
        RunRecord record = run(curve, config);
        emit_record(record, config, out, gate, source);
        return record;
    } catch (const RunFailure& failure) {
        if (!failure.partial().rows.empty()) emit_record(failure.partial(), config, out, gate, source);
        throw;
    }
}

int cmd_simulate(const PresetOptions& po, const FlowOptions& fo, std::optional<double> sphere_r0, const fs::path& out) {
    const Preset preset = po.resolve();
    FlowConfig config = fo.config();
    if (sphere_r0) {
        config.sphere_radius = *sphere_r0;
    } else if (preset.kind == PresetKind::sphere_perturbed) {
        config.sphere_radius = 1.0;
    }
    const SampledCurve curve = make_preset(preset);
    const RunRecord record = run_and_emit(curve, config, out, po.echo(preset));
    std::printf("stop_reason=%s rows=%zu T_est=%s\n", record.stop_reason.c_str(), record.rows.size(),
                format_double(record.T_est).c_str());
    print_row("final", record.rows.back());
    return exit_ok;
}

int cmd_ratio_field(const PresetOptions& po, const std::string& curve_file, const std::string& metric_name,
                    std::size_t band, const fs::path& out) {
    const RatioMetric metric = parse_metric(metric_name);
    SampledCurve curve;
    if (!curve_file.empty()) {
        curve = load_curve(curve_file);
        validate(curve);
    } else {
        curve = make_preset(po.resolve());
    }
    const RatioField field = ratio_field(curve, metric, band, worker_count());
    const auto minima = find_local_minima(field);
    const CurveGeometry g = compute_geometry(curve);
    const ArcTable arcs(curve, g);
    std::vector<MinimumRow> rows;
    for (const PairValue& m : minima) rows.push_back(minimum_row(pair_diagnostics(curve, g, arcs, m.i, m.j), m.value));

    prepare_directory(out);
    save_table(out / "ratio_field.txt", field, [](std::ostream& os, const RatioField& f) { write_ratio_field(os, f); });
    save_table(out / "minima.csv", rows, [](std::ostream& os, const auto& r) { write_minima_csv(os, r); });
    std::printf("metric=%s n=%zu minima=%zu", std::string(to_string(metric)).c_str(), field.n, rows.size());
    if (!rows.empty()) std::printf(" min=%s at (%zu,%zu)", format_double(rows.front().value).c_str(), rows.front().i, rows.front().j);
    std::printf("\n");
    return exit_ok;
}

struct ScanOptions {
    double m_min = 0.01, m_max = 0.1;
    std::size_t m_steps = 10;
    bool log_m = false;
    double y_min = 0.1, y_max = 4.0 * std::numbers::pi;
    std::size_t y_steps = 400;
};

int cmd_helix_scan(const ScanOptions& so, const fs::path& out) {
    if (!(so.m_min >= 0.0 && so.m_max >= so.m_min) || so.m_steps == 0) {
        throw Error(ErrorCode::invalid_argument, "need 0 <= m-min <= m-max and m-steps >= 1");
    }
    if (!(so.y_min > 0.0 && so.y_max >= so.y_min) || so.y_steps == 0) {
        throw Error(ErrorCode::invalid_argument, "need 0 < y-min <= y-max and y-steps >= 1");
    }
    if (so.log_m && !(so.m_min > 0.0)) throw Error(ErrorCode::invalid_argument, "--log-m needs m-min > 0");
    const auto m_grid = so.log_m ? analytic::log_grid(so.m_min, so.m_max, so.m_steps)
                                 : analytic::linear_grid(so.m_min, so.m_max, so.m_steps);
    const auto y_grid = analytic::linear_grid(so.y_min, so.y_max, so.y_steps);
    const auto rows = helix_scan(m_grid, y_grid);
    prepare_directory(out);
    save_table(out / "fscan.csv", rows, [](std::ostream& os, const auto& r) { write_fscan_csv(os, r); });

    const auto negative = analytic::helix_F_negative_region(m_grid, y_grid);
    const double threshold = analytic::helix_G_threshold(m_grid, y_grid);
    std::printf("cells=%zu F_negative=%zu", rows.size(), negative.cells.size());
    if (!negative.cells.empty()) std::printf(" sup_m=%s", format_double(negative.sup_m).c_str());
    std::printf(" G_threshold_m=%s\n", format_double(threshold).c_str());
    return exit_ok;
}

int cmd_sphere_verify(double eps, int k, std::size_t n, double t_end, std::size_t checkpoints, const FlowOptions& fo,
                      const fs::path& out) {
    if (!(t_end > 0.0 && t_end < 0.5)) throw Error(ErrorCode::invalid_argument, "--t-end must lie in (0, 1/2)");
    FlowConfig config = fo.config();
    config.t_end = t_end;
    config.sphere_radius = 1.0;
    const SampledCurve curve = sphere_perturbed_curve(eps, k, n);
    const nlohmann::json source = {{"preset", "sphere-perturbed"}, {"eps", eps}, {"k", k}, {"n", n}};
    const RunRecord record = run_and_emit(curve, config, out, source);

    const SphereConsistencyRun consistency = run_sphere_consistency(curve, t_end, checkpoints);
    save_table(out / "consistency.csv", consistency.report.rows,
               [](std::ostream& os, const auto& r) { write_consistency_csv(os, r); });

    double residual = 0.0;
    for (const RunRow& r : record.rows) residual = std::max(residual, r.sphere_residual.value_or(0.0));
    std::printf("stop_reason=%s max_sphere_residual=%s max_consistency_deviation=%s\n", record.stop_reason.c_str(),
                format_double(residual).c_str(), format_double(consistency.report.max_deviation).c_str());
    return exit_ok;
}

double json_number(const nlohmann::json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw Error(ErrorCode::io, "run.json: expected a number");
}

int cmd_analyze(const fs::path& dir, const std::string& out_name) {
    std::ifstream in(dir / "run.json");
    if (!in) throw Error(ErrorCode::io, "cannot open " + (dir / "run.json").string());
    nlohmann::json summary;
    try {
        summary = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::io, std::string("run.json: ") + e.what());
    }
    FlowConfig config;
    double T_est = 0.0;
    try {
        const auto& c = summary.at("config");
        config.track_ratios = c.at("track_ratios").get<bool>();
        config.exclusion_band = c.at("exclusion_band").get<std::size_t>();
        if (!c.at("sphere_radius").is_null()) config.sphere_radius = c.at("sphere_radius").get<double>();
        T_est = json_number(summary.at("T_est"));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::io, std::string("run.json: ") + e.what());
    }

    const std::vector<RunRow> recorded = load_run_csv(dir / "run.csv");
    const std::vector<Snapshot> snapshots = load_snapshots(dir);
    const RunRecord analysis = analyze_snapshots(snapshots, config, T_est);
    save_run_csv(dir / out_name, analysis.rows);

    double worst = 0.0;
    const auto compare = [&worst](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
    const auto compare_opt = [&](const std::optional<double>& a, const std::optional<double>& b) {
        if (a.has_value() != b.has_value()) {
            worst = std::numeric_limits<double>::infinity();
        } else if (a) {
            compare(*a, *b);
        }
    };
    for (std::size_t i = 0; i < recorded.size(); ++i) {
        const RunRow& a = recorded[i];
        const RunRow& b = analysis.rows[i];
        compare(a.length, b.length);
        compare(a.k_max, b.k_max);
        compare(a.total_abs_curvature, b.total_abs_curvature);
        compare(a.total_sq_curvature, b.total_sq_curvature);
        compare_opt(a.dl_min, b.dl_min);
        compare_opt(a.dpsi_min, b.dpsi_min);
        compare_opt(a.sphere_residual, b.sphere_residual);
        compare_opt(a.sing_indicator, b.sing_indicator);
    }
    std::printf("snapshots=%zu max_abs_difference=%s\n", snapshots.size(), format_double(worst).c_str());
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Curve shortening flow laboratory"};
    app.require_subcommand(1);

    PresetOptions sim_preset;
    FlowOptions sim_flow;
    std::optional<double> sim_sphere_r0;
    std::string sim_out;
    auto* simulate = app.add_subcommand("simulate", "evolve a preset curve and record diagnostics");
    sim_preset.attach(simulate);
    sim_flow.attach(simulate);
    simulate->add_option("--sphere-r0", sim_sphere_r0, "record the sphere residual for this initial radius");
    simulate->add_option("--out", sim_out, "output directory")->required();

    PresetOptions rf_preset;
    std::string rf_curve, rf_metric = "d_over_l", rf_out;
    std::size_t rf_band = 2;
    auto* ratio = app.add_subcommand("ratio-field", "pair ratio field and its local minima");
    rf_preset.attach(ratio);
    ratio->add_option("--curve", rf_curve, "csf-curve v1 file (overrides --preset)");
    ratio->add_option("--metric", rf_metric, "d_over_l|d_over_psi");
    ratio->add_option("--band", rf_band, "near-diagonal exclusion half-width");
    ratio->add_option("--out", rf_out, "output directory")->required();

    ScanOptions scan;
    std::string scan_out;
    auto* helix = app.add_subcommand("helix-scan", "tabulate F, G and the exact ratio derivative");
    helix->add_option("--m-min", scan.m_min);
    helix->add_option("--m-max", scan.m_max);
    helix->add_option("--m-steps", scan.m_steps);
    helix->add_flag("--log-m", scan.log_m, "logarithmic m grid");
    helix->add_option("--y-min", scan.y_min);
    helix->add_option("--y-max", scan.y_max);
    helix->add_option("--y-steps", scan.y_steps);
    helix->add_option("--out", scan_out, "output directory")->required();

    double sv_eps = 0.2, sv_t_end = 0.4;
    int sv_k = 3;
    std::size_t sv_n = 512, sv_checkpoints = 10;
    FlowOptions sv_flow;
    std::string sv_out;
    auto* sphere = app.add_subcommand("sphere-verify", "sphere conservation and rescaled-flow consistency");
    sphere->add_option("--eps", sv_eps, "perturbation amplitude in (0, 0.5]");
    sphere->add_option("--k", sv_k, "perturbation wave number >= 2");
    sphere->add_option("--n", sv_n, "vertex count");
    sphere->add_option("--t-end", sv_t_end, "end time in (0, 1/2)");
    sphere->add_option("--checkpoints", sv_checkpoints, "consistency comparison times");
    sv_flow.attach(sphere, false);
    sphere->add_option("--out", sv_out, "output directory")->required();

    std::string an_dir, an_out = "analysis.csv";
    auto* analyze = app.add_subcommand("analyze", "recompute diagnostics from saved snapshots");
    analyze->add_option("--dir", an_dir, "run output directory")->required();
    analyze->add_option("--output", an_out, "file name for the recomputed table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return exit_invalid;
    }

    try {
        if (*simulate) return cmd_simulate(sim_preset, sim_flow, sim_sphere_r0, sim_out);
        if (*ratio) return cmd_ratio_field(rf_preset, rf_curve, rf_metric, rf_band, rf_out);
        if (*helix) return cmd_helix_scan(scan, scan_out);
        if (*sphere) return cmd_sphere_verify(sv_eps, sv_k, sv_n, sv_t_end, sv_checkpoints, sv_flow, sv_out);
        if (*analyze) return cmd_analyze(an_dir, an_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code() == ErrorCode::numerical_failure ? exit_numerical : exit_invalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_invalid;
    }
    std::cerr << app.help();
    return exit_invalid;
}
