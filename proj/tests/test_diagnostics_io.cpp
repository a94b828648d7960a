#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "test_support.hpp"

using namespace csf;
using namespace csf::test;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

bool same_bits(const std::optional<double>& a, const std::optional<double>& b) {
    return a.has_value() == b.has_value() && (!a || same_bits(*a, *b));
}

class Scratch {
  public:
    explicit Scratch(const std::string& name)
        : path_(std::filesystem::temp_directory_path() / ("csf_test_" + name + "_" + std::to_string(::getpid()))) {
        std::filesystem::remove_all(path_);
    }
    ~Scratch() { std::filesystem::remove_all(path_); }
    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
};

std::vector<RunRow> random_rows(std::size_t count, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<RunRow> rows(count);
    for (std::size_t k = 0; k < count; ++k) {
        RunRow& r = rows[k];
        r.step = k * 7;
        r.t = std::ldexp(u(rng), -3);
        r.length = 1.0 / 3.0 + u(rng);
        r.k_max = std::exp(10.0 * u(rng));
        r.total_abs_curvature = u(rng) * 1e-300;
        r.total_sq_curvature = u(rng) * 1e300;
        if (k % 2 == 0) r.dl_min = u(rng);
        if (k % 3 == 0) r.dpsi_min = u(rng);
        if (k % 5 == 0) r.sphere_residual = std::nextafter(0.0, 1.0);
        if (k % 7 != 0) r.sing_indicator = u(rng);
    }
    return rows;
}

void expect_rows_identical(const std::vector<RunRow>& a, const std::vector<RunRow>& b) {
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k].step, b[k].step);
        EXPECT_TRUE(same_bits(a[k].t, b[k].t));
        EXPECT_TRUE(same_bits(a[k].length, b[k].length));
        EXPECT_TRUE(same_bits(a[k].k_max, b[k].k_max));
        EXPECT_TRUE(same_bits(a[k].total_abs_curvature, b[k].total_abs_curvature));
        EXPECT_TRUE(same_bits(a[k].total_sq_curvature, b[k].total_sq_curvature));
        EXPECT_TRUE(same_bits(a[k].dl_min, b[k].dl_min));
        EXPECT_TRUE(same_bits(a[k].dpsi_min, b[k].dpsi_min));
        EXPECT_TRUE(same_bits(a[k].sphere_residual, b[k].sphere_residual));
        EXPECT_TRUE(same_bits(a[k].sing_indicator, b[k].sing_indicator));
    }
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST(DiagnosticsIo, RunCsvRoundTripIsBitIdentical) {
    const auto rows = random_rows(200, 1);
    std::stringstream s;
    write_run_csv(s, rows);
    expect_rows_identical(read_run_csv(s), rows);
}

TEST(DiagnosticsIo, MissingColumnsStayEmpty) {
    RunRow r;
    r.step = 3;
    r.t = 0.5;
    std::stringstream s;
    write_run_csv(s, {r});
    std::string header, line;
    std::getline(s, header);
    std::getline(s, line);
    EXPECT_EQ(header, run_csv_header);
    EXPECT_EQ(line.substr(line.size() - 4), ",,,,");
    std::stringstream back(s.str());
    const auto rows = read_run_csv(back);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_FALSE(rows[0].dl_min);
    EXPECT_FALSE(rows[0].sing_indicator);
}

TEST(DiagnosticsIo, MalformedRunCsvIsRejected) {
    std::stringstream bad_header("step,t\n1,2\n");
    EXPECT_THROW(read_run_csv(bad_header), Error);
    std::stringstream short_row(std::string(run_csv_header) + "\n1,2,3\n");
    EXPECT_THROW(read_run_csv(short_row), Error);
    std::stringstream bad_number(std::string(run_csv_header) + "\n1,x,3,4,5,6,,,,\n");
    EXPECT_THROW(read_run_csv(bad_number), Error);
}

TEST(DiagnosticsIo, MinimaCsvRoundTrip) {
    std::vector<MinimumRow> rows{{1, 9, 0.1 / 3.0, 1e-17, 2.0, 3.0, -0.25, -1e200, 4.0 / 7.0},
                                 {4, 5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0}};
    std::stringstream s;
    write_minima_csv(s, rows);
    const auto back = read_minima_csv(s);
    ASSERT_EQ(back.size(), rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        EXPECT_EQ(back[k].i, rows[k].i);
        EXPECT_EQ(back[k].j, rows[k].j);
        for (auto field : {&MinimumRow::value, &MinimumRow::d, &MinimumRow::l, &MinimumRow::psi, &MinimumRow::alpha,
                           &MinimumRow::cond_dl, &MinimumRow::cond_dpsi}) {
            EXPECT_TRUE(same_bits(back[k].*field, rows[k].*field));
        }
    }
}

TEST(DiagnosticsIo, FScanCsvRoundTrip) {
    const auto rows = helix_scan(analytic::log_grid(0.01, 10.0, 7), analytic::linear_grid(0.1, 4.0 * pi, 31));
    ASSERT_EQ(rows.size(), 7u * 31u);
    std::stringstream s;
    write_fscan_csv(s, rows);
    const auto back = read_fscan_csv(s);
    ASSERT_EQ(back.size(), rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        for (auto field : {&FScanRow::m, &FScanRow::y, &FScanRow::F, &FScanRow::G, &FScanRow::exact_derivative}) {
            EXPECT_TRUE(same_bits(back[k].*field, rows[k].*field));
        }
    }
}

TEST(DiagnosticsIo, ConsistencyCsvRoundTrip) {
    const std::vector<ConsistencyRow> rows{{0.1, dilated_time(0.1), 1e-7}, {0.3, dilated_time(0.3), 2.0 / 3.0}};
    std::stringstream s;
    write_consistency_csv(s, rows);
    const auto back = read_consistency_csv(s);
    ASSERT_EQ(back.size(), rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        EXPECT_TRUE(same_bits(back[k].t, rows[k].t));
        EXPECT_TRUE(same_bits(back[k].t_tilde, rows[k].t_tilde));
        EXPECT_TRUE(same_bits(back[k].max_deviation, rows[k].max_deviation));
    }
}

TEST(DiagnosticsIo, RatioFieldRoundTrip) {
    for (RatioMetric metric : {RatioMetric::d_over_l, RatioMetric::d_over_psi}) {
        const RatioField field = ratio_field(ellipse_curve(2.0, 1.0, 40), metric, 3);
        std::stringstream s;
        write_ratio_field(s, field);
        const RatioField back = read_ratio_field(s);
        EXPECT_EQ(back.metric, metric);
        ASSERT_EQ(back.n, field.n);
        for (std::size_t i = 0; i < field.n; ++i) {
            for (std::size_t j = 0; j < field.n; ++j) {
                if (field.excluded(i, j)) {
                    EXPECT_TRUE(std::isnan(back.value(i, j)));
                } else {
                    EXPECT_TRUE(same_bits(back.value(i, j), field.value(i, j)));
                }
            }
        }
    }
    std::stringstream bad("# something else\n");
    EXPECT_THROW(read_ratio_field(bad), Error);
}

TEST(DiagnosticsIo, EmitAndReloadRecord) {
    Scratch dir("emit");
    FlowConfig config;
    config.t_end = 0.05;
    config.record_every = 20;
    const SampledCurve initial = ellipse_curve(2.0, 1.0, 64);
    const RunRecord record = run(initial, config);
    emit_record(record, config, dir.path(), check_total_curvature_gate(initial), {{"preset", "ellipse"}});

    expect_rows_identical(load_run_csv(dir.path() / "run.csv"), record.rows);
    const auto summary = nlohmann::json::parse(slurp(dir.path() / "run.json"));
    EXPECT_EQ(summary["stop_reason"], "t_end");
    EXPECT_EQ(summary["rows"], record.rows.size());
    EXPECT_EQ(summary["source"]["preset"], "ellipse");
    EXPECT_TRUE(summary["total_curvature_gate"]["below_4pi"].get<bool>());
    EXPECT_DOUBLE_EQ(summary["config"]["cfl"].get<double>(), config.cfl);

    const auto snaps = load_snapshots(dir.path());
    ASSERT_EQ(snaps.size(), record.snapshots.size());
    for (std::size_t k = 0; k < snaps.size(); ++k) {
        EXPECT_EQ(snaps[k].step, record.snapshots[k].step);
        ASSERT_EQ(snaps[k].curve.size(), record.snapshots[k].curve.size());
        for (std::size_t i = 0; i < snaps[k].curve.size(); ++i) {
            EXPECT_TRUE(same_bits(snaps[k].curve.points[i].x, record.snapshots[k].curve.points[i].x));
            EXPECT_TRUE(same_bits(snaps[k].curve.points[i].z, record.snapshots[k].curve.points[i].z));
        }
    }

    const RunRecord again = analyze_snapshots(snaps, config, record.T_est);
    ASSERT_EQ(again.rows.size(), record.rows.size());
    for (std::size_t k = 0; k < again.rows.size(); ++k) {
        EXPECT_NEAR(again.rows[k].length, record.rows[k].length, 1e-12);
        EXPECT_NEAR(again.rows[k].total_sq_curvature, record.rows[k].total_sq_curvature, 1e-12);
        ASSERT_TRUE(again.rows[k].dl_min && record.rows[k].dl_min);
        EXPECT_NEAR(*again.rows[k].dl_min, *record.rows[k].dl_min, 1e-12);
        EXPECT_EQ(again.rows[k].sing_indicator.has_value(), record.rows[k].sing_indicator.has_value());
    }
}

TEST(DiagnosticsIo, TwoRowRecordRoundTrips) {
    Scratch dir("tworow");
    FlowConfig config;
    config.t_end = 1e-4;
    config.record_every = 1000;
    const RunRecord record = run(circle_curve(1.0, 32), config);
    ASSERT_EQ(record.rows.size(), 2u);
    emit_record(record, config, dir.path(), std::nullopt);
    expect_rows_identical(load_run_csv(dir.path() / "run.csv"), record.rows);
    EXPECT_TRUE(nlohmann::json::parse(slurp(dir.path() / "run.json"))["total_curvature_gate"].is_null());
}

TEST(DiagnosticsIo, LargeRecordEmitsQuickly) {
    Scratch dir("large");
    RunRecord record;
    record.rows = random_rows(10000, 2);
    record.stop_reason = "t_end";
    const auto start = std::chrono::steady_clock::now();
    emit_record(record, FlowConfig{}, dir.path(), std::nullopt);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EXPECT_LT(seconds, 1.0);
    expect_rows_identical(load_run_csv(dir.path() / "run.csv"), record.rows);
}

TEST(DiagnosticsIo, UnwritableDirectoryIsAnIoError) {
    Scratch dir("blocked");
    {
        std::ofstream blocker(dir.path());
        blocker << "file, not a directory\n";
    }
    RunRecord record;
    record.rows = random_rows(2, 3);
    try {
        emit_record(record, FlowConfig{}, dir.path() / "sub", std::nullopt);
        FAIL() << "expected io error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::io);
    }
    EXPECT_THROW(load_run_csv(dir.path() / "missing.csv"), Error);
    EXPECT_THROW(emit_record(RunRecord{}, FlowConfig{}, dir.path(), std::nullopt), Error);
}

TEST(DiagnosticsIo, TotalCurvatureGate) {
    const std::size_t n = 256;
    const double polygon = 2.0 * static_cast<double>(n) * std::sin(pi / static_cast<double>(n));
    const CurvatureGate circle = check_total_curvature_gate(circle_curve(1.0, n));
    EXPECT_NEAR(circle.value, polygon, 1e-12);
    EXPECT_TRUE(circle.satisfied);

    // The doubled circle sits exactly at 4 pi; the discrete value approaches it at second order.
    const double gap_coarse = 4.0 * pi - check_total_curvature_gate(doubled_circle(n)).value;
    const double gap_fine = 4.0 * pi - check_total_curvature_gate(doubled_circle(2 * n)).value;
    EXPECT_NEAR(gap_coarse, 4.0 * pi - 2.0 * polygon, 1e-12);
    EXPECT_NEAR(gap_coarse / gap_fine, 4.0, 1e-3);

    const SampledCurve trefoil = sample_equal_chord(
        [](double u) {
            return Vec3{std::sin(u) + 2.0 * std::sin(2.0 * u), std::cos(u) - 2.0 * std::cos(2.0 * u), -std::sin(3.0 * u)};
        },
        1024, Topology::closed);
    const CurvatureGate knotted = check_total_curvature_gate(trefoil);
    EXPECT_GT(knotted.value, 4.0 * pi);
    EXPECT_FALSE(knotted.satisfied);

    const double oracle = simpson([](double u) { return cos2u_curvature(u) * cos2u_speed(u); }, 0.0, 2.0 * pi, 20000);
    const CurvatureGate bumpy = check_total_curvature_gate(cos2u_curve(2048));
    EXPECT_NEAR(bumpy.value, oracle, 1e-4);
    EXPECT_EQ(bumpy.satisfied, oracle < 4.0 * pi);

    EXPECT_THROW(check_total_curvature_gate(helix_curve(1.0, 1.0, 64)), Error);
}

TEST(DiagnosticsIo, PresetsValidate) {
    for (PresetKind kind : {PresetKind::circle, PresetKind::ellipse, PresetKind::helix, PresetKind::graph_curve,
                            PresetKind::cos2u_curve, PresetKind::sphere_perturbed}) {
        Preset p = default_preset(kind);
        p.n = 64;
        const SampledCurve c = make_preset(p);
        EXPECT_EQ(c.size(), 64u) << to_string(kind);
        EXPECT_NO_THROW(validate(c));
        EXPECT_EQ(parse_preset(to_string(kind)), kind);
    }
    EXPECT_THROW(parse_preset("square"), Error);
    EXPECT_THROW(sphere_perturbed_curve(0.0, 3, 64), Error);
    EXPECT_THROW(circle_curve(1.0, 2), Error);
}

TEST(DiagnosticsIo, CustomFilePreset) {
    Scratch dir("custom");
    std::filesystem::create_directories(dir.path());
    const SampledCurve c = helix_curve(1.0, 0.5, 48);
    save_curve(dir.path() / "h.curve", c);
    Preset p = default_preset(PresetKind::custom_file);
    p.file = dir.path() / "h.curve";
    const SampledCurve back = make_preset(p);
    EXPECT_EQ(back.topology, Topology::periodic);
    ASSERT_EQ(back.size(), c.size());
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_TRUE(same_bits(back.points[i].y, c.points[i].y));
    p.file = dir.path() / "nope.curve";
    EXPECT_THROW(make_preset(p), Error);
}

TEST(DiagnosticsIo, RunCsvIsIndependentOfThreadCount) {
    FlowConfig config;
    config.t_end = 0.05;
    config.record_every = 25;
    std::vector<std::string> outputs;
    for (const char* threads : {"1", "3", "8", "1"}) {
        ::setenv("CSF_THREADS", threads, 1);
        std::stringstream s;
        write_run_csv(s, run(cos2u_curve(96), config).rows);
        outputs.push_back(s.str());
    }
    ::unsetenv("CSF_THREADS");
    for (const std::string& o : outputs) EXPECT_EQ(o, outputs.front());
}
