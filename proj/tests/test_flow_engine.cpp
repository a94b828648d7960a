#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace csf;
using namespace csf::test;

namespace {

SampledCurve straight_segment(std::size_t n) {
    SampledCurve c;
    c.topology = Topology::open;
    // Collinear but unevenly spaced.
    for (std::size_t k = 0; k < n; ++k) {
        const double s = static_cast<double>(k) + 0.2 * std::sin(static_cast<double>(k));
        c.points.push_back(Vec3{0.5, -0.2, 0.1} * s);
    }
    return c;
}

double mean_radius(const SampledCurve& c) {
    double r = 0.0;
    for (const Vec3& p : c.points) r += norm(p);
    return r / static_cast<double>(c.size());
}

// Dense Gaussian elimination with partial pivoting on one coordinate.
std::vector<double> dense_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
        }
        std::swap(a[c], a[p]);
        std::swap(b[c], b[p]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t r = n; r-- > 0;) {
        double s = b[r];
        for (std::size_t k = r + 1; k < n; ++k) s -= a[r][k] * x[k];
        x[r] = s / a[r][r];
    }
    return x;
}

}  // namespace

TEST(FlowEngine, StraightSegmentIsFixedByBothSchemes) {
    const SampledCurve line = straight_segment(12);
    FlowState s = FlowState::start(line);
    const double bound = explicit_step_bound(s.geometry);
    const FlowState e = step_explicit(s, bound);
    const FlowState i = step_semi_implicit(s, 10.0);
    for (std::size_t k = 0; k < line.size(); ++k) {
        EXPECT_LT(distance(e.curve.points[k], line.points[k]), 1e-12);
        EXPECT_LT(distance(i.curve.points[k], line.points[k]), 1e-12);
    }
    EXPECT_EQ(e.step, 1u);
    EXPECT_DOUBLE_EQ(i.t, 10.0);
}

TEST(FlowEngine, ExplicitCircleStepShrinksRadiusByDt) {
    FlowState s = FlowState::start(circle_curve(1.0, 256));
    const double dt = 0.5 * explicit_step_bound(s.geometry);
    const FlowState next = step_explicit(s, dt);
    for (const Vec3& p : next.curve.points) EXPECT_NEAR(norm(p), 1.0 - dt, dt * dt + 1e-4 * dt);
    EXPECT_DOUBLE_EQ(next.t, dt);
}

TEST(FlowEngine, HelixStepMovesRadiallyInward) {
    const SampledCurve helix = helix_curve(1.0, 1.0, 512);
    FlowState s = FlowState::start(helix);
    const FlowState next = step_explicit(s, explicit_step_bound(s.geometry));
    for (std::size_t i = 0; i < helix.size(); ++i) {
        const Vec3 move = next.curve.points[i] - helix.points[i];
        EXPECT_LT(std::abs(move.z), 1e-10);
        const Vec3 radial{helix.points[i].x, helix.points[i].y, 0.0};
        EXPECT_LT(dot(move, radial), 0.0);
        EXPECT_LT(norm(cross(move, radial)), 1e-10 * norm(move) + 1e-15);
    }
}

TEST(FlowEngine, ExplicitStepRejectsUnstableOrNonPositiveDt) {
    FlowState s = FlowState::start(circle_curve(1.0, 64));
    const double bound = explicit_step_bound(s.geometry);
    for (double dt : {2.0 * bound, 0.0, -1e-3}) {
        try {
            step_explicit(s, dt);
            FAIL() << dt;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
        }
    }
    EXPECT_THROW(step_semi_implicit(s, 0.0), Error);
}

TEST(FlowEngine, SemiImplicitCircleFollowsExactRadius) {
    FlowState s = FlowState::start(circle_curve(1.0, 256));
    for (int k = 0; k < 100; ++k) s = step_semi_implicit(s, 1e-3);
    EXPECT_NEAR(s.t, 0.1, 1e-14);
    EXPECT_NEAR(mean_radius(s.curve), analytic::shrinking_circle(1.0, s.t), 5e-3);
    for (const Vec3& p : s.curve.points) EXPECT_NEAR(norm(p), std::sqrt(0.8), 5e-3);
}

TEST(FlowEngine, SchemesAgreeAtMatchedAccuracy) {
    FlowState e = FlowState::start(ellipse_curve(1.5, 1.0, 128));
    FlowState i = e;
    const double t_end = 0.1;
    while (e.t < t_end) e = step_explicit(e, std::min(0.5 * explicit_step_bound(e.geometry), t_end - e.t));
    while (i.t < t_end) i = step_semi_implicit(i, std::min(0.5 * explicit_step_bound(i.geometry), t_end - i.t));
    for (std::size_t k = 0; k < e.curve.size(); ++k) EXPECT_LT(distance(e.curve.points[k], i.curve.points[k]), 1e-3);
}

TEST(FlowEngine, SemiDiscreteLengthLaw) {
    for (const SampledCurve& c : {ellipse_curve(2.0, 1.0, 256), cos2u_curve(256), graph_curve(1.0, 0.5, 0.1, 256)}) {
        const FlowState s = FlowState::start(c);
        const double dt = 1e-3 * explicit_step_bound(s.geometry);
        const FlowState next = step_explicit(s, dt);
        const double rate = (next.geometry.total_length - s.geometry.total_length) / dt;
        const double k2 = total_squared_curvature(s.geometry);
        EXPECT_NEAR(rate / k2, -1.0, 1e-3);
    }
}

TEST(FlowEngine, CyclicSolveMatchesDenseElimination) {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> off(-1.0, -0.1);
    const std::size_t n = 11;
    std::vector<double> lower(n), diag(n), upper(n);
    std::vector<Vec3> rhs(n);
    std::vector<std::vector<double>> dense(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        lower[i] = off(rng);
        upper[i] = off(rng);
        diag[i] = 1.0 - lower[i] - upper[i];
        rhs[i] = {off(rng), off(rng), off(rng)};
        dense[i][i] = diag[i];
        dense[i][(i + n - 1) % n] += lower[i];
        dense[i][(i + 1) % n] += upper[i];
    }
    const std::vector<Vec3> x = detail::solve_cyclic(lower, diag, upper, rhs);
    std::vector<double> bx(n);
    for (std::size_t i = 0; i < n; ++i) bx[i] = rhs[i].x;
    const std::vector<double> oracle = dense_solve(dense, bx);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(x[i].x, oracle[i], 1e-12);
}

TEST(FlowEngine, RunCircleToFixedTime) {
    FlowConfig config;
    config.t_end = 0.4;
    config.track_ratios = false;
    const RunRecord r = run(circle_curve(1.0, 256), config);
    EXPECT_EQ(r.stop_reason, "t_end");
    EXPECT_EQ(r.rows.back().t, 0.4);
    EXPECT_NEAR(r.rows.back().length / (2.0 * pi * std::sqrt(0.2)), 1.0, 1e-2);
    for (std::size_t k = 1; k < r.rows.size(); ++k) {
        EXPECT_GT(r.rows[k].t, r.rows[k - 1].t);
        EXPECT_LT(r.rows[k].length, r.rows[k - 1].length);
    }
    EXPECT_EQ(r.snapshots.size(), r.rows.size());
}

TEST(FlowEngine, RunCircleToExtinctionEstimatesT) {
    FlowConfig config;
    config.track_ratios = false;
    const RunRecord r = run(circle_curve(1.0, 256), config);
    EXPECT_EQ(r.stop_reason, "length_fraction");
    EXPECT_NEAR(r.T_est, 0.5, 2e-2);
    // k^2 (T - t) = (r0^2 - 2t)^-1 (r0^2/2 - t) = 1/2 for the shrinking circle.
    const std::vector<double> ind = singularity_indicator(r);
    for (std::size_t k = ind.size() / 2; k < ind.size(); ++k) {
        EXPECT_GE(ind[k], 0.4);
        EXPECT_LE(ind[k], 0.625);
    }
}

TEST(FlowEngine, EllipseTotalCurvatureNonIncreasingAndIndicatorBounded) {
    FlowConfig config;
    config.track_ratios = false;
    const RunRecord r = run(ellipse_curve(2.0, 1.0, 256), config);
    for (std::size_t k = 1; k < r.rows.size(); ++k) {
        EXPECT_LE(r.rows[k].total_abs_curvature, r.rows[k - 1].total_abs_curvature + 1e-3);
        EXPECT_LT(r.rows[k].length, r.rows[k - 1].length);
    }
    const std::vector<double> ind = singularity_indicator(r);
    double tail_max = 0.0;
    for (std::size_t k = ind.size() / 2; k < ind.size(); ++k) tail_max = std::max(tail_max, ind[k]);
    EXPECT_LT(tail_max, 1.0);
    EXPECT_NEAR(ind.back(), 0.5, 0.1);
}

TEST(FlowEngine, IndicatorOfStraightSegmentIsZero) {
    FlowConfig config;
    config.t_end = 1.0;
    config.record_every = 10;
    const RunRecord r = run(straight_segment(20), config);
    EXPECT_TRUE(std::isinf(r.T_est));
    for (double v : singularity_indicator(r)) EXPECT_EQ(v, 0.0);
    EXPECT_FALSE(r.rows.back().dl_min.has_value());
}

TEST(FlowEngine, IndicatorUndefinedWhenEstimateIsStale) {
    RunRecord r;
    r.rows.resize(2);
    r.rows[0].t = 0.0;
    r.rows[1].t = 0.3;
    r.rows[0].k_max = r.rows[1].k_max = 1.0;
    r.rows[0].length = r.rows[1].length = 1.0;
    r.T_est = 0.3;
    try {
        singularity_indicator(r);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::indicator_undefined);
    }
    r.T_est = std::numeric_limits<double>::infinity();
    EXPECT_THROW(singularity_indicator(r), Error);
}

TEST(FlowEngine, ExtinctionFitIsExactForLinearSquaredLength) {
    std::vector<RunRow> rows(12);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        rows[k].t = 0.03 * static_cast<double>(k);
        rows[k].length = std::sqrt(4.0 * (0.7 - rows[k].t));
    }
    EXPECT_NEAR(estimate_extinction_time(rows), 0.7, 1e-12);
}

TEST(FlowEngine, HelixKeepsItsShapeAndFollowsRadiusOde) {
    FlowConfig config;
    config.t_end = 0.2;
    config.track_ratios = false;
    const RunRecord r = run(helix_curve(1.0, 1.0, 256), config);
    for (const Snapshot& s : r.snapshots) {
        double lo = 1e9, hi = 0.0;
        for (const Vec3& p : s.curve.points) {
            lo = std::min(lo, std::hypot(p.x, p.y));
            hi = std::max(hi, std::hypot(p.x, p.y));
        }
        EXPECT_LT((hi - lo) / hi, 1e-4);
        EXPECT_NEAR(0.5 * (lo + hi), analytic::helix_radius_ode(1.0, 1.0, s.t), 1e-3);
    }
}

TEST(FlowEngine, RunIsDeterministic) {
    FlowConfig config;
    config.t_end = 0.05;
    const RunRecord a = run(ellipse_curve(2.0, 1.0, 128), config);
    const RunRecord b = run(ellipse_curve(2.0, 1.0, 128), config);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
        EXPECT_EQ(a.rows[k].t, b.rows[k].t);
        EXPECT_EQ(a.rows[k].length, b.rows[k].length);
        EXPECT_EQ(a.rows[k].dl_min, b.rows[k].dl_min);
        EXPECT_EQ(a.rows[k].dpsi_min, b.rows[k].dpsi_min);
    }
}

TEST(FlowEngine, ConfigValidation) {
    FlowConfig bad;
    bad.cfl = 1.5;
    EXPECT_THROW(bad.validate(), Error);
    bad = FlowConfig{};
    bad.stop_length_fraction = 1.0;
    EXPECT_THROW(bad.validate(), Error);
    bad = FlowConfig{};
    bad.record_every = 0;
    EXPECT_THROW(run(circle_curve(1.0, 32), bad), Error);
    EXPECT_EQ(parse_scheme("explicit"), Scheme::explicit_euler);
    EXPECT_THROW(parse_scheme("rk4"), Error);
}

TEST(FlowEngine, ResolutionStopIsReported) {
    FlowConfig config;
    config.track_ratios = false;
    config.stop_curvature_resolution = 0.05;
    const RunRecord r = run(circle_curve(1.0, 64), config);
    EXPECT_EQ(r.stop_reason, "resolution");
}
