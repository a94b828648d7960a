#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "csf/chord_arc.hpp"
#include "csf/flow.hpp"
#include "csf/resample.hpp"
#include "csf/sphere.hpp"

namespace csf {

struct FlowConfig {
    double cfl = 0.25;
    std::size_t remesh_every = 200;
    std::size_t record_every = 50;
    /// Unset means run until a length or resolution criterion stops the flow.
    std::optional<double> t_end;
    double stop_length_fraction = 0.05;
    /// Stop once k_max * min(ds) exceeds this.
    double stop_curvature_resolution = 0.5;
    Scheme scheme = Scheme::semi_implicit;
    /// Initial sphere radius; when set, rows carry the sphere residual.
    std::optional<double> sphere_radius;
    bool track_ratios = true;
    std::size_t exclusion_band = 2;
    bool keep_snapshots = true;
    std::size_t max_steps = 50'000'000;

    void validate() const {
        const auto fail = [](const std::string& what) { throw Error(ErrorCode::invalid_argument, what); };
        if (!(cfl > 0.0 && cfl <= 1.0)) fail("cfl must lie in (0, 1]");
        if (remesh_every == 0) fail("remesh_every must be positive");
        if (record_every == 0) fail("record_every must be positive");
        if (t_end && !(*t_end > 0.0)) fail("t_end must be positive");
        if (!(stop_length_fraction > 0.0 && stop_length_fraction < 1.0)) fail("stop_length_fraction must lie in (0, 1)");
        if (!(stop_curvature_resolution > 0.0)) fail("stop_curvature_resolution must be positive");
        if (sphere_radius && !(*sphere_radius > 0.0)) fail("sphere radius must be positive");
    }
};

/// Time step used by `run`: cfl * h^2 / 2 explicit, cfl * h^2 semi-implicit.
inline double adaptive_step(const CurveGeometry& g, const FlowConfig& config) {
    const double h = min_segment(g);
    return config.scheme == Scheme::explicit_euler ? 0.5 * config.cfl * h * h : config.cfl * h * h;
}

struct RunRow {
    std::size_t step = 0;
    double t = 0.0;
    double length = 0.0;
    double k_max = 0.0;
    double total_abs_curvature = 0.0;
    double total_sq_curvature = 0.0;
    std::optional<double> dl_min;
    std::optional<double> dpsi_min;
    std::optional<double> sphere_residual;
    std::optional<double> sing_indicator;
};

struct RunRecord {
    std::vector<RunRow> rows;
    /// Extrapolated extinction time; +inf when the length does not decay.
    double T_est = std::numeric_limits<double>::infinity();
    std::string stop_reason;
    std::vector<Snapshot> snapshots;
};

/// A numerical failure during `run`, carrying everything recorded before it.
class RunFailure : public Error {
  public:
    RunFailure(const std::string& what, RunRecord partial)
        : Error(ErrorCode::numerical_failure, what), partial_(std::move(partial)) {}

    const RunRecord& partial() const { return partial_; }

  private:
    RunRecord partial_;
};

/// Diagnostics row for one flow state (no singularity indicator yet).
inline RunRow diagnose(const SampledCurve& curve, const CurveGeometry& g, std::size_t step, double t,
                       const FlowConfig& config) {
    RunRow row;
    row.step = step;
    row.t = t;
    row.length = g.total_length;
    row.k_max = max_curvature(g);
    row.total_abs_curvature = total_absolute_curvature(g);
    row.total_sq_curvature = total_squared_curvature(g);
    if (config.track_ratios) {
        const RatioMinima mins = ratio_minima(curve, config.exclusion_band);
        row.dl_min = mins.d_over_l;
        row.dpsi_min = mins.d_over_psi;
    }
    if (config.sphere_radius) {
        const double r0 = *config.sphere_radius;
        if (r0 * r0 - 2.0 * t > 0.0) row.sphere_residual = sphere_residual(curve, t, r0);
    }
    return row;
}

/// Least-squares line through (t, L^2) over the last `window` rows, extrapolated
/// to L^2 = 0. Exact for shrinking circles.
inline double estimate_extinction_time(const std::vector<RunRow>& rows, std::size_t window = 8) {
    if (rows.size() < 2) return std::numeric_limits<double>::infinity();
    const std::size_t count = std::min(window, rows.size());
    const std::size_t first = rows.size() - count;
    double mt = 0.0, my = 0.0;
    for (std::size_t k = first; k < rows.size(); ++k) {
        mt += rows[k].t;
        my += rows[k].length * rows[k].length;
    }
    mt /= static_cast<double>(count);
    my /= static_cast<double>(count);
    double stt = 0.0, sty = 0.0;
    for (std::size_t k = first; k < rows.size(); ++k) {
        const double dt = rows[k].t - mt;
        stt += dt * dt;
        sty += dt * (rows[k].length * rows[k].length - my);
    }
    if (stt == 0.0) return std::numeric_limits<double>::infinity();
    const double slope = sty / stt;
    if (!(slope < 0.0)) return std::numeric_limits<double>::infinity();
    return mt - my / slope;
}

/// k_max^2 (T_est - t) per row. Bounded tails point to Type I, growing ones to Type II.
inline std::vector<double> singularity_indicator(const RunRecord& record) {
    if (record.rows.empty()) throw Error(ErrorCode::indicator_undefined, "empty record");
    std::vector<double> out;
    out.reserve(record.rows.size());
    if (std::isinf(record.T_est)) {
        for (const RunRow& row : record.rows) {
            // k L at round-off level counts as flat.
            if (row.k_max * row.length > 1e-12) {
                throw Error(ErrorCode::indicator_undefined, "no finite extinction time estimate");
            }
            out.push_back(0.0);
        }
        return out;
    }
    if (!(record.T_est > record.rows.back().t)) {
        throw Error(ErrorCode::indicator_undefined, "T_est " + std::to_string(record.T_est) +
                                                        " is not beyond the last recorded time " +
                                                        std::to_string(record.rows.back().t));
    }
    for (const RunRow& row : record.rows) out.push_back(row.k_max * row.k_max * (record.T_est - row.t));
    return out;
}

namespace detail {

inline void finish_record(RunRecord& record) {
    record.T_est = estimate_extinction_time(record.rows);
    try {
        const std::vector<double> indicator = singularity_indicator(record);
        for (std::size_t k = 0; k < record.rows.size(); ++k) record.rows[k].sing_indicator = indicator[k];
    } catch (const Error&) {
        // Leave the column empty when the indicator is undefined.
    }
}

}  // namespace detail

/// Integrates the flow from `initial` under `config`, recording diagnostics
/// every `record_every` steps plus the first and last state.
inline RunRecord run(const SampledCurve& initial, const FlowConfig& config) {
    config.validate();
    FlowState state = FlowState::start(initial);
    const std::size_t n = initial.size();
    const double initial_length = state.geometry.total_length;

    RunRecord record;
    const auto capture = [&] {
        if (!record.rows.empty() && record.rows.back().step == state.step) return;
        record.rows.push_back(diagnose(state.curve, state.geometry, state.step, state.t, config));
        if (config.keep_snapshots) record.snapshots.push_back({state.step, state.t, state.curve});
    };
    capture();

    while (true) {
        if (config.t_end && state.t >= *config.t_end) {
            record.stop_reason = "t_end";
            break;
        }
        if (state.step >= config.max_steps) {
            record.stop_reason = "step_limit";
            break;
        }
        double dt = adaptive_step(state.geometry, config);
        bool last = false;
        if (config.t_end && dt >= *config.t_end - state.t) {
            dt = *config.t_end - state.t;
            last = true;
        }
        try {
            state = step(state, dt, config.scheme);
            if (last) state.t = *config.t_end;
            if (state.step % config.remesh_every == 0) {
                state.curve = resample_uniform(state.curve, n);
                state.geometry = compute_geometry(state.curve);
            }
        } catch (const Error& e) {
            if (e.code() != ErrorCode::numerical_failure && e.code() != ErrorCode::invalid_curve) throw;
            detail::finish_record(record);
            record.stop_reason = "numerical_failure";
            throw RunFailure(e.what(), std::move(record));
        }

        std::string reason;
        if (last) {
            reason = "t_end";
        } else if (state.geometry.total_length < config.stop_length_fraction * initial_length) {
            reason = "length_fraction";
        } else if (max_curvature(state.geometry) * *std::min_element(state.geometry.ds.begin(), state.geometry.ds.end()) >
                   config.stop_curvature_resolution) {
            reason = "resolution";
        }
        if (!reason.empty() || state.step % config.record_every == 0) capture();
        if (!reason.empty()) {
            record.stop_reason = reason;
            break;
        }
    }
    detail::finish_record(record);
    return record;
}

/// Diagnostics recomputed from saved snapshots, with the same code path as `run`.
inline RunRecord analyze_snapshots(const std::vector<Snapshot>& snapshots, const FlowConfig& config, double T_est) {
    RunRecord record;
    for (const Snapshot& snap : snapshots) {
        record.rows.push_back(diagnose(snap.curve, compute_geometry(snap.curve), snap.step, snap.t, config));
    }
    record.T_est = T_est;
    try {
        const std::vector<double> indicator = singularity_indicator(record);
        for (std::size_t k = 0; k < record.rows.size(); ++k) record.rows[k].sing_indicator = indicator[k];
    } catch (const Error&) {
    }
    return record;
}

}  // namespace csf
