#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "csf/error.hpp"

namespace csf::analytic {

struct HelixParams {
    double a = 1.0;
    double b = 1.0;

    double m() const { return (b * b) / (a * a); }
};

struct HelixCurvature {
    double k = 0.0;
    double tau = 0.0;
};

inline HelixCurvature helix_geometry(const HelixParams& p) {
    if (!(p.a > 0.0)) throw Error(ErrorCode::invalid_argument, "helix radius must be positive");
    const double s = p.a * p.a + p.b * p.b;
    return {p.a / s, p.b / s};
}

/// 2 - 2 cos(y), via the half-angle form so small y keeps full precision.
inline double one_minus_cos2(double y) {
    const double h = std::sin(0.5 * y);
    return 4.0 * h * h;
}

/// (2 - 2 cos y) / y^2 = sinc^2(y/2); equals 1 at y = 0.
inline double chord_ratio2(double y) {
    if (y == 0.0) return 1.0;
    const double h = 0.5 * y;
    const double s = std::sin(h) / h;
    return s * s;
}

/// cos(y) - (1 - y^2/2), nonnegative for all y. Series below 0.1 where the
/// direct form cancels.
inline double exact_derivative_factor(double y) {
    if (std::abs(y) < 0.1) {
        const double y2 = y * y;
        const double y4 = y2 * y2;
        return y4 / 24.0 - y4 * y2 / 720.0 + y4 * y4 / 40320.0 - y4 * y4 * y2 / 3628800.0;
    }
    return 0.5 * (y * y - one_minus_cos2(y));
}

/// F(y, m) for a helix pair at parameter separation y, m = b^2/a^2.
inline double helix_F(double y, double m) {
    if (!(y > 0.0)) throw Error(ErrorCode::domain, "helix_F needs y > 0");
    const double c = one_minus_cos2(y);
    const double p = 1.0 + m;
    return -4.0 + c / p + 4.0 * m / p + 4.0 * chord_ratio2(y) / p + (c + m * y * y) / (p * p);
}

/// G = (1+m)^2 F.
inline double helix_G(double y, double m) {
    if (!(y > 0.0)) throw Error(ErrorCode::domain, "helix_G needs y > 0");
    const double c = one_minus_cos2(y);
    const double p = 1.0 + m;
    return -4.0 * p * p + p * c + 4.0 * m * p + p * 4.0 * chord_ratio2(y) + c + m * y * y;
}

/// Sum over n >= 2 of (-1)^n y^(2n) / (2n+2)!.
///
/// Below y = 1 the series is summed through n = 8; its terms decrease
/// monotonically there, so the alternating remainder is below y^18/20! < 1e-18.
/// Above that the sum is evaluated from its closed form (4c/y^2 - 4 + y^2/3)/8
/// with c = 2 - 2cos y, where the cancellation is harmless.
inline double helix_G_tail(double y) {
    if (std::abs(y) < 1.0) {
        const double y2 = y * y;
        double term = y2 * y2;  // y^(2n) for n = 2
        double fact = 720.0;    // (2n+2)! for n = 2
        double sum = 0.0;
        for (int n = 2; n <= 8; ++n) {
            sum += (n % 2 == 0 ? term : -term) / fact;
            term *= y2;
            fact *= static_cast<double>((2 * n + 3) * (2 * n + 4));
        }
        return sum;
    }
    return (4.0 * chord_ratio2(y) - 4.0 + y * y / 3.0) / 8.0;
}

/// (m - (1+m)/3) y^2 + 8(1+m) sum_{n>=2} (-1)^n y^(2n)/(2n+2)!, a lower bound for G.
inline double helix_G_lower_bound(double y, double m) {
    if (!(y > 0.0)) throw Error(ErrorCode::domain, "helix_G_lower_bound needs y > 0");
    return (m - (1.0 + m) / 3.0) * y * y + 8.0 * (1.0 + m) * helix_G_tail(y);
}

/// Coefficient of y^2 in the lower bound; nonnegative exactly when m >= 1/2.
inline double helix_G_leading_coefficient(double m) { return m - (1.0 + m) / 3.0; }

struct HelixEvaluation {
    double y = 0.0;
    double m = 0.0;
    double F = 0.0;
    double G = 0.0;
    double exact_derivative_factor = 0.0;
};

inline HelixEvaluation evaluate_helix(double y, double m) {
    return {y, m, helix_F(y, m), helix_G(y, m), analytic::exact_derivative_factor(y)};
}

/// d/dt (d/l) at a helix pair with parameter separation y:
/// 2m / (l d (1+m)) * a^2/(a^2+b^2) * (cos y - 1 + y^2/2).
inline double helix_exact_ratio_derivative(const HelixParams& p, double y) {
    if (!(p.a > 0.0)) throw Error(ErrorCode::invalid_argument, "helix radius must be positive");
    if (!(y > 0.0)) throw Error(ErrorCode::domain, "helix derivative needs y > 0");
    const double s = p.a * p.a + p.b * p.b;
    const double m = p.m();
    const double l = y * std::sqrt(s);
    const double d = std::sqrt(p.a * p.a * one_minus_cos2(y) + p.b * p.b * y * y);
    return 2.0 * m / (l * d * (1.0 + m)) * (p.a * p.a / s) * exact_derivative_factor(y);
}

/// Cells of a (m, y) scan where F < threshold.
struct NegativeRegion {
    struct Cell {
        double m = 0.0;
        double y = 0.0;
        double F = 0.0;
    };
    std::vector<Cell> cells;
    /// Largest m among negative cells; NaN when none.
    double sup_m = std::numeric_limits<double>::quiet_NaN();
    double min_F = std::numeric_limits<double>::infinity();
};

inline NegativeRegion helix_F_negative_region(const std::vector<double>& m_grid, const std::vector<double>& y_grid,
                                              double threshold = -1e-6) {
    NegativeRegion out;
    for (double m : m_grid) {
        for (double y : y_grid) {
            if (!(y > 0.0) || !std::isfinite(y) || !std::isfinite(m)) {
                throw Error(ErrorCode::invalid_argument, "scan grids must be finite and positive");
            }
            const double f = helix_F(y, m);
            out.min_F = std::min(out.min_F, f);
            if (f < threshold) {
                out.cells.push_back({m, y, f});
                if (std::isnan(out.sup_m) || m > out.sup_m) out.sup_m = m;
            }
        }
    }
    return out;
}

/// Smallest m of an ascending grid from which G(y, m) >= 0 holds on every y of
/// the y grid, for that m and every larger grid m. NaN when even the last m fails.
inline double helix_G_threshold(const std::vector<double>& m_grid, const std::vector<double>& y_grid) {
    double threshold = std::numeric_limits<double>::quiet_NaN();
    for (auto it = m_grid.rbegin(); it != m_grid.rend(); ++it) {
        bool ok = true;
        for (double y : y_grid) {
            if (helix_G(y, *it) < 0.0) {
                ok = false;
                break;
            }
        }
        if (!ok) break;
        threshold = *it;
    }
    return threshold;
}

inline std::vector<double> linear_grid(double lo, double hi, std::size_t steps) {
    std::vector<double> out(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        out[k] = steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(steps - 1);
    }
    return out;
}

inline std::vector<double> log_grid(double lo, double hi, std::size_t steps) {
    if (!(lo > 0.0)) throw Error(ErrorCode::invalid_argument, "log grid needs a positive lower end");
    std::vector<double> out(steps);
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (std::size_t k = 0; k < steps; ++k) {
        out[k] = steps == 1 ? lo : std::exp(a + (b - a) * static_cast<double>(k) / static_cast<double>(steps - 1));
    }
    return out;
}

/// Sampled description of gamma(u) = (f(u), g(u), b u) with analytic derivatives.
struct GraphCurveSpec {
    std::vector<double> u;
    std::vector<double> f, fp, fpp;
    std::vector<double> g, gp, gpp;
    double a = 0.0;
    double A = 0.0;
    double b = 0.0;
    /// max |f'^2 + g'^2 - a^2| over the grid.
    double speed_violation = 0.0;

    bool speed_identity_holds(double tol = 1e-8) const { return speed_violation <= tol; }

    /// Grid index of `value`; throws when it is not a grid point.
    std::size_t index_of(double value) const {
        const auto it = std::lower_bound(u.begin(), u.end(), value - 1e-12 * std::max(1.0, std::abs(value)));
        if (it == u.end() || std::abs(*it - value) > 1e-12 * std::max(1.0, std::abs(value))) {
            throw Error(ErrorCode::invalid_argument, "u = " + std::to_string(value) + " is not on the grid");
        }
        return static_cast<std::size_t>(it - u.begin());
    }
};

using ScalarFn = std::function<double(double)>;

/// Samples f, g and derivatives on `u_grid` (ascending). a^2 is the mean of
/// f'^2 + g'^2 and A the max of f''^2 + g''^2 on the grid; any departure from a
/// constant speed is recorded in `speed_violation`.
inline GraphCurveSpec make_graph_curve(const ScalarFn& f, const ScalarFn& fp, const ScalarFn& fpp, const ScalarFn& g,
                                       const ScalarFn& gp, const ScalarFn& gpp, double b,
                                       const std::vector<double>& u_grid) {
    if (u_grid.size() < 2) throw Error(ErrorCode::invalid_argument, "graph curve grid needs at least 2 points");
    GraphCurveSpec graph;
    graph.u = u_grid;
    graph.b = b;
    double speed_sum = 0.0;
    for (double u : u_grid) {
        graph.f.push_back(f(u));
        graph.fp.push_back(fp(u));
        graph.fpp.push_back(fpp(u));
        graph.g.push_back(g(u));
        graph.gp.push_back(gp(u));
        graph.gpp.push_back(gpp(u));
        speed_sum += graph.fp.back() * graph.fp.back() + graph.gp.back() * graph.gp.back();
        graph.A = std::max(graph.A, graph.fpp.back() * graph.fpp.back() + graph.gpp.back() * graph.gpp.back());
    }
    const double a2 = speed_sum / static_cast<double>(u_grid.size());
    graph.a = std::sqrt(a2);
    for (std::size_t k = 0; k < u_grid.size(); ++k) {
        graph.speed_violation =
            std::max(graph.speed_violation, std::abs(graph.fp[k] * graph.fp[k] + graph.gp[k] * graph.gp[k] - a2));
    }
    return graph;
}

/// Helix (a cos u, a sin u, b u) as a graph curve; A = a^2.
inline GraphCurveSpec helix_graph_curve(double a, double b, const std::vector<double>& u_grid) {
    return make_graph_curve([a](double u) { return a * std::cos(u); }, [a](double u) { return -a * std::sin(u); },
                            [a](double u) { return -a * std::cos(u); }, [a](double u) { return a * std::sin(u); },
                            [a](double u) { return a * std::cos(u); }, [a](double u) { return -a * std::sin(u); }, b,
                            u_grid);
}

/// Left-hand side of the graph-curve condition at grid parameters u1 != u2.
inline double graph_curve_condition(const GraphCurveSpec& graph, double u1, double u2) {
    const std::size_t i = graph.index_of(u1);
    const std::size_t j = graph.index_of(u2);
    if (i == j) throw Error(ErrorCode::invalid_argument, "graph curve condition needs u1 != u2");
    const double df = graph.f[j] - graph.f[i];
    const double dg = graph.g[j] - graph.g[i];
    const double du = graph.u[i] - graph.u[j];
    const double second = (graph.fpp[j] - graph.fpp[i]) * df + (graph.gpp[j] - graph.gpp[i]) * dg;
    const double chord2 = df * df + dg * dg + graph.b * graph.b * du * du;
    return second + graph.A / (graph.a * graph.a + graph.b * graph.b) * chord2;
}

/// Radius of the shrinking circle, sqrt(r0^2 - 2t).
inline double shrinking_circle(double r0, double t) {
    const double r2 = r0 * r0 - 2.0 * t;
    if (!(r2 > 0.0)) throw Error(ErrorCode::domain, "circle has vanished by t = " + std::to_string(t));
    return std::sqrt(r2);
}

/// Helix radius a(t) under the flow: a' = -a/(a^2+b^2), solved from the
/// implicit relation a^2/2 + b^2 ln a = a0^2/2 + b^2 ln a0 - t by safeguarded Newton.
inline double helix_radius_ode(double a0, double b, double t) {
    if (!(a0 > 0.0)) throw Error(ErrorCode::invalid_argument, "helix radius must be positive");
    if (t < 0.0) throw Error(ErrorCode::domain, "negative time");
    if (b == 0.0) return shrinking_circle(a0, t);
    const double b2 = b * b;
    const double rhs = 0.5 * a0 * a0 + b2 * std::log(a0) - t;
    const auto h = [&](double a) { return 0.5 * a * a + b2 * std::log(a) - rhs; };
    // h is increasing in a; bracket the root in (lo, a0].
    double hi = a0;
    double lo = a0;
    while (h(lo) > 0.0) {
        lo *= 0.5;
        if (lo < 1e-300) throw Error(ErrorCode::domain, "helix radius underflow");
    }
    double a = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double value = h(a);
        if (value > 0.0) hi = a; else lo = a;
        double next = a - value / (a + b2 / a);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - a) <= 1e-16 * a) {
            a = next;
            break;
        }
        a = next;
    }
    return a;
}

}  // namespace csf::analytic
