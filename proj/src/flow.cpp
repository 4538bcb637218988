#include "isoflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "isoflow/error.hpp"
#include "isoflow/io.hpp"

namespace isoflow {
namespace {

constexpr double kPi = std::numbers::pi;

bool collapsed(const CurveMetrics& m, double reference, double fraction) {
    const double smaller = std::min(m.area_in, m.area_out);
    return !(smaller >= fraction * reference);
}

/// Solves the cyclic system a[i] x[i-1] + b[i] x[i] + c[i] x[i+1] = d[i].
std::vector<double> solve_cyclic(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                                 std::vector<double> d) {
    const std::size_t n = b.size();
    // Sherman-Morrison on top of the Thomas algorithm
    const double alpha = c[n - 1];
    const double beta = a[0];
    const double gamma = -b[0];
    b[0] -= gamma;
    b[n - 1] -= alpha * beta / gamma;
    auto thomas = [&](std::vector<double> rhs) {
        std::vector<double> cp(n), x(n);
        cp[0] = c[0] / b[0];
        rhs[0] /= b[0];
        for (std::size_t i = 1; i < n; ++i) {
            const double m = b[i] - a[i] * cp[i - 1];
            cp[i] = c[i] / m;
            rhs[i] = (rhs[i] - a[i] * rhs[i - 1]) / m;
        }
        x[n - 1] = rhs[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) x[i] = rhs[i] - cp[i] * x[i + 1];
        return x;
    };
    const std::vector<double> x = thomas(d);
    std::vector<double> e(n, 0.0);
    e[0] = gamma;
    e[n - 1] = alpha;
    const std::vector<double> z = thomas(e);
    const double fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - fact * z[i];
    return out;
}

} // namespace

double CurvatureSample::total_curvature() const {
    double s = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) s += k[i] * ds[i];
    return s;
}

double CurvatureSample::curvature_energy() const {
    double s = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) s += k[i] * k[i] * ds[i];
    return s;
}

std::size_t CurvatureSample::degenerate_count() const {
    return static_cast<std::size_t>(std::count(degenerate.begin(), degenerate.end(), true));
}

CurvatureSample geodesic_curvature(const ClosedCurve& curve, const ConformalMetric& metric) {
    const std::size_t n = curve.size();
    CurvatureSample out;
    out.k.resize(n);
    out.ds.resize(n);
    out.inner_normal.resize(n);
    out.sqrt_u.resize(n);
    out.degenerate.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        const Point prev = curve[(i + n - 1) % n];
        const Point here = curve[i];
        const Point next = curve[(i + 1) % n];
        const Vec2 e0 = here - prev;
        const Vec2 e1 = next - here;
        const double l0 = norm(e0);
        const double l1 = norm(e1);
        const double turn_sin = cross(e0, e1);
        double turn = std::atan2(turn_sin, dot(e0, e1));
        if (std::abs(turn_sin) <= 1e-14 * l0 * l1 && dot(e0, e1) > 0.0) {
            out.degenerate[i] = true;
            turn = 0.0;
        }
        const double ds_e = 0.5 * (l0 + l1);
        Vec2 tangent = (1.0 / l0) * e0 + (1.0 / l1) * e1;
        const double tn = norm(tangent);
        tangent = tn > 0.0 ? (1.0 / tn) * tangent : (1.0 / l1) * e1;
        const Vec2 inner = perp(tangent);

        const Jet j = metric.jet(here);
        const double su = std::sqrt(j.u);
        // outward normal derivative of (1/2) log u
        const double dnu = -0.5 * dot(j.grad, inner) / j.u;
        out.k[i] = (turn / ds_e + dnu) / su;
        out.ds[i] = su * ds_e;
        out.inner_normal[i] = inner;
        out.sqrt_u[i] = su;
    }
    return out;
}

double gauss_bonnet_residual(const ClosedCurve& curve, const ConformalMetric& metric) {
    const double k_int = geodesic_curvature(curve, metric).total_curvature();
    const double interior = interior_integrals(curve, metric).curvature;
    return std::abs(k_int + interior - 2.0 * kPi);
}

std::string_view status_name(FlowStatus status) {
    switch (status) {
    case FlowStatus::Running: return "Running";
    case FlowStatus::CriterionMet: return "CriterionMet";
    case FlowStatus::Collapsed: return "Collapsed";
    case FlowStatus::Stalled: return "Stalled";
    }
    return "Unknown";
}

void FlowOptions::validate() const {
    auto bad = [](const char* what) { throw Error(ErrorCode::ConfigError, what); };
    if (!(curvature_energy_cap > 0.0)) bad("curvature_energy_cap must be positive");
    if (!(dt_safety > 0.0 && dt_safety <= 1.0)) bad("dt_safety must lie in (0, 1]");
    if (max_steps <= 0) bad("max_steps must be positive");
    if (!(resample_target >= 0.0)) bad("resample_target must be non-negative");
    if (!(el_tolerance > 0.0)) bad("el_tolerance must be positive");
    if (!(collapse_fraction > 0.0 && collapse_fraction < 0.5)) bad("collapse_fraction must lie in (0, 0.5)");
    if (max_rejections <= 0) bad("max_rejections must be positive");
}

FlowState make_flow_state(ClosedCurve curve, const ConformalMetric& metric) {
    FlowState s{std::move(curve)};
    s.metrics = isoperimetric_ratio(s.curve, metric);
    s.reference_area = metric.has_finite_area() ? metric.total_area() : s.metrics.area_in;
    return s;
}

double euler_lagrange_target(const CurveMetrics& m) {
    return m.length_g * (1.0 / m.area_in - 1.0 / m.area_out);
}

double stable_dt(const ClosedCurve& curve, const ConformalMetric& metric, const FlowOptions& opts) {
    double umin = std::numeric_limits<double>::infinity();
    for (Point p : curve.vertices()) umin = std::min(umin, metric.u(p));
    const double h = curve.min_edge();
    return opts.dt_safety * h * h * umin;
}

ClosedCurve move_vertices(const ClosedCurve& curve, const ConformalMetric& metric, double target, double dt) {
    const CurvatureSample k = geodesic_curvature(curve, metric);
    std::vector<Point> moved(curve.vertices().begin(), curve.vertices().end());
    for (std::size_t i = 0; i < moved.size(); ++i)
        moved[i] = moved[i] + (dt * (k.k[i] - target) / k.sqrt_u[i]) * k.inner_normal[i];
    return ClosedCurve(std::move(moved));
}

ClosedCurve resample(const ClosedCurve& curve, std::size_t n) {
    const std::size_t m = curve.size();
    std::vector<double> h(m);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        h[i] = distance(curve[i], curve[(i + 1) % m]);
        total += h[i];
    }
    std::vector<double> a(m), b(m), c(m), dx(m), dy(m);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t ip = (i + m - 1) % m;
        const std::size_t in = (i + 1) % m;
        a[i] = h[ip];
        b[i] = 2.0 * (h[ip] + h[i]);
        c[i] = h[i];
        dx[i] = 6.0 * ((curve[in].x - curve[i].x) / h[i] - (curve[i].x - curve[ip].x) / h[ip]);
        dy[i] = 6.0 * ((curve[in].y - curve[i].y) / h[i] - (curve[i].y - curve[ip].y) / h[ip]);
    }
    const std::vector<double> mx = solve_cyclic(a, b, c, dx);
    const std::vector<double> my = solve_cyclic(a, b, c, dy);

    std::vector<Point> out;
    out.reserve(n);
    std::size_t seg = 0;
    double seg_start = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double t = total * static_cast<double>(j) / static_cast<double>(n);
        while (seg + 1 < m && seg_start + h[seg] <= t) seg_start += h[seg++];
        const std::size_t nx = (seg + 1) % m;
        const double hi = h[seg];
        const double A = (seg_start + hi - t) / hi;
        const double B = 1.0 - A;
        const double w = hi * hi / 6.0;
        const double cA = (A * A * A - A) * w;
        const double cB = (B * B * B - B) * w;
        out.push_back({A * curve[seg].x + B * curve[nx].x + cA * mx[seg] + cB * mx[nx],
                       A * curve[seg].y + B * curve[nx].y + cA * my[seg] + cB * my[nx]});
    }
    return ClosedCurve(std::move(out));
}

namespace {

struct Trial {
    std::optional<FlowState> state;
    bool collapsed = false;
};

/// Moves, resamples and re-measures; empty state when the move breaks simplicity.
Trial try_step(const FlowState& state, const ConformalMetric& metric, const FlowOptions& opts, FlowKind kind,
               double dt) {
    const double target = kind == FlowKind::RatioGradient ? euler_lagrange_target(state.metrics) : 0.0;
    Trial t;
    try {
        ClosedCurve moved = move_vertices(state.curve, metric, target, dt);
        std::size_t n = moved.size();
        if (opts.resample_target > 0.0)
            n = std::max(ClosedCurve::kMinVertices,
                         static_cast<std::size_t>(std::lround(moved.euclidean_length() / opts.resample_target)));
        moved = resample(moved, n);
        FlowState next{std::move(moved)};
        next.tau = state.tau + dt;
        next.step_count = state.step_count + 1;
        next.last_dt = dt;
        next.reference_area = state.reference_area;
        next.metrics = isoperimetric_ratio(next.curve, metric);
        if (collapsed(next.metrics, next.reference_area, opts.collapse_fraction)) {
            next.status = FlowStatus::Collapsed;
            t.collapsed = true;
        }
        t.state = std::move(next);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidCurve || e.code() == ErrorCode::TriangulationFailure) {
            t.collapsed = true;
            FlowState dead = state;
            dead.status = FlowStatus::Collapsed;
            t.state = std::move(dead);
        } else if (e.code() != ErrorCode::SelfIntersection) {
            throw;
        }
    }
    return t;
}

/// Shared driver: steps with the given kind, accepting only ratio-non-increasing
/// steps, until `done` holds or a failure status is reached.
template <class Done>
FlowState drive(FlowState state, const ConformalMetric& metric, const FlowOptions& opts, FlowKind kind,
                const StepObserver& observer, Done done, FlowStatus on_budget) {
    int steps = 0;
    while (true) {
        if (done(state)) {
            state.status = FlowStatus::CriterionMet;
            return state;
        }
        // curve shortening that cannot lower the ratio to first order would only
        // shrink dt until the increase hides below the tolerance
        if (kind == FlowKind::CurveShortening && log_ratio_derivative(state, metric) >= 0.0) {
            state.status = FlowStatus::Stalled;
            return state;
        }
        if (steps >= opts.max_steps) {
            state.status = on_budget;
            return state;
        }
        double dt = stable_dt(state.curve, metric, opts);
        bool accepted = false;
        for (int attempt = 0; attempt <= opts.max_rejections; ++attempt, dt *= 0.5) {
            Trial t = try_step(state, metric, opts, kind, dt);
            if (!t.state) continue;
            if (t.collapsed) return std::move(*t.state);
            if (t.state->metrics.ratio > state.metrics.ratio * (1.0 + 1e-9)) continue;
            state = std::move(*t.state);
            accepted = true;
            break;
        }
        if (!accepted) {
            state.status = FlowStatus::Stalled;
            return state;
        }
        ++steps;
        if (observer) observer(state);
    }
}

} // namespace

FlowState flow_step(const FlowState& state, const ConformalMetric& metric, const FlowOptions& opts, FlowKind kind) {
    double dt = stable_dt(state.curve, metric, opts);
    for (int attempt = 0; attempt <= opts.max_rejections; ++attempt, dt *= 0.5) {
        Trial t = try_step(state, metric, opts, kind, dt);
        if (t.state) return std::move(*t.state);
    }
    FlowState stalled = state;
    stalled.status = FlowStatus::Stalled;
    return stalled;
}

FlowState lemma9_reduce(ClosedCurve curve, const ConformalMetric& metric, const FlowOptions& opts,
                        const StepObserver& observer) {
    opts.validate();
    FlowState state = make_flow_state(std::move(curve), metric);
    const double cap = opts.curvature_energy_cap;
    return drive(std::move(state), metric, opts, FlowKind::CurveShortening, observer,
                 [cap](const FlowState& s) { return s.metrics.curvature_energy <= cap; }, FlowStatus::Stalled);
}

FlowState ratio_descent(FlowState state, const ConformalMetric& metric, const FlowOptions& opts,
                        const StepObserver& observer) {
    opts.validate();
    state.status = FlowStatus::Running;
    const double tol = opts.el_tolerance;
    return drive(std::move(state), metric, opts, FlowKind::RatioGradient, observer,
                 [&](const FlowState& s) { return el_residual(s, metric) < tol; }, FlowStatus::Running);
}

double log_ratio_derivative(const FlowState& state, const ConformalMetric&) {
    const CurveMetrics& m = state.metrics;
    return -m.curvature_energy / m.length_g + m.total_curvature / m.area_in - m.total_curvature / m.area_out;
}

double el_residual(const ClosedCurve& curve, const ConformalMetric& metric) {
    FlowState s{curve};
    s.metrics = isoperimetric_ratio(curve, metric);
    return el_residual(s, metric);
}

double el_residual(const FlowState& state, const ConformalMetric& metric) {
    const double target = euler_lagrange_target(state.metrics);
    const CurvatureSample k = geodesic_curvature(state.curve, metric);
    double worst = 0.0;
    for (double ki : k.k) worst = std::max(worst, std::abs(ki - target));
    return worst;
}

std::string trajectory_row(const FlowState& s) {
    const CurveMetrics& m = s.metrics;
    return std::to_string(s.step_count) + ',' + format_number(s.tau) + ',' + format_number(m.length_g) + ',' +
           format_number(m.area_in) + ',' + format_number(m.area_out) + ',' + format_number(m.ratio) + ',' +
           format_number(m.total_curvature) + ',' + format_number(m.curvature_energy) + ',' +
           format_number(m.gb_residual);
}

} // namespace isoflow
