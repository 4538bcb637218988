#include "isoflow/minimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "isoflow/error.hpp"

namespace isoflow {
namespace {

std::size_t cyclic_gap(std::size_t a, std::size_t b, std::size_t n) {
    const std::size_t d = a > b ? a - b : b - a;
    return std::min(d, n - d);
}

struct PinchPair {
    std::size_t i, j;  // i < j
    double dist;
};

std::vector<PinchPair> close_pairs(const ClosedCurve& curve, double tol) {
    const std::size_t n = curve.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return curve[a].x < curve[b].x; });
    std::vector<PinchPair> pairs;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n && curve[order[b]].x - curve[order[a]].x < tol; ++b) {
            const std::size_t i = std::min(order[a], order[b]);
            const std::size_t j = std::max(order[a], order[b]);
            if (cyclic_gap(i, j, n) < 3) continue;
            const double d = distance(curve[i], curve[j]);
            if (d < tol) pairs.push_back({i, j, d});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const PinchPair& l, const PinchPair& r) {
        return l.i != r.i ? l.i < r.i : l.j < r.j;
    });
    return pairs;
}

ClosedCurve make_loop(std::vector<Point> pts) {
    while (pts.size() < ClosedCurve::kMinVertices) {
        std::vector<Point> dense;
        for (std::size_t k = 0; k < pts.size(); ++k) {
            dense.push_back(pts[k]);
            dense.push_back(0.5 * (pts[k] + pts[(k + 1) % pts.size()]));
        }
        pts = std::move(dense);
    }
    return ClosedCurve(std::move(pts));
}

CurveMetrics loop_metrics(const ClosedCurve& loop, const ConformalMetric& metric, double outside) {
    CurveMetrics m = isoperimetric_ratio(loop, metric);
    m.area_out = outside;
    m.ratio = m.length_g * (1.0 / m.area_in + (std::isfinite(outside) ? 1.0 / outside : 0.0));
    return m;
}

} // namespace

Lemma10Result lemma10_select(double alpha1, double alpha2, double A1, double A2, double A3) {
    if (!(alpha1 > 0.0 && alpha2 > 0.0 && A1 > 0.0 && A2 > 0.0 && A3 > 0.0) || !std::isfinite(alpha1) ||
        !std::isfinite(alpha2) || !std::isfinite(A1) || !std::isfinite(A3))
        throw Error(ErrorCode::DomainError, "loop selection inputs must be positive");
    const double inv2 = std::isfinite(A2) ? 1.0 / A2 : 0.0;
    Lemma10Result r;
    r.lhs = (alpha1 + alpha2) * (inv2 + 1.0 / (A1 + A3));
    r.v1 = alpha1 * (1.0 / A1 + (std::isfinite(A2) ? 1.0 / (A2 + A3) : 0.0));
    r.v2 = alpha2 * (1.0 / A3 + (std::isfinite(A2) ? 1.0 / (A1 + A2) : 0.0));
    r.chosen = r.v2 < r.v1 ? 2 : 1;
    r.rhs_min = std::min(r.v1, r.v2);
    r.holds = r.lhs >= r.rhs_min * (1.0 - 4.0 * std::numeric_limits<double>::epsilon());
    return r;
}

std::optional<SplitResult> split_self_tangent(const ClosedCurve& curve, const ConformalMetric& metric, double tol) {
    if (!(tol > 0.0)) throw Error(ErrorCode::DomainError, "pinch tolerance must be positive");
    const std::size_t n = curve.size();
    const std::vector<PinchPair> pairs = close_pairs(curve, tol);
    if (pairs.empty()) return std::nullopt;

    // group pairs whose endpoints are within a few indices of each other
    std::vector<std::size_t> parent(pairs.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    constexpr std::size_t window = 3;
    for (std::size_t a = 0; a < pairs.size(); ++a)
        for (std::size_t b = a + 1; b < pairs.size(); ++b) {
            const auto& p = pairs[a];
            const auto& q = pairs[b];
            const bool same = (cyclic_gap(p.i, q.i, n) <= window && cyclic_gap(p.j, q.j, n) <= window) ||
                              (cyclic_gap(p.i, q.j, n) <= window && cyclic_gap(p.j, q.i, n) <= window);
            if (same) parent[find(a)] = find(b);
        }
    std::size_t clusters = 0;
    for (std::size_t a = 0; a < pairs.size(); ++a)
        if (find(a) == a) ++clusters;
    if (clusters > 1)
        throw Error(ErrorCode::AmbiguousPinch, std::to_string(clusters) + " separate near-tangencies within tolerance");

    const PinchPair pinch = *std::min_element(pairs.begin(), pairs.end(),
                                              [](const PinchPair& l, const PinchPair& r) { return l.dist < r.dist; });
    const Point mid = 0.5 * (curve[pinch.i] + curve[pinch.j]);
    std::vector<Point> first{mid}, second{mid};
    for (std::size_t k = pinch.i + 1; k < pinch.j; ++k) first.push_back(curve[k]);
    for (std::size_t k = pinch.j + 1; k < n + pinch.i; ++k) second.push_back(curve[k % n]);

    ClosedCurve loop1 = make_loop(std::move(first));
    ClosedCurve loop2 = make_loop(std::move(second));
    const double outside = isoperimetric_ratio(curve, metric).area_out;
    const double a1 = area_in(loop1, metric);
    const double a3 = area_in(loop2, metric);
    CurveMetrics m1 = loop_metrics(loop1, metric, outside + a3);
    CurveMetrics m2 = loop_metrics(loop2, metric, outside + a1);
    const Lemma10Result sel = lemma10_select(m1.length_g, m2.length_g, m1.area_in, outside, m2.area_in);
    return SplitResult{std::move(loop1), std::move(loop2), m1, m2, sel.chosen, sel};
}

std::vector<StartCircle> default_starts(const ConformalMetric& metric, double reference_radius, std::size_t count) {
    if (!(reference_radius > 0.0) || count == 0) throw Error(ErrorCode::DomainError, "start family needs a positive radius");
    std::vector<Point> centers{Point{}};
    for (Point c : metric.centers())
        if (std::none_of(centers.begin(), centers.end(), [&](Point q) { return distance(q, c) < 1e-12; }))
            centers.push_back(c);
    std::vector<StartCircle> out;
    for (Point c : centers)
        for (std::size_t k = 0; k < count; ++k) {
            const double e = count == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(count - 1);
            out.push_back({c, reference_radius * std::pow(10.0, e)});
        }
    return out;
}

std::vector<StartCircle> default_starts(const ConformalMetric& metric) {
    return default_starts(metric, metric.half_mass_radius());
}

bool StartLog::failed() const {
    return !error.empty() || status == FlowStatus::Collapsed || status == FlowStatus::Stalled;
}

namespace {

struct StartOutcome {
    StartLog log;
    std::optional<ClosedCurve> curve;
};

StartOutcome run_start(const ConformalMetric& metric, const StartCircle& start, std::size_t index,
                       const MinimizeOptions& opts) {
    StartOutcome out;
    out.log.index = index;
    out.log.circle = start;
    try {
        double radius = start.radius;
        if (opts.jitter > 0.0) {
            std::mt19937_64 rng(opts.seed ^ (0x9E3779B97F4A7C15ULL * (index + 1)));
            radius *= 1.0 + opts.jitter * std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
            out.log.circle.radius = radius;
        }
        const ClosedCurve initial = ClosedCurve::circle(start.center, radius, opts.vertices);
        const CurveMetrics initial_metrics = isoperimetric_ratio(initial, metric);
        out.log.initial_ratio = initial_metrics.ratio;

        std::vector<std::size_t> stages;
        for (std::size_t n : opts.coarse_stages)
            if (n >= ClosedCurve::kMinVertices && n < opts.vertices) stages.push_back(n);
        stages.push_back(opts.vertices);

        std::optional<FlowState> state;
        for (std::size_t s = 0; s < stages.size(); ++s) {
            ClosedCurve cur = resample(state ? state->curve : initial, stages[s]);
            FlowState next = [&] {
                if (state) {
                    FlowState fresh = make_flow_state(std::move(cur), metric);
                    fresh.reference_area = state->reference_area;
                    return fresh;
                }
                FlowState reduced = lemma9_reduce(std::move(cur), metric, opts.flow);
                out.log.reduce_status = reduced.status;
                out.log.steps += reduced.step_count;
                return reduced;
            }();
            if (next.status == FlowStatus::Collapsed) {
                out.log.status = FlowStatus::Collapsed;
                out.log.final_ratio = next.metrics.ratio;
                return out;
            }
            next.step_count = 0;
            next = ratio_descent(std::move(next), metric, opts.flow);
            out.log.steps += next.step_count;
            out.log.status = next.status;
            state = std::move(next);
            if (state->status == FlowStatus::Collapsed || state->status == FlowStatus::Stalled) {
                out.log.final_ratio = state->metrics.ratio;
                return out;
            }
        }
        // acceptance never raises the ratio, so the start circle remains a fallback
        if (state->metrics.ratio <= initial_metrics.ratio) {
            out.log.final_ratio = state->metrics.ratio;
            out.log.el_residual = el_residual(*state, metric);
            out.curve = std::move(state->curve);
        } else {
            out.log.final_ratio = initial_metrics.ratio;
            out.log.el_residual = el_residual(initial, metric);
            out.curve = initial;
        }
    } catch (const Error& e) {
        out.log.error = e.what();
        out.curve.reset();
    }
    return out;
}

const char* status_text(FlowStatus s) { return status_name(s).data(); }

} // namespace

MinimizeResult minimize(const ConformalMetric& metric, const std::vector<StartCircle>& starts,
                        const MinimizeOptions& opts) {
    opts.flow.validate();
    if (!metric.has_finite_area()) throw Error(ErrorCode::DomainError, "minimization needs a finite-area metric");
    if (starts.empty()) throw Error(ErrorCode::ConfigError, "no start curves");
    if (opts.vertices < ClosedCurve::kMinVertices) throw Error(ErrorCode::ConfigError, "too few vertices per start");

    std::vector<StartOutcome> outcomes(starts.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < starts.size(); k = next++) outcomes[k] = run_start(metric, starts[k], k, opts);
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(opts.threads, starts.size()));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
        const auto& o = outcomes[k];
        if (o.log.failed() || !o.curve) continue;
        if (!best || o.log.final_ratio < outcomes[*best].log.final_ratio) best = k;
    }
    if (!best) throw Error(ErrorCode::AllStartsFailed, "every start collapsed, stalled or failed");

    MinimizeResult result(*outcomes[*best].curve);
    result.best_start = *best;
    for (auto& o : outcomes) result.starts_log.push_back(o.log);

    const double tol = opts.pinch_fraction * result.best_curve.diameter();
    if (auto split = split_self_tangent(result.best_curve, metric, tol)) {
        result.best_curve = resample(split->chosen_loop(), opts.vertices);
        result.split_applied = true;
    }
    result.best_metrics = isoperimetric_ratio(result.best_curve, metric);
    result.best_ratio = result.best_metrics.ratio;
    result.el_residual = el_residual(result.best_curve, metric);
    if (opts.b0) result.threshold_check = ThresholdCheck{*opts.b0, result.best_ratio < *opts.b0};
    return result;
}

nlohmann::json MinimizeResult::to_json() const {
    nlohmann::json j;
    j["best_ratio"] = best_ratio;
    j["el_residual"] = el_residual;
    j["best_start"] = best_start;
    j["split_applied"] = split_applied;
    j["best_metrics"] = {{"L", best_metrics.length_g},
                         {"A_in", best_metrics.area_in},
                         {"A_out", best_metrics.area_out},
                         {"I", best_metrics.ratio},
                         {"k_int", best_metrics.total_curvature},
                         {"k2_int", best_metrics.curvature_energy},
                         {"gb_residual", best_metrics.gb_residual}};
    j["threshold_check"] = threshold_check
                               ? nlohmann::json{{"b0", threshold_check->b0}, {"below", threshold_check->below}}
                               : nlohmann::json(nullptr);
    nlohmann::json log = nlohmann::json::array();
    for (const auto& s : starts_log) {
        nlohmann::json e = {{"index", s.index},
                            {"center", {s.circle.center.x, s.circle.center.y}},
                            {"radius", s.circle.radius},
                            {"initial_ratio", s.initial_ratio},
                            {"final_ratio", s.final_ratio},
                            {"reduce_status", status_text(s.reduce_status)},
                            {"status", status_text(s.status)},
                            {"steps", s.steps},
                            {"el_residual", s.el_residual}};
        if (!s.error.empty()) e["error"] = s.error;
        log.push_back(e);
    }
    j["starts"] = log;
    return j;
}

} // namespace isoflow
