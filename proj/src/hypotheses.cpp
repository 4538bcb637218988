#include "isoflow/hypotheses.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "isoflow/error.hpp"
#include "isoflow/io.hpp"

namespace isoflow {
namespace {

constexpr double kPi = std::numbers::pi;

} // namespace

bool scan_ratio_condition(double r, double c0) {
    return std::log(r) / std::log(c0 * r) >= 1.0 / std::sqrt(2.0);
}

double scan_growth_value(double r, double c0) {
    const double lr = std::log(r);
    return lr * std::log(std::log(c0 * r) / lr);
}

bool scan_growth_condition(double r, double c0, double c1, double c2) {
    return scan_growth_value(r, c0) > kPi * std::sqrt(c2 / c1);
}

Prop2Constants prop2_constants(double c1, double c2) {
    if (!(c1 > 0.0) || !(c2 >= c1) || !std::isfinite(c2))
        throw Error(ErrorCode::DomainError, "constants need C2 >= C1 > 0");
    Prop2Constants k;
    const double q = std::sqrt(c2 / c1);
    k.c0 = 2.0 * std::exp(kPi * q);
    k.delta = c1 / (2.0 * k.c0 * k.c0 * c2);
    k.b1 = std::sqrt(c1) / (std::sqrt(2.0) * k.c0 * c2);
    k.b2 = std::sqrt(c1) * std::log(2.0);
    for (double r = k.scan_start; r < 1e300; r *= k.scan_ratio) {
        if (!std::isfinite(k.c0 * r)) break;
        if (scan_ratio_condition(r, k.c0) && scan_growth_condition(r, k.c0, c1, c2)) {
            k.r0 = r;
            return k;
        }
    }
    throw Error(ErrorCode::ScanExhausted, "no scan radius below 1e300 satisfies both conditions");
}

double threshold_b0(double b1, double b2, double area) {
    if (!(b1 > 0.0) || !(b2 > 0.0) || !(area > 0.0))
        throw Error(ErrorCode::DomainError, "threshold inputs must be positive");
    return std::min(b1, 4.0 * b2 / area);
}

std::vector<double> doubling_grid(double r0, double factor) {
    std::vector<double> grid;
    const double end = r0 * factor;
    for (double r = r0; r < end * (1.0 - 1e-12); r *= 2.0) grid.push_back(r);
    grid.push_back(end);
    return grid;
}

HypothesisReport check_conditions(const RadialEnvelope& env, double c0, double b1, double b2, double delta,
                                  const std::vector<double>& grid) {
    if (!(c0 > 1.0)) throw Error(ErrorCode::DomainError, "c0 must exceed 1");
    if (!(b1 > 0.0) || !(b2 > 0.0) || !(delta > 0.0)) throw Error(ErrorCode::DomainError, "b1, b2, delta must be positive");
    if (grid.empty()) throw Error(ErrorCode::DomainError, "empty radius grid");
    HypothesisReport rep;
    rep.c0 = c0;
    rep.delta = delta;
    rep.b1 = b1;
    rep.b2 = b2;
    rep.r0 = env.r0;
    rep.grid = grid;
    for (auto& c : rep.conditions) c.worst_margin = std::numeric_limits<double>::infinity();

    auto record = [&](int idx, double r, double lhs, double rhs) {
        const double margin = lhs - rhs;
        ConditionResult& c = rep.conditions[static_cast<std::size_t>(idx)];
        if (margin < c.worst_margin) {
            c.worst_margin = margin;
            c.worst_radius = r;
        }
        const double scale = std::max(std::abs(lhs), std::abs(rhs));
        if (!(margin >= -kMarginTolerance * scale)) c.pass = false;
        return margin;
    };

    for (double r : grid) {
        if (!(r >= env.r0 * (1.0 - 1e-12))) throw Error(ErrorCode::DomainError, "grid radius below the envelope radius");
        MarginRow row{r, {}};
        const double l2 = env.lambda2(r);
        row.margin[0] = record(0, r, envelope_sqrt_integral(env, r, c0 * r), kPi * r * std::sqrt(l2));
        try {
            row.margin[1] = record(1, r, r * std::sqrt(env.lambda1(c0 * r)), b1 * envelope_tail_integral(env, r));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DivergentTail) throw;
            ConditionResult& c = rep.conditions[1];
            c.pass = false;
            c.reason = std::string(e.what());
            c.worst_margin = -std::numeric_limits<double>::infinity();
            c.worst_radius = r;
            row.margin[1] = -std::numeric_limits<double>::infinity();
        }
        row.margin[2] = record(2, r, envelope_sqrt_integral(env, r, r * r), b2);
        row.margin[3] = record(3, r, env.lambda1(c0 * r), delta * l2);
        rep.margins.push_back(row);
    }
    return rep;
}

HypothesisReport check_metric(const ConformalMetric& metric, double c1, double c2, double grid_factor) {
    const Prop2Constants k = prop2_constants(c1, c2);
    const RadialEnvelope env = metric.envelope() ? *metric.envelope() : cusp_envelope(c1, c2, k.r0);
    const double start = std::max(k.r0, env.r0);
    HypothesisReport rep = check_conditions(env, k.c0, k.b1, k.b2, k.delta, doubling_grid(start, grid_factor));
    rep.r0 = k.r0;
    rep.scan_start = k.scan_start;
    rep.scan_ratio = k.scan_ratio;
    if (metric.has_finite_area()) {
        rep.total_area = metric.total_area();
        rep.b0 = threshold_b0(k.b1, k.b2, *rep.total_area);
    }
    return rep;
}

bool HypothesisReport::all_pass() const {
    for (const auto& c : conditions)
        if (!c.pass) return false;
    return true;
}

nlohmann::json HypothesisReport::to_json() const {
    nlohmann::json j;
    j["c0"] = c0;
    j["delta"] = delta;
    j["b1"] = b1;
    j["b2"] = b2;
    j["r0"] = r0;
    j["b0"] = b0 ? nlohmann::json(*b0) : nlohmann::json(nullptr);
    j["total_area"] = total_area ? nlohmann::json(*total_area) : nlohmann::json(nullptr);
    j["scan"] = {{"start", scan_start}, {"ratio", scan_ratio}};
    nlohmann::json per = nlohmann::json::object();
    for (std::size_t i = 0; i < conditions.size(); ++i) {
        const auto& c = conditions[i];
        nlohmann::json e = {{"pass", c.pass}, {"worst_radius", c.worst_radius}, {"worst_margin", c.worst_margin}};
        if (!c.reason.empty()) e["reason"] = c.reason;
        per[kConditionNames[i]] = e;
    }
    j["per_condition"] = per;
    j["all_pass"] = all_pass();
    j["grid"] = grid;
    return j;
}

std::string HypothesisReport::margins_csv() const {
    std::string out = "r,cond2,cond3,cond4,cond5\n";
    for (const auto& row : margins) {
        out += format_number(row.r);
        for (double m : row.margin) out += ',' + format_number(m);
        out += '\n';
    }
    return out;
}

} // namespace isoflow
