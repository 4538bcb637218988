#pragma once

// Admissibility conditions on radial envelopes, the explicit constants for
// cusp-type envelopes, and the attainment threshold b0.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "isoflow/metric.hpp"

namespace isoflow {

struct Prop2Constants {
    double c0 = 0.0;
    double delta = 0.0;
    double b1 = 0.0;
    double b2 = 0.0;
    double r0 = 0.0;
    double scan_start = 2.0;
    double scan_ratio = 1.05;
};

/// Ratio condition log r / log(c0 r) >= 1/sqrt(2).
bool scan_ratio_condition(double r, double c0);
/// Growth condition (log r) log(log(c0 r)/log r) > pi sqrt(C2/C1).
bool scan_growth_condition(double r, double c0, double c1, double c2);
/// (log r) log(log(c0 r) / log r); tends to log c0 as r grows.
double scan_growth_value(double r, double c0);

/// Closed-form constants for envelopes C1/(r log r)^2 <= u <= C2/(r log r)^2 and the
/// smallest scan radius 2 * 1.05^k meeting both scan conditions. Throws
/// DomainError unless C2 >= C1 > 0, ScanExhausted if no radius below 1e300 works.
Prop2Constants prop2_constants(double c1, double c2);

/// min(b1, 4 b2 / A).
double threshold_b0(double b1, double b2, double area);

struct ConditionResult {
    bool pass = true;
    double worst_radius = 0.0;
    double worst_margin = 0.0;
    std::string reason;  ///< empty unless a margin could not be evaluated
};

struct MarginRow {
    double r = 0.0;
    std::array<double, 4> margin{};  ///< conditions 2..5
};

struct HypothesisReport {
    double c0 = 0.0, delta = 0.0, b1 = 0.0, b2 = 0.0, r0 = 0.0;
    std::optional<double> b0;
    std::optional<double> total_area;
    double scan_start = 2.0, scan_ratio = 1.05;
    std::array<ConditionResult, 4> conditions;  ///< cond2, cond3, cond4, cond5
    std::vector<double> grid;
    std::vector<MarginRow> margins;

    bool all_pass() const;
    nlohmann::json to_json() const;
    std::string margins_csv() const;
};

inline constexpr std::array<const char*, 4> kConditionNames{"cond2", "cond3", "cond4", "cond5"};

/// Relative slack allowed when a margin is zero in exact arithmetic.
inline constexpr double kMarginTolerance = 1e-12;

/// Evaluates the four margins at every grid radius:
///   cond2: int_r^{c0 r} sqrt(l1) - pi r sqrt(l2(r))
///   cond3: r sqrt(l1(c0 r)) - b1 int_r^inf rho l2
///   cond4: int_r^{r^2} sqrt(l1) - b2
///   cond5: l1(c0 r) - delta l2(r)
/// A margin passes when it is >= -kMarginTolerance times the larger compared term.
HypothesisReport check_conditions(const RadialEnvelope& env, double c0, double b1, double b2, double delta,
                                  const std::vector<double>& grid);

/// Doubling grid r0, 2 r0, ... up to factor * r0 (endpoint included).
std::vector<double> doubling_grid(double r0, double factor);

/// Constants from (C1, C2), grid from the larger of the scan radius and the
/// envelope radius up to 1e6 times it, and b0 from the metric's area.
HypothesisReport check_metric(const ConformalMetric& metric, double c1, double c2, double grid_factor = 1e6);

} // namespace isoflow
