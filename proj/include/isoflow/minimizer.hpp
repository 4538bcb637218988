#pragma once

// Multi-start minimization of the isoperimetric ratio, the constant-curvature
// certificate, and the split rule for self-tangent curves.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "isoflow/curve.hpp"
#include "isoflow/flow.hpp"
#include "isoflow/metric.hpp"

namespace isoflow {

struct Lemma10Result {
    int chosen = 1;  ///< 1 or 2; ties pick 1
    double lhs = 0.0;
    double v1 = 0.0;
    double v2 = 0.0;
    double rhs_min = 0.0;
    bool holds = true;  ///< lhs >= min(v1, v2)
};

/// lhs = (a1 + a2)(1/A2 + 1/(A1 + A3)), v1 = a1 (1/A1 + 1/(A2 + A3)),
/// v2 = a2 (1/A3 + 1/(A1 + A2)). A2 may be +infinity (flat metrics).
/// Throws DomainError on non-positive input.
Lemma10Result lemma10_select(double alpha1, double alpha2, double A1, double A2, double A3);

struct SplitResult {
    ClosedCurve loop1;
    ClosedCurve loop2;
    CurveMetrics metrics1;  ///< area_out = A_out(curve) + A_in(loop2)
    CurveMetrics metrics2;  ///< area_out = A_out(curve) + A_in(loop1)
    int chosen = 1;
    Lemma10Result selection;

    const ClosedCurve& chosen_loop() const { return chosen == 1 ? loop1 : loop2; }
    const CurveMetrics& chosen_metrics() const { return chosen == 1 ? metrics1 : metrics2; }
};

/// Splits the curve at its unique near-self-tangency (two vertices at least
/// three indices apart and closer than `tol`). Empty when there is none;
/// AmbiguousPinch when there are several.
std::optional<SplitResult> split_self_tangent(const ClosedCurve& curve, const ConformalMetric& metric, double tol);

struct StartCircle {
    Point center;
    double radius = 1.0;
};

/// Circles about the origin and every building-block center, radii
/// geometric from 0.1 to 10 times `reference_radius` (`count` radii).
std::vector<StartCircle> default_starts(const ConformalMetric& metric, double reference_radius, std::size_t count = 5);
std::vector<StartCircle> default_starts(const ConformalMetric& metric);

struct MinimizeOptions {
    FlowOptions flow;
    std::size_t vertices = 512;
    /// Coarser vertex counts descended first; the final stage always uses `vertices`.
    std::vector<std::size_t> coarse_stages{64, 128, 256};
    std::size_t threads = 1;
    double pinch_fraction = 1e-3;  ///< pinch tolerance relative to the curve diameter
    /// Relative radial jitter of the start circles (0 disables); drawn from `seed`.
    double jitter = 0.0;
    std::uint64_t seed = 0;
    std::optional<double> b0;
};

struct StartLog {
    std::size_t index = 0;
    StartCircle circle;
    double initial_ratio = 0.0;
    double final_ratio = 0.0;
    FlowStatus reduce_status = FlowStatus::Running;
    FlowStatus status = FlowStatus::Running;
    int steps = 0;
    double el_residual = 0.0;
    std::string error;  ///< set when the start threw a domain error

    bool failed() const;
};

struct ThresholdCheck {
    double b0 = 0.0;
    bool below = false;
};

struct MinimizeResult {
    explicit MinimizeResult(ClosedCurve c) : best_curve(std::move(c)) {}

    ClosedCurve best_curve;
    CurveMetrics best_metrics;
    double best_ratio = 0.0;
    double el_residual = 0.0;
    std::size_t best_start = 0;
    std::optional<ThresholdCheck> threshold_check;
    std::vector<StartLog> starts_log;
    bool split_applied = false;

    nlohmann::json to_json() const;
};

/// Runs every start (curvature reduction, then ratio-gradient descent over
/// the vertex stages), keeps the smallest final ratio (ties: lowest index),
/// and splits the winner at a pinch if one is present. Throws AllStartsFailed
/// when every start ends Collapsed or Stalled.
MinimizeResult minimize(const ConformalMetric& metric, const std::vector<StartCircle>& starts,
                        const MinimizeOptions& opts = {});

} // namespace isoflow
