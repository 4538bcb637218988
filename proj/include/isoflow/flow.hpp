#pragma once

// Curve shortening flow in a conformal metric and the ratio-gradient flow
// used for descent.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "isoflow/curve.hpp"
#include "isoflow/metric.hpp"

namespace isoflow {

/// Per-vertex discrete geodesic curvature.
struct CurvatureSample {
    std::vector<double> k;             ///< geodesic curvature, positive when bending toward the inside
    std::vector<double> ds;            ///< metric arc length attributed to the vertex (half of each adjacent edge)
    std::vector<Vec2> inner_normal;    ///< Euclidean unit inner normal
    std::vector<double> sqrt_u;        ///< sqrt(u) at the vertex
    std::vector<bool> degenerate;      ///< three consecutive vertices collinear within 1e-14

    double total_curvature() const;    ///< sum of k ds
    double curvature_energy() const;   ///< sum of k^2 ds
    std::size_t degenerate_count() const;
};

/// Turning angle over dual Euclidean length, corrected by the normal
/// derivative of (1/2) log u and scaled by u^(-1/2).
CurvatureSample geodesic_curvature(const ClosedCurve& curve, const ConformalMetric& metric);

/// |integral of k ds + integral of K dV over the inside - 2 pi|.
double gauss_bonnet_residual(const ClosedCurve& curve, const ConformalMetric& metric);

enum class FlowStatus { Running, CriterionMet, Collapsed, Stalled };
std::string_view status_name(FlowStatus status);

/// CurveShortening moves with normal speed k; RatioGradient with k - L(1/A_in - 1/A_out),
/// the steepest descent of the isoperimetric ratio.
enum class FlowKind { CurveShortening, RatioGradient };

struct FlowOptions {
    double curvature_energy_cap = 10.0;
    double dt_safety = 0.25;        ///< dt = dt_safety * (min edge)^2 * (min u on the curve)
    int max_steps = 20000;
    double resample_target = 0.0;   ///< Euclidean spacing after resampling; 0 keeps the vertex count
    double el_tolerance = 1e-2;
    double collapse_fraction = 1e-3;
    int max_rejections = 40;

    /// Throws ConfigError for non-positive values or dt_safety > 1.
    void validate() const;
};

struct FlowState {
    explicit FlowState(ClosedCurve c) : curve(std::move(c)) {}

    ClosedCurve curve;
    double tau = 0.0;
    CurveMetrics metrics;
    FlowStatus status = FlowStatus::Running;
    int step_count = 0;
    double last_dt = 0.0;
    /// Area used by the collapse guard: total area, or the starting A_in for infinite-area metrics.
    double reference_area = 0.0;
};

FlowState make_flow_state(ClosedCurve curve, const ConformalMetric& metric);

/// Target curvature L(1/A_in - 1/A_out) of the constant-curvature condition.
double euler_lagrange_target(const CurveMetrics& m);

/// Largest explicit step allowed for the curve.
double stable_dt(const ClosedCurve& curve, const ConformalMetric& metric, const FlowOptions& opts);

/// One explicit Euler move of every vertex by dt * speed * u^(-1/2) * inner normal.
/// `target` is subtracted from k (0 for curve shortening). Throws SelfIntersection or
/// InvalidCurve when the moved polygon is not a valid curve.
ClosedCurve move_vertices(const ClosedCurve& curve, const ConformalMetric& metric, double target, double dt);

/// Periodic cubic spline through the vertices (chord-length parameter),
/// resampled at n points equally spaced in that parameter starting at vertex 0.
ClosedCurve resample(const ClosedCurve& curve, std::size_t n);

/// One flow step with stable dt, halving dt on simplicity failure; status
/// Stalled after opts.max_rejections halvings, Collapsed when the curve
/// degenerates or min(A_in, A_out) < collapse_fraction * reference area.
FlowState flow_step(const FlowState& state, const ConformalMetric& metric, const FlowOptions& opts,
                    FlowKind kind = FlowKind::CurveShortening);

using StepObserver = std::function<void(const FlowState&)>;

/// Curve shortening until the curvature energy is at most the cap, rejecting
/// (and halving dt for) any step that raises the ratio by more than 1e-9
/// relative. Ends CriterionMet, Collapsed or Stalled.
FlowState lemma9_reduce(ClosedCurve curve, const ConformalMetric& metric, const FlowOptions& opts,
                        const StepObserver& observer = {});

/// Ratio-gradient flow with the same acceptance rule until the constant
/// curvature residual drops below opts.el_tolerance (CriterionMet). Hitting
/// max_steps leaves the status Running.
FlowState ratio_descent(FlowState state, const ConformalMetric& metric, const FlowOptions& opts,
                        const StepObserver& observer = {});

/// d(log I)/dtau along curve shortening: -int k^2/L + int k/A_in - int k/A_out.
double log_ratio_derivative(const FlowState& state, const ConformalMetric& metric);

/// Max over vertices of |k - L(1/A_in - 1/A_out)|.
double el_residual(const ClosedCurve& curve, const ConformalMetric& metric);
/// Same, reusing the state's metrics.
double el_residual(const FlowState& state, const ConformalMetric& metric);

inline constexpr std::string_view kTrajectoryHeader = "step,tau,L,A_in,A_out,I,k_int,k2_int,gb_residual";
std::string trajectory_row(const FlowState& state);

} // namespace isoflow
