#pragma once

// Conformal metrics g = u * delta_ij on the plane.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "isoflow/geometry.hpp"

namespace isoflow {

/// Value, gradient and Laplacian of the conformal factor at a point.
struct Jet {
    double u = 0.0;
    Vec2 grad;
    double laplacian = 0.0;
};

/// Decreasing radial bounds lambda1(|x|) <= u(x) <= lambda2(|x|) for |x| >= r0.
struct RadialEnvelope {
    std::function<double(double)> lambda1;
    std::function<double(double)> lambda2;
    double r0 = 2.0;
    /// integral of sqrt(lambda1) over [a, b], when known in closed form
    std::function<double(double, double)> sqrt_lambda1_integral;
    /// integral of rho * lambda2 over [r, infinity), when known in closed form
    std::function<double(double)> rho_lambda2_tail;
    /// Profile constants when both bounds are C_i / (r log r)^2.
    std::optional<std::pair<double, double>> cusp_constants;
};

/// lambda_i = C_i / (r log r)^2 with closed-form integrals.
RadialEnvelope cusp_envelope(double c1, double c2, double r0);

/// Integral of rho * lambda2 over [r, infinity).
double envelope_tail_integral(const RadialEnvelope& env, double r);

/// Integral of sqrt(lambda1) over [a, b] (closed form or log-substituted quadrature).
double envelope_sqrt_integral(const RadialEnvelope& env, double a, double b);

/// How a radial table continues past its last sample.
enum class TableTail { PowerLaw, Cusp };

namespace detail {
struct MetricModel;
}

class ConformalMetric {
public:
    static ConformalMetric round_sphere(double scale = 1.0, Point center = {});
    /// C / (r^2 (log r)^2) outside r_cap; inside, log u is a cubic in r^2
    /// matched to third order at r_cap.
    static ConformalMetric cusp_profile(double C = 1.0, double r_cap = 2.718281828459045);
    static ConformalMetric constant(double value);
    /// u(r) = (mass / pi) / ((e + r^2) log^2(e + r^2)); total area `mass`,
    /// tail ~ (mass / 4 pi) / (r^2 log^2 r).
    static ConformalMetric log_bump(double mass, Point center = {});
    /// Radial table; log u is a cubic spline in log r (zero slope at the
    /// first sample, constant inside it).
    static ConformalMetric radial_table(std::vector<double> radii, std::vector<double> values,
                                        TableTail tail = TableTail::PowerLaw);
    static ConformalMetric scaled(double factor, const ConformalMetric& metric);
    static ConformalMetric sum(const std::vector<ConformalMetric>& terms);

    /// Same metric with an explicitly supplied envelope.
    ConformalMetric with_envelope(RadialEnvelope env) const;

    double u(Point p) const;
    Jet jet(Point p) const;
    Vec2 grad_log_u(Point p) const;
    double gauss_curvature(Point p) const;
    /// Integral of u over the plane; computed once and cached.
    double total_area() const;
    bool has_finite_area() const;
    /// Radius about `center` enclosing half of the total area (radial leaves only);
    /// used to size default search circles.
    double half_mass_radius() const;
    /// Centers of the radial building blocks (origin for flat metrics).
    std::vector<Point> centers() const;
    const std::optional<RadialEnvelope>& envelope() const;
    bool uses_table() const;
    /// Local distance over which u varies appreciably (distance to the nearest
    /// building block's center plus its core size); infinite for flat metrics.
    double length_scale(Point p) const;
    /// Circles where a closed-form profile is only finitely smooth (cusp caps).
    std::vector<Circle> kinks() const;
    std::string family() const;
    nlohmann::json describe() const;

private:
    explicit ConformalMetric(std::shared_ptr<const detail::MetricModel> model);
    std::shared_ptr<const detail::MetricModel> model_;
};

double eval_u(const ConformalMetric& metric, Point p);
double total_area(const ConformalMetric& metric);
double gauss_curvature(const ConformalMetric& metric, Point p);

/// K = -Laplacian(log u) / (2u) with a five-point stencil of step h.
double gauss_curvature_fd(const ConformalMetric& metric, Point p, double h = 1e-3);

/// Quadrature of K dV over the disk |x| < r_max.
double integrated_curvature(const ConformalMetric& metric, double r_max);

} // namespace isoflow
