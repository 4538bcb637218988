#pragma once

// Numerical integration helpers shared by the metric, curve and hypothesis
// modules: composite Gauss-Legendre panels, a collapsed tensor rule on
// triangles, and extrapolated improper integrals.

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "isoflow/geometry.hpp"

namespace isoflow::quad {

/// 16-point Gauss-Legendre on [a, b].
template <class F>
double gauss16(F&& f, double a, double b) {
    return boost::math::quadrature::gauss<double, 16>::integrate(f, a, b);
}

/// Composite 16-point rule over `panels` equal panels of [a, b].
template <class F>
double composite_gauss(F&& f, double a, double b, int panels) {
    const double h = (b - a) / panels;
    double sum = 0.0;
    for (int i = 0; i < panels; ++i) sum += gauss16(f, a + i * h, a + (i + 1) * h);
    return sum;
}

/// Composite rule with panel width at most `max_width`.
template <class F>
double composite_gauss_width(F&& f, double a, double b, double max_width) {
    if (b <= a) return 0.0;
    const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / max_width)));
    return composite_gauss(f, a, b, panels);
}

struct Node1D {
    double x;  // in [0, 1]
    double w;  // weights sum to 1
};

/// Gauss-Legendre nodes on [0, 1]; supported orders 2..10.
std::span<const Node1D> legendre_nodes(int order);

struct TriangleNode {
    double b1, b2;  // barycentric weights of vertices b and c (vertex a gets 1-b1-b2)
    double w;       // weights sum to 1 (multiply by triangle area)
};

/// Collapsed (Duffy) Gauss-Legendre tensor rule with order^2 nodes, exact for
/// polynomials of degree 2*order-2 on the triangle.
std::span<const TriangleNode> triangle_rule(int order);

template <class F>
double integrate_triangle(F&& f, Point a, Point b, Point c, int order) {
    const double area = 0.5 * std::abs(cross(b - a, c - a));
    double sum = 0.0;
    for (const auto& n : triangle_rule(order)) sum += n.w * f(a + n.b1 * (b - a) + n.b2 * (c - a));
    return area * sum;
}

struct TailResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int doublings = 0;
};

/// Integral of g over [s0, infinity) by panel sums on [s0, s0 + w 2^k] and
/// polynomial extrapolation in 1/S. Throws Error(DivergentTail) when the
/// partial sums do not settle within `max_doublings`.
TailResult extrapolated_tail(const std::function<double(double)>& g, double s0, double tol,
                             double first_width = 1.0, int max_doublings = 9);

/// Radial/angular quadrature of f over the disk |p - center| < r_max with
/// 16-point panels in s = log(1 + r) and a periodic trapezoid in angle.
double disk_integral(const std::function<double(Point)>& f, Point center, double r_max,
                     int angular_samples = 64, double panel_width = 0.125);

} // namespace isoflow::quad
