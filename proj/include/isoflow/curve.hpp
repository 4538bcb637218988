#pragma once

// Simple closed polygons and the isoperimetric functionals on them.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "isoflow/geometry.hpp"
#include "isoflow/metric.hpp"

namespace isoflow {

/// Counterclockwise simple polygon with at least kMinVertices vertices,
/// implicitly closed.
class ClosedCurve {
public:
    static constexpr std::size_t kMinVertices = 8;

    /// Validates the vertex list and reorders it counterclockwise.
    /// Throws InvalidCurve or SelfIntersection.
    explicit ClosedCurve(std::vector<Point> vertices);

    static ClosedCurve circle(Point center, double radius, std::size_t n);
    /// Star-shaped curve |x - center| = radius(theta).
    static ClosedCurve polar(Point center, const std::function<double(double)>& radius, std::size_t n);

    std::span<const Point> vertices() const { return vertices_; }
    std::size_t size() const { return vertices_.size(); }
    const Point& operator[](std::size_t i) const { return vertices_[i]; }
    const Point& vertex(std::ptrdiff_t i) const;  // cyclic index

    double euclidean_area() const;
    double euclidean_length() const;
    Point centroid() const;
    double diameter() const;
    double min_edge() const;
    double max_edge() const;
    /// Same curve with the vertex list started at index k.
    ClosedCurve rotated(std::size_t k) const;

private:
    std::vector<Point> vertices_;
};

/// Signed shoelace area (positive for counterclockwise).
double signed_area(std::span<const Point> polygon);

/// True when no two non-adjacent edges meet and adjacent edges do not fold back.
bool is_simple(std::span<const Point> polygon);

struct Triangle {
    Point a, b, c;
};

/// Fan from the centroid when the polygon is star-shaped about it, ear
/// clipping otherwise. Throws TriangulationFailure.
std::vector<Triangle> triangulate(const ClosedCurve& curve);

struct CurveMetrics {
    double length_g = 0.0;
    double area_in = 0.0;
    double area_out = 0.0;  ///< total area minus area_in; infinite for infinite-area metrics
    double ratio = 0.0;
    double total_curvature = 0.0;   ///< integral of k ds
    double curvature_energy = 0.0;  ///< integral of k^2 ds
    double gb_residual = 0.0;
};

struct InteriorIntegrals {
    double area = 0.0;       ///< integral of u over the enclosed region
    double curvature = 0.0;  ///< integral of K dV over the enclosed region
};

/// Interior quadrature: each triangle is cut into collapsed-coordinate panels
/// no longer than `panel_fraction` times the metric's local length scale,
/// with `radial_order` x `angular_order` Gauss nodes per panel.
struct InteriorRule {
    double panel_fraction = 0.5;
    int radial_order = 8;
    int angular_order = 3;
};

double length_g(const ClosedCurve& curve, const ConformalMetric& metric);
double area_in(const ClosedCurve& curve, const ConformalMetric& metric, const InteriorRule& rule = {});
InteriorIntegrals interior_integrals(const ClosedCurve& curve, const ConformalMetric& metric,
                                     const InteriorRule& rule = {});
CurveMetrics isoperimetric_ratio(const ClosedCurve& curve, const ConformalMetric& metric);

struct EuclideanIsoperimetric {
    double length = 0.0;
    double area = 0.0;
    double slack = 0.0;  ///< length^2 - 4 pi area
};
EuclideanIsoperimetric euclidean_isoperimetric_check(const ClosedCurve& curve);

struct CircleComparison {
    double lhs = 0.0;  ///< 1/(A_in - shift) + 1/(A_out + shift)
    double rhs = 0.0;  ///< 1/A_in + 1/A_out
    bool holds = false;
};
/// Moving area `shift` from the larger side to the smaller never increases
/// the reciprocal-area sum. Throws DomainError outside 0 <= shift <= A_in - A_out.
CircleComparison circle_comparison_inequality(double total, double area_inside, double area_outside, double shift);

} // namespace isoflow
