#include "isoflow/curve.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <numbers>
#include <numeric>
#include <string>

#include "isoflow/error.hpp"
#include "isoflow/flow.hpp"
#include "isoflow/quadrature.hpp"

namespace isoflow {
namespace {

constexpr double kPi = std::numbers::pi;

/// Sign of the orientation determinant of (a, b, c); exact when the
/// floating-point value is within 1e-12 of the operand scale.
int orientation(Point a, Point b, Point c) {
    const double det = cross(b - a, c - a);
    const double scale = norm(b - a) * norm(c - a);
    if (std::abs(det) > 1e-12 * scale) return det > 0 ? 1 : -1;
    using boost::multiprecision::cpp_rational;
    const cpp_rational ax(a.x), ay(a.y), bx(b.x), by(b.y), cx(c.x), cy(c.y);
    const cpp_rational exact = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
    return exact > 0 ? 1 : (exact < 0 ? -1 : 0);
}

bool on_segment(Point p, Point a, Point b) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
           p.y <= std::max(a.y, b.y);
}

bool segments_meet(Point p1, Point p2, Point q1, Point q2) {
    const int o1 = orientation(p1, p2, q1);
    const int o2 = orientation(p1, p2, q2);
    const int o3 = orientation(q1, q2, p1);
    const int o4 = orientation(q1, q2, p2);
    if (o1 * o2 < 0 && o3 * o4 < 0) return true;
    return (o1 == 0 && on_segment(q1, p1, p2)) || (o2 == 0 && on_segment(q2, p1, p2)) ||
           (o3 == 0 && on_segment(p1, q1, q2)) || (o4 == 0 && on_segment(p2, q1, q2));
}

} // namespace

double signed_area(std::span<const Point> polygon) {
    const std::size_t n = polygon.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += cross(polygon[i], polygon[(i + 1) % n]);
    return 0.5 * sum;
}

bool is_simple(std::span<const Point> polygon) {
    const std::size_t n = polygon.size();
    if (n < 3) return false;
    struct Edge {
        std::size_t i;
        double xmin, xmax, ymin, ymax;
    };
    std::vector<Edge> edges;
    edges.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Point a = polygon[i];
        const Point b = polygon[(i + 1) % n];
        edges.push_back({i, std::min(a.x, b.x), std::max(a.x, b.x), std::min(a.y, b.y), std::max(a.y, b.y)});
        // adjacent edges may only share their common vertex
        const Point c = polygon[(i + 2) % n];
        if (orientation(a, b, c) == 0 && dot(b - a, c - b) < 0) return false;
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& l, const Edge& r) { return l.xmin < r.xmin; });

    std::vector<const Edge*> active;
    for (const Edge& e : edges) {
        std::erase_if(active, [&](const Edge* a) { return a->xmax < e.xmin; });
        for (const Edge* a : active) {
            const std::size_t d = (e.i + n - a->i) % n;
            if (d == 1 || d == n - 1) continue;
            if (a->ymax < e.ymin || e.ymax < a->ymin) continue;
            if (segments_meet(polygon[a->i], polygon[(a->i + 1) % n], polygon[e.i], polygon[(e.i + 1) % n]))
                return false;
        }
        active.push_back(&e);
    }
    return true;
}

ClosedCurve::ClosedCurve(std::vector<Point> vertices) : vertices_(std::move(vertices)) {
    const std::size_t n = vertices_.size();
    if (n < kMinVertices)
        throw Error(ErrorCode::InvalidCurve, "a closed curve needs at least " + std::to_string(kMinVertices) + " vertices");
    for (std::size_t i = 0; i < n; ++i) {
        const Point a = vertices_[i];
        if (!std::isfinite(a.x) || !std::isfinite(a.y)) throw Error(ErrorCode::InvalidCurve, "vertex is not finite");
        if (a == vertices_[(i + 1) % n]) throw Error(ErrorCode::InvalidCurve, "repeated consecutive vertex");
    }
    const double area = signed_area(vertices_);
    if (area == 0.0) throw Error(ErrorCode::InvalidCurve, "polygon encloses no area");
    if (area < 0.0) std::reverse(vertices_.begin(), vertices_.end());
    if (!is_simple(vertices_)) throw Error(ErrorCode::SelfIntersection, "polygon is not simple");
}

ClosedCurve ClosedCurve::circle(Point center, double radius, std::size_t n) {
    return polar(center, [radius](double) { return radius; }, n);
}

ClosedCurve ClosedCurve::polar(Point center, const std::function<double(double)>& radius, std::size_t n) {
    std::vector<Point> v;
    v.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double theta = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
        const double r = radius(theta);
        v.push_back(center + Vec2{r * std::cos(theta), r * std::sin(theta)});
    }
    return ClosedCurve(std::move(v));
}

const Point& ClosedCurve::vertex(std::ptrdiff_t i) const {
    const auto n = static_cast<std::ptrdiff_t>(vertices_.size());
    return vertices_[static_cast<std::size_t>(((i % n) + n) % n)];
}

double ClosedCurve::euclidean_area() const { return signed_area(vertices_); }

double ClosedCurve::euclidean_length() const {
    double sum = 0.0;
    for (std::size_t i = 0; i < size(); ++i) sum += distance(vertices_[i], vertices_[(i + 1) % size()]);
    return sum;
}

Point ClosedCurve::centroid() const {
    double cx = 0.0, cy = 0.0;
    const Point o = vertices_[0];
    for (std::size_t i = 0; i < size(); ++i) {
        const Point a = vertices_[i] - o;
        const Point b = vertices_[(i + 1) % size()] - o;
        const double w = cross(a, b);
        cx += (a.x + b.x) * w;
        cy += (a.y + b.y) * w;
    }
    const double six_area = 6.0 * euclidean_area();
    return o + Vec2{cx / six_area, cy / six_area};
}

double ClosedCurve::diameter() const {
    double xmin = vertices_[0].x, xmax = xmin, ymin = vertices_[0].y, ymax = ymin;
    for (Point p : vertices_) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    return std::hypot(xmax - xmin, ymax - ymin);
}

double ClosedCurve::min_edge() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < size(); ++i) m = std::min(m, distance(vertices_[i], vertices_[(i + 1) % size()]));
    return m;
}

double ClosedCurve::max_edge() const {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i) m = std::max(m, distance(vertices_[i], vertices_[(i + 1) % size()]));
    return m;
}

ClosedCurve ClosedCurve::rotated(std::size_t k) const {
    std::vector<Point> v(vertices_.begin(), vertices_.end());
    std::rotate(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k % v.size()), v.end());
    return ClosedCurve(std::move(v));
}

std::vector<Triangle> triangulate(const ClosedCurve& curve) {
    const auto v = curve.vertices();
    const std::size_t n = v.size();
    const Point c = curve.centroid();
    std::vector<Triangle> fan;
    fan.reserve(n);
    bool star = true;
    for (std::size_t i = 0; i < n && star; ++i) {
        const Point a = v[i];
        const Point b = v[(i + 1) % n];
        star = cross(a - c, b - c) > 1e-14 * norm(a - c) * norm(b - c);
        fan.push_back({c, a, b});
    }
    if (star) return fan;

    // Ear clipping.
    std::vector<Triangle> out;
    out.reserve(n - 2);
    std::list<std::size_t> ring(n);
    std::iota(ring.begin(), ring.end(), std::size_t{0});
    auto next = [&](std::list<std::size_t>::iterator it) { return ++it == ring.end() ? ring.begin() : it; };
    auto prev = [&](std::list<std::size_t>::iterator it) { return it == ring.begin() ? std::prev(ring.end()) : std::prev(it); };

    auto it = ring.begin();
    std::size_t guard = 0;
    while (ring.size() > 3) {
        const auto ip = prev(it);
        const auto in = next(it);
        const Point a = v[*ip], b = v[*it], d = v[*in];
        bool ear = orientation(a, b, d) > 0;
        if (ear) {
            for (std::size_t k : ring) {
                if (k == *ip || k == *it || k == *in) continue;
                const Point p = v[k];
                if (orientation(a, b, p) >= 0 && orientation(b, d, p) >= 0 && orientation(d, a, p) >= 0) {
                    ear = false;
                    break;
                }
            }
        }
        if (ear) {
            out.push_back({a, b, d});
            it = ring.erase(it);
            if (it == ring.end()) it = ring.begin();
            guard = 0;
        } else {
            it = in;
            if (++guard > ring.size()) throw Error(ErrorCode::TriangulationFailure, "no ear found");
        }
    }
    const auto i0 = ring.begin();
    out.push_back({v[*i0], v[*std::next(i0)], v[*std::next(i0, 2)]});
    return out;
}

double length_g(const ClosedCurve& curve, const ConformalMetric& metric) {
    // two-point Gauss rule per edge
    const double g = 0.5 / std::sqrt(3.0);
    double sum = 0.0;
    const std::size_t n = curve.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point a = curve[i];
        const Point b = curve[(i + 1) % n];
        const Vec2 e = b - a;
        const double su = std::sqrt(metric.u(a + (0.5 - g) * e)) + std::sqrt(metric.u(a + (0.5 + g) * e));
        sum += 0.5 * su * norm(e);
    }
    return sum;
}

namespace {

/// Calls visit(point, weight) for every node of the interior rule.
template <class Visit>
void for_each_interior_node(const ClosedCurve& curve, const ConformalMetric& metric, const InteriorRule& rule,
                            Visit&& visit) {
    const auto radial = quad::legendre_nodes(rule.radial_order);
    const auto angular = quad::legendre_nodes(rule.angular_order);
    const double eta = rule.panel_fraction;
    const std::vector<Circle> kinks = metric.kinks();
    std::vector<double> forced;
    for (const auto& tri : triangulate(curve)) {
        const Vec2 eb = tri.b - tri.a;
        const Vec2 ec = tri.c - tri.a;
        const double twice_area = std::abs(cross(eb, ec));
        const double reach = std::max(norm(eb), norm(ec));
        const double base = distance(tri.b, tri.c);
        const Point mid = tri.a + 0.5 * (eb + ec);
        auto scale_at = [&](double s) { return metric.length_scale(tri.a + s * (mid - tri.a)); };
        // panel breaks where the median crosses a kink circle
        forced.clear();
        const Vec2 d = mid - tri.a;
        for (const Circle& k : kinks) {
            const Vec2 f = tri.a - k.center;
            const double qa = norm2(d), qb = 2.0 * dot(f, d), qc = norm2(f) - k.radius * k.radius;
            const double disc = qb * qb - 4.0 * qa * qc;
            if (disc <= 0.0) continue;
            for (double root : {(-qb - std::sqrt(disc)) / (2.0 * qa), (-qb + std::sqrt(disc)) / (2.0 * qa)})
                if (root > 1e-9 && root < 1.0 - 1e-9) forced.push_back(root);
        }
        std::sort(forced.begin(), forced.end());
        std::size_t next_forced = 0;
        double s0 = 0.0;
        while (s0 < 1.0) {
            const double l0 = scale_at(s0);
            double step = eta * l0 / reach;
            while (next_forced < forced.size() && forced[next_forced] <= s0) ++next_forced;
            if (next_forced < forced.size()) step = std::min(step, forced[next_forced] - s0);
            double s1 = std::min(1.0, s0 + step);
            const double l1 = scale_at(s1);
            if (eta * l1 / reach < step) s1 = std::min(1.0, s0 + eta * l1 / reach);
            const double lmin = std::min(l0, scale_at(s1));
            const double width = s1 * base;
            const int tpanels = std::isfinite(lmin) ? std::max(1, static_cast<int>(std::ceil(width / (eta * lmin)))) : 1;
            const double ds = s1 - s0;
            const double dt = 1.0 / tpanels;
            for (const auto& nr : radial) {
                const double sigma = s0 + ds * nr.x;
                const double wr = twice_area * sigma * ds * nr.w;
                for (int k = 0; k < tpanels; ++k) {
                    for (const auto& na : angular) {
                        const double t = (k + na.x) * dt;
                        visit(tri.a + sigma * ((1.0 - t) * eb + t * ec), wr * dt * na.w);
                    }
                }
            }
            s0 = s1;
        }
    }
}

} // namespace

double area_in(const ClosedCurve& curve, const ConformalMetric& metric, const InteriorRule& rule) {
    double sum = 0.0;
    for_each_interior_node(curve, metric, rule, [&](Point p, double w) { sum += w * metric.u(p); });
    return sum;
}

InteriorIntegrals interior_integrals(const ClosedCurve& curve, const ConformalMetric& metric, const InteriorRule& rule) {
    InteriorIntegrals out;
    for_each_interior_node(curve, metric, rule, [&](Point p, double w) {
        const Jet j = metric.jet(p);
        // K u = -Laplacian(log u) / 2
        const double lap_log = j.laplacian / j.u - norm2(j.grad) / (j.u * j.u);
        out.area += w * j.u;
        out.curvature += w * (-0.5 * lap_log);
    });
    return out;
}

CurveMetrics isoperimetric_ratio(const ClosedCurve& curve, const ConformalMetric& metric) {
    CurveMetrics m;
    m.length_g = length_g(curve, metric);
    const InteriorIntegrals interior = interior_integrals(curve, metric);
    m.area_in = interior.area;
    if (metric.has_finite_area()) {
        m.area_out = metric.total_area() - m.area_in;
        m.ratio = m.length_g * (1.0 / m.area_in + 1.0 / m.area_out);
    } else {
        m.area_out = std::numeric_limits<double>::infinity();
        m.ratio = m.length_g / m.area_in;
    }
    const CurvatureSample k = geodesic_curvature(curve, metric);
    m.total_curvature = k.total_curvature();
    m.curvature_energy = k.curvature_energy();
    m.gb_residual = std::abs(m.total_curvature + interior.curvature - 2.0 * kPi);
    return m;
}

EuclideanIsoperimetric euclidean_isoperimetric_check(const ClosedCurve& curve) {
    EuclideanIsoperimetric out;
    out.length = curve.euclidean_length();
    out.area = curve.euclidean_area();
    out.slack = out.length * out.length - 4.0 * kPi * out.area;
    return out;
}

CircleComparison circle_comparison_inequality(double total, double area_inside, double area_outside, double shift) {
    if (!(total > 0.0 && area_inside > 0.0 && area_outside > 0.0))
        throw Error(ErrorCode::DomainError, "areas must be positive");
    if (std::abs(area_inside + area_outside - total) > 1e-9 * total)
        throw Error(ErrorCode::DomainError, "A_in + A_out must equal the total area");
    if (shift < 0.0 || shift > area_inside - area_outside)
        throw Error(ErrorCode::DomainError, "shift must lie in [0, A_in - A_out]");
    CircleComparison c;
    c.lhs = 1.0 / (area_inside - shift) + 1.0 / (area_outside + shift);
    c.rhs = 1.0 / area_inside + 1.0 / area_outside;
    c.holds = c.lhs <= c.rhs * (1.0 + 4.0 * std::numeric_limits<double>::epsilon());
    return c;
}

} // namespace isoflow
