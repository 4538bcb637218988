#include "isoflow/quadrature.hpp"

#include <array>
#include <limits>
#include <mutex>
#include <numbers>

#include "isoflow/error.hpp"

namespace isoflow::quad {
namespace {

template <unsigned N>
std::vector<Node1D> boost_nodes() {
    using Rule = boost::math::quadrature::gauss<double, N>;
    const auto& x = Rule::abscissa();
    const auto& w = Rule::weights();
    std::vector<Node1D> nodes;
    // Boost stores the non-negative half; rebuild the full symmetric rule.
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0) {
            nodes.push_back({0.5, 0.5 * w[i]});
        } else {
            nodes.push_back({0.5 * (1.0 - x[i]), 0.5 * w[i]});
            nodes.push_back({0.5 * (1.0 + x[i]), 0.5 * w[i]});
        }
    }
    return nodes;
}

const std::array<std::vector<Node1D>, 11>& node_table() {
    static const std::array<std::vector<Node1D>, 11> table = {
        std::vector<Node1D>{}, std::vector<Node1D>{{0.5, 1.0}},
        boost_nodes<2>(), boost_nodes<3>(), boost_nodes<4>(), boost_nodes<5>(),
        boost_nodes<6>(), boost_nodes<7>(), boost_nodes<8>(), boost_nodes<9>(),
        boost_nodes<10>()};
    return table;
}

std::vector<TriangleNode> build_triangle_rule(int order) {
    // Map the unit square (s, t) onto the triangle with b1 = s (1 - t), b2 = s t.
    const auto nodes = legendre_nodes(order);
    std::vector<TriangleNode> rule;
    rule.reserve(nodes.size() * nodes.size());
    for (const auto& ns : nodes)
        for (const auto& nt : nodes)
            rule.push_back({ns.x * (1.0 - nt.x), ns.x * nt.x, 2.0 * ns.w * nt.w * ns.x});
    return rule;
}

} // namespace

std::span<const Node1D> legendre_nodes(int order) {
    if (order < 1 || order > 10) throw Error(ErrorCode::DomainError, "Gauss-Legendre order must be in 1..10");
    return node_table()[static_cast<std::size_t>(order)];
}

std::span<const TriangleNode> triangle_rule(int order) {
    static const auto rules = [] {
        std::array<std::vector<TriangleNode>, 11> r;
        for (int k = 1; k <= 10; ++k) r[static_cast<std::size_t>(k)] = build_triangle_rule(k);
        return r;
    }();
    if (order < 1 || order > 10) throw Error(ErrorCode::DomainError, "triangle rule order must be in 1..10");
    return rules[static_cast<std::size_t>(order)];
}

TailResult extrapolated_tail(const std::function<double(double)>& g, double s0, double tol,
                             double first_width, int max_doublings) {
    std::vector<double> h;        // 1 / S_k
    std::vector<double> partial;  // integral over [s0, S_k]
    std::vector<double> increments;
    double upper = s0;
    double running = 0.0;
    double width = first_width;
    double previous_estimate = std::numeric_limits<double>::quiet_NaN();

    for (int k = 0; k <= max_doublings; ++k) {
        const double next = s0 + width;
        const double piece = composite_gauss_width(g, upper, next, 1.0);
        if (!std::isfinite(piece)) throw Error(ErrorCode::DivergentTail, "integrand is not finite");
        running += piece;
        increments.push_back(std::abs(piece));
        upper = next;
        width *= 2.0;
        h.push_back(1.0 / upper);
        partial.push_back(running);

        // Neville extrapolation of partial(h) to h = 0 over the last few points.
        const std::size_t m = std::min<std::size_t>(partial.size(), 4);
        std::vector<double> p(partial.end() - static_cast<std::ptrdiff_t>(m), partial.end());
        std::vector<double> hh(h.end() - static_cast<std::ptrdiff_t>(m), h.end());
        for (std::size_t level = 1; level < m; ++level)
            for (std::size_t i = m - 1; i >= level; --i)
                p[i] = (hh[i - level] * p[i] - hh[i] * p[i - 1]) / (hh[i - level] - hh[i]);
        const double estimate = p[m - 1];

        // Increments of a convergent tail shrink geometrically as the window doubles.
        if (increments.size() >= 4) {
            const std::size_t n = increments.size();
            const bool stagnant = increments[n - 1] > 0.8 * increments[n - 2] &&
                                  increments[n - 2] > 0.8 * increments[n - 3];
            if (stagnant && increments[n - 1] > tol * std::abs(running))
                throw Error(ErrorCode::DivergentTail, "partial integrals do not settle");
        }
        if (k >= 2 && std::isfinite(previous_estimate)) {
            const double err = std::abs(estimate - previous_estimate);
            if (err <= tol * std::max(std::abs(estimate), 1e-300) || increments.back() == 0.0)
                return {estimate, err, k};
        }
        previous_estimate = estimate;
    }
    throw Error(ErrorCode::DivergentTail, "extrapolation budget exhausted");
}

double disk_integral(const std::function<double(Point)>& f, Point center, double r_max,
                     int angular_samples, double panel_width) {
    const double two_pi = 2.0 * std::numbers::pi;
    auto radial = [&](double s) {
        const double r = std::expm1(s);
        double ring = 0.0;
        for (int j = 0; j < angular_samples; ++j) {
            const double theta = two_pi * j / angular_samples;
            ring += f(center + Vec2{r * std::cos(theta), r * std::sin(theta)});
        }
        ring *= two_pi / angular_samples;
        return ring * r * (r + 1.0);  // r dr = r (1 + r) ds
    };
    return composite_gauss_width(radial, 0.0, std::log1p(r_max), panel_width);
}

} // namespace isoflow::quad
