#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "isoflow/curve.hpp"
#include "isoflow/error.hpp"
#include "isoflow/flow.hpp"
#include "isoflow/io.hpp"

using namespace isoflow;

namespace {
constexpr double kPi = std::numbers::pi;

ClosedCurve unit_square() {
    return ClosedCurve({{0, 0}, {0.5, 0}, {1, 0}, {1, 0.5}, {1, 1}, {0.5, 1}, {0, 1}, {0, 0.5}});
}

ClosedCurve flat_table_metric_circle() { return ClosedCurve::circle({}, 1.0, 4096); }

ConformalMetric flat_table() { return ConformalMetric::radial_table({0.5, 1, 2, 4, 8}, {1, 1, 1, 1, 1}); }
} // namespace

TEST_CASE("construction validates and orients") {
    CHECK_THROWS_AS(ClosedCurve({{0, 0}, {1, 0}, {1, 1}}), Error);
    std::vector<Point> cw{{0, 0}, {0, 0.5}, {0, 1}, {0.5, 1}, {1, 1}, {1, 0.5}, {1, 0}, {0.5, 0}};
    ClosedCurve c(cw);
    CHECK(c.euclidean_area() == doctest::Approx(1.0));
    // figure eight
    std::vector<Point> eight;
    for (int i = 0; i < 64; ++i) {
        const double t = 2 * kPi * i / 64;
        eight.push_back({std::sin(t), std::sin(t) * std::cos(t)});
    }
    try {
        ClosedCurve bad(eight);
        FAIL("expected SelfIntersection");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SelfIntersection);
    }
    // repeated vertex
    std::vector<Point> rep{{0, 0}, {0, 0}, {1, 0}, {1, 1}, {0.5, 1}, {0, 1}, {0, 0.7}, {0, 0.5}};
    CHECK_THROWS_AS(ClosedCurve{rep}, Error);
    // touching vertex on a non-adjacent edge
    std::vector<Point> touch{{0, 0}, {2, 0}, {2, 2}, {1, 0}, {0, 2}, {-1, 2}, {-1, 1}, {-1, 0.5}};
    CHECK_FALSE(is_simple(touch));
    // fold-back on adjacent edges
    std::vector<Point> fold{{0, 0}, {1, 0}, {0.5, 0}, {0.5, 1}, {0, 1}, {-1, 1}, {-1, 0.5}, {-0.5, 0}};
    CHECK_FALSE(is_simple(fold));
}

TEST_CASE("lengths and areas") {
    const ClosedCurve circle = flat_table_metric_circle();
    CHECK(std::abs(length_g(circle, flat_table()) - 2 * kPi) < 1e-4);
    const auto sphere = ConformalMetric::round_sphere();
    CHECK(std::abs(length_g(circle, sphere) - 2 * kPi) < 1e-4);
    CHECK(std::abs(area_in(circle, sphere) - 2 * kPi) < 1e-3);
    const ClosedCurve sq = unit_square();
    CHECK(std::abs(length_g(sq, ConformalMetric::constant(4.0)) - 8.0) < 1e-9);
    CHECK(std::abs(area_in(sq, flat_table()) - 1.0) < 1e-9);
    const CurveMetrics m = isoperimetric_ratio(sq, sphere);
    CHECK(m.area_in + m.area_out == doctest::Approx(sphere.total_area()).epsilon(1e-14));

    const EuclideanIsoperimetric e = euclidean_isoperimetric_check(sq);
    CHECK(e.slack == doctest::Approx(16 - 4 * kPi).epsilon(1e-12));
    CHECK(std::abs(euclidean_isoperimetric_check(circle).slack) < 1e-4);
}

TEST_CASE("refinement converges at second order") {
    const auto sphere = ConformalMetric::round_sphere();
    double prev_err_l = 0, prev_err_a = 0;
    for (std::size_t n : {64u, 128u, 256u}) {
        const ClosedCurve c = ClosedCurve::circle({}, 1.0, n);
        const double el = std::abs(length_g(c, sphere) - 2 * kPi);
        const double ea = std::abs(area_in(c, sphere) - 2 * kPi);
        if (prev_err_l > 0) {
            CHECK(prev_err_l / el > 3.5);
            CHECK(prev_err_a / ea > 3.5);
        }
        prev_err_l = el;
        prev_err_a = ea;
    }
}

TEST_CASE("ratio examples and scaling") {
    const auto sphere = ConformalMetric::round_sphere();
    const ClosedCurve eq = ClosedCurve::circle({}, 1.0, 4096);
    CHECK(std::abs(isoperimetric_ratio(eq, sphere).ratio - 2.0) < 1e-3);
    CHECK(isoperimetric_ratio(ClosedCurve::circle({}, 0.5, 512), sphere).ratio > 2.0);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::vector<ConformalMetric> metrics{sphere, ConformalMetric::cusp_profile(2.0),
                                               ConformalMetric::log_bump(3.0, {0.5, -0.2}),
                                               ConformalMetric::sum({ConformalMetric::round_sphere(1, {-3, 0}),
                                                                     ConformalMetric::round_sphere(1, {3, 0})})};
    for (int trial = 0; trial < 1000; ++trial) {
        const auto& metric = metrics[static_cast<std::size_t>(trial) % metrics.size()];
        const Point center{4 * unit(rng) - 2, 4 * unit(rng) - 2};
        const double r = 0.2 + 3 * unit(rng);
        const double a2 = 0.3 * unit(rng), ph = 2 * kPi * unit(rng);
        const ClosedCurve c = ClosedCurve::polar(
            center, [&](double t) { return r * (1 + a2 * std::cos(2 * t + ph)); }, 32);
        const CurveMetrics m = isoperimetric_ratio(c, metric);
        CHECK(m.ratio >= 4 * m.length_g / metric.total_area() * (1 - 1e-12));
    }

    const ClosedCurve c = ClosedCurve::polar({0.3, 0.1}, [](double t) { return 0.8 + 0.2 * std::sin(3 * t); }, 256);
    const double base = isoperimetric_ratio(c, sphere).ratio;
    for (double s : {0.5, 2.0, 9.0}) {
        const double scaled = isoperimetric_ratio(c, ConformalMetric::scaled(s, sphere)).ratio;
        CHECK(std::abs(scaled / (base / std::sqrt(s)) - 1.0) < 1e-9);
    }
}

TEST_CASE("triangulation handles non-star polygons") {
    // comb-shaped polygon: fan from the centroid fails
    std::vector<Point> comb{{0, 0}, {5, 0}, {5, 3}, {4, 3}, {4, 1}, {3, 1}, {3, 3}, {2, 3}, {2, 1}, {1, 1}, {1, 3}, {0, 3}};
    ClosedCurve c(comb);
    const auto tris = triangulate(c);
    CHECK(tris.size() == comb.size() - 2);
    CHECK(area_in(c, ConformalMetric::constant(1.0)) == doctest::Approx(c.euclidean_area()).epsilon(1e-12));
    // a different starting vertex gives a different set of ears, same integral
    const auto sphere = ConformalMetric::round_sphere(2.0);
    CHECK(area_in(c, sphere) == doctest::Approx(area_in(c.rotated(5), sphere)).epsilon(1e-6));
}

TEST_CASE("circle comparison inequality") {
    auto c = circle_comparison_inequality(4, 3, 1, 1);
    CHECK(c.lhs == doctest::Approx(1.0));
    CHECK(c.rhs == doctest::Approx(4.0 / 3.0));
    CHECK(c.holds);
    c = circle_comparison_inequality(4, 3, 1, 0);
    CHECK(c.lhs == c.rhs);
    c = circle_comparison_inequality(4, 3, 1, 2);
    CHECK(c.lhs == doctest::Approx(c.rhs).epsilon(1e-15));
    CHECK(c.holds);
    CHECK_THROWS_AS(circle_comparison_inequality(4, 3, 1, 2.5), Error);
    CHECK_THROWS_AS(circle_comparison_inequality(5, 3, 1, 1), Error);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int violations = 0;
    for (int i = 0; i < 10000; ++i) {
        const double total = std::exp(10 * unit(rng) - 5);
        const double ain = total * (0.5 + 0.5 * unit(rng));
        const double aout = total - ain;
        if (!(aout > 0)) continue;
        const double shift = (ain - aout) * unit(rng);
        if (!circle_comparison_inequality(total, ain, aout, shift).holds) ++violations;
    }
    CHECK(violations == 0);
}

TEST_CASE("random convex polygons have positive slack") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> angles(20);
        for (auto& a : angles) a = 2 * kPi * unit(rng);
        std::sort(angles.begin(), angles.end());
        std::vector<Point> pts;
        for (double a : angles) pts.push_back({std::cos(a), std::sin(a)});
        bool distinct = true;
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (distance(pts[i], pts[(i + 1) % pts.size()]) < 1e-9) distinct = false;
        if (!distinct) continue;
        CHECK(euclidean_isoperimetric_check(ClosedCurve(pts)).slack > 0);
    }
}

TEST_CASE("curve csv round trip") {
    const ClosedCurve c = ClosedCurve::polar({0.1, 0.2}, [](double t) { return 1 + 0.1 * std::cos(5 * t); }, 37);
    const auto path = std::filesystem::temp_directory_path() / "isoflow_curve_roundtrip.csv";
    write_curve_csv(path, c);
    const ClosedCurve back = read_curve_csv(path);
    REQUIRE(back.size() == c.size());
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(back[i] == c[i]);
    std::filesystem::remove(path);
    CHECK(format_number(0.1) == "0.10000000000000001");
}
