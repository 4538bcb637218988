#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "isoflow/curve.hpp"
#include "isoflow/error.hpp"
#include "isoflow/flow.hpp"

using namespace isoflow;

namespace {
constexpr double kPi = std::numbers::pi;

double max_radial_deviation(const ClosedCurve& c, double r) {
    double worst = 0;
    for (Point p : c.vertices()) worst = std::max(worst, std::abs(norm(p) - r));
    return worst;
}

ClosedCurve wavy_equator(std::mt19937_64& rng, std::size_t n, double amplitude) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> amp, phase;
    for (int m = 2; m <= 8; ++m) {
        amp.push_back(unit(rng));
        phase.push_back(2 * kPi * unit(rng));
    }
    double total = 0;
    for (double a : amp) total += a;
    return ClosedCurve::polar({}, [&](double t) {
        double r = 1.0;
        for (std::size_t i = 0; i < amp.size(); ++i)
            r += amplitude * amp[i] / total * std::sin(static_cast<double>(i + 2) * t + phase[i]);
        return r;
    }, n);
}
} // namespace

TEST_CASE("geodesic curvature examples") {
    const ClosedCurve c = ClosedCurve::circle({}, 2.0, 4096);
    const auto flat = ConformalMetric::constant(1.0);
    auto k = geodesic_curvature(c, flat);
    for (double ki : k.k) CHECK(std::abs(ki - 0.5) < 1e-6);
    CHECK(k.degenerate_count() == 0);

    k = geodesic_curvature(c, ConformalMetric::constant(9.0));
    for (double ki : k.k) CHECK(std::abs(ki - 1.0 / 6.0) < 1e-6);

    const ClosedCurve eq = ClosedCurve::circle({}, 1.0, 4096);
    k = geodesic_curvature(eq, ConformalMetric::round_sphere());
    for (double ki : k.k) CHECK(std::abs(ki) < 1e-6);

    // collinear midpoints are flagged
    const ClosedCurve sq({{0, 0}, {0.5, 0}, {1, 0}, {1, 0.5}, {1, 1}, {0.5, 1}, {0, 1}, {0, 0.5}});
    k = geodesic_curvature(sq, flat);
    CHECK(k.degenerate_count() == 4);
    CHECK(k.total_curvature() == doctest::Approx(2 * kPi));
}

TEST_CASE("gauss-bonnet residual") {
    CHECK(gauss_bonnet_residual(ClosedCurve::circle({}, 1.0, 4096), ConformalMetric::constant(1.0)) < 1e-4);
    CHECK(gauss_bonnet_residual(ClosedCurve::circle({}, 1.0, 4096), ConformalMetric::round_sphere()) < 1e-3);
    CHECK(gauss_bonnet_residual(ClosedCurve::circle({}, 0.3, 1024), ConformalMetric::round_sphere()) < 1e-3);
    CHECK(gauss_bonnet_residual(ClosedCurve::circle({0.4, 0.2}, 1.5, 1024), ConformalMetric::round_sphere()) < 1e-3);
    CHECK(gauss_bonnet_residual(ClosedCurve::circle({0.0, 0.0}, 4.0, 1024), ConformalMetric::cusp_profile()) < 1e-3);
    CHECK(gauss_bonnet_residual(ClosedCurve::circle({0.5, 0.0}, 2.0, 1024), ConformalMetric::cusp_profile(1.5)) < 1e-3);
}

TEST_CASE("resampling keeps a circle") {
    const ClosedCurve c = ClosedCurve::polar({}, [](double) { return 1.0; }, 200);
    const ClosedCurve r = resample(c, 333);
    CHECK(r.size() == 333);
    CHECK(max_radial_deviation(r, 1.0) < 1e-7);
    CHECK(r[0] == c[0]);
}

TEST_CASE("flat shrinking circle") {
    const auto flat = ConformalMetric::constant(1.0);
    FlowOptions opts;
    FlowState s = make_flow_state(ClosedCurve::circle({}, 1.0, 128), flat);
    int steps = 0;
    while (s.tau < 0.45 && s.status == FlowStatus::Running) {
        s = flow_step(s, flat, opts);
        ++steps;
        const double expected = std::sqrt(1.0 - 2.0 * s.tau);
        double mean = 0;
        for (Point p : s.curve.vertices()) mean += norm(p);
        mean /= static_cast<double>(s.curve.size());
        REQUIRE(std::abs(mean / expected - 1.0) < 0.01);
        REQUIRE(s.metrics.gb_residual < 1e-3);
    }
    CHECK(s.status == FlowStatus::Running);
    CHECK(steps > 100);
}

TEST_CASE("flat circle runs into the collapse guard") {
    const auto flat = ConformalMetric::constant(1.0);
    FlowOptions opts;
    FlowState s = make_flow_state(ClosedCurve::circle({}, 0.1, 16), flat);
    while (s.status == FlowStatus::Running) s = flow_step(s, flat, opts);
    CHECK(s.status == FlowStatus::Collapsed);
    CHECK(s.tau < 0.005 + 1e-4);
}

TEST_CASE("equator is stationary") {
    const auto sphere = ConformalMetric::round_sphere();
    FlowOptions opts;
    FlowState s = make_flow_state(ClosedCurve::circle({}, 1.0, 512), sphere);
    for (int i = 0; i < 1000; ++i) s = flow_step(s, sphere, opts);
    CHECK(s.status == FlowStatus::Running);
    CHECK(max_radial_deviation(s.curve, 1.0) < 1e-3);
}

TEST_CASE("evolution identities in finite differences") {
    const auto sphere = ConformalMetric::round_sphere();
    FlowOptions opts;
    const ClosedCurve c = ClosedCurve::polar({}, [](double t) { return 1.1 + 0.05 * std::cos(3 * t); }, 256);
    const CurveMetrics m0 = isoperimetric_ratio(c, sphere);
    const double dt = stable_dt(c, sphere, opts);
    std::vector<double> ql, qa;
    for (double h : {dt, dt / 2, dt / 4}) {
        const CurveMetrics m1 = isoperimetric_ratio(move_vertices(c, sphere, 0.0, h), sphere);
        ql.push_back((m1.length_g - m0.length_g) / h);
        qa.push_back((m1.area_in - m0.area_in) / h);
    }
    CHECK(std::abs(ql[0] + m0.curvature_energy) < 0.05 * m0.curvature_energy);
    CHECK(std::abs(qa[0] + m0.total_curvature) < 0.05 * std::abs(m0.total_curvature));
    const double rl = (ql[0] - ql[1]) / (ql[1] - ql[2]);
    const double ra = (qa[0] - qa[1]) / (qa[1] - qa[2]);
    CHECK(rl == doctest::Approx(2.0).epsilon(0.1));
    CHECK(ra == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("curvature reduction") {
    const auto sphere = ConformalMetric::round_sphere();
    FlowOptions opts;

    const ClosedCurve eq = ClosedCurve::circle({}, 1.0, 256);
    FlowState done = lemma9_reduce(eq, sphere, opts);
    CHECK(done.status == FlowStatus::CriterionMet);
    CHECK(done.tau == 0.0);
    CHECK(done.step_count == 0);
    CHECK(done.curve[3] == eq[3]);

    std::mt19937_64 rng(21);
    opts.curvature_energy_cap = 4.0;
    const ClosedCurve wavy = wavy_equator(rng, 512, 0.15);
    const CurveMetrics before = isoperimetric_ratio(wavy, sphere);
    REQUIRE(before.curvature_energy > opts.curvature_energy_cap);
    double last = before.ratio;
    bool monotone = true;
    FlowState out = lemma9_reduce(wavy, sphere, opts, [&](const FlowState& s) {
        if (!(s.metrics.ratio <= last * (1 + 1e-9)) || !(s.metrics.gb_residual < 1e-3))
            MESSAGE("step " << s.step_count << " ratio " << s.metrics.ratio << " last " << last << " gb " << s.metrics.gb_residual);
        monotone = monotone && s.metrics.ratio <= last * (1 + 1e-9);
        monotone = monotone && s.metrics.gb_residual < 1e-3;
        last = s.metrics.ratio;
    });
    CHECK(monotone);
    CHECK(out.status == FlowStatus::CriterionMet);
    CHECK(out.metrics.curvature_energy <= opts.curvature_energy_cap);
    CHECK(out.metrics.ratio <= before.ratio);
    CHECK(out.step_count > 0);

    opts.curvature_energy_cap = 1e-6;
    opts.max_steps = 200;
    FlowState stuck = lemma9_reduce(ClosedCurve::circle({}, 0.5, 128), sphere, opts);
    CHECK(stuck.status == FlowStatus::Stalled);
}

TEST_CASE("log ratio derivative") {
    const auto sphere = ConformalMetric::round_sphere();
    const FlowState eq = make_flow_state(ClosedCurve::circle({}, 1.0, 2048), sphere);
    CHECK(std::abs(log_ratio_derivative(eq, sphere)) < 1e-3);

    const auto flat = ConformalMetric::constant(1.0);
    FlowOptions opts;
    FlowState s = make_flow_state(ClosedCurve::circle({}, 1.0, 128), flat);
    const double predicted = log_ratio_derivative(s, flat);
    CHECK(predicted == doctest::Approx(1.0).epsilon(0.01));
    FlowState next = s;
    for (int i = 0; i < 20; ++i) next = flow_step(next, flat, opts);
    const double fd = (std::log(next.metrics.ratio) - std::log(s.metrics.ratio)) / next.tau;
    CHECK(std::abs(fd / predicted - 1.0) < 0.05);

    // high curvature energy with bounded total curvature: the ratio decreases
    const ClosedCurve wiggly = ClosedCurve::polar({}, [](double t) { return 1.0 + 0.05 * std::sin(12 * t); }, 512);
    const FlowState w = make_flow_state(wiggly, sphere);
    CHECK(w.metrics.curvature_energy > 20.0);
    CHECK(log_ratio_derivative(w, sphere) < 0.0);
}

TEST_CASE("options are validated") {
    FlowOptions opts;
    opts.dt_safety = 1.5;
    CHECK_THROWS_AS(opts.validate(), Error);
    opts = FlowOptions{};
    opts.max_steps = 0;
    CHECK_THROWS_AS(lemma9_reduce(ClosedCurve::circle({}, 1.0, 32), ConformalMetric::round_sphere(), opts), Error);
}
