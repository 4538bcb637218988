#include "isoflow/ricci.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include "isoflow/error.hpp"
#include "isoflow/io.hpp"
#include "isoflow/quadrature.hpp"

namespace isoflow {
namespace {

constexpr double kPi = std::numbers::pi;

double cusp_weight(double r) {
    const double l = std::log(r);
    return r * r * l * l;
}

double tail_mass(double c, double r_max) { return 2.0 * kPi * c / std::log(r_max); }

/// Least-squares line through (x, y); returns {intercept, slope}.
std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {(sy - slope * sx) / n, slope};
}

} // namespace

RicciSolution solve_radial(const std::function<double(double)>& u0, double t_end, const RadialGrid& grid,
                           const RicciOptions& opts) {
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw Error(ErrorCode::DomainError, "t_end must be positive");
    if (!(grid.r_max > std::exp(1.0)) || grid.cells < 8)
        throw Error(ErrorCode::DomainError, "radial grid needs r_max > e and at least 8 cells");
    if (!(opts.dt_safety > 0.0 && opts.dt_safety <= 0.5) || opts.snapshots < 4 || opts.max_halvings < 1)
        throw Error(ErrorCode::ConfigError, "invalid Ricci step options");

    const std::size_t n = grid.cells;
    const double ds = std::log1p(grid.r_max) / static_cast<double>(n);
    RicciSolution sol;
    sol.faces.resize(n + 1);
    sol.radii.resize(n);
    for (std::size_t k = 0; k <= n; ++k) sol.faces[k] = std::expm1(ds * static_cast<double>(k));
    sol.faces.back() = grid.r_max;
    for (std::size_t i = 0; i < n; ++i) sol.radii[i] = std::expm1(ds * (static_cast<double>(i) + 0.5));
    const double R = grid.r_max;
    const double logR = std::log(R);

    std::vector<double> volume(n), mass(n), u(n), lu(n), conductance(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = sol.faces[i], b = sol.faces[i + 1];
        volume[i] = kPi * (b - a) * (b + a);
        mass[i] = quad::gauss16(
            [&](double s) {
                const double r = std::expm1(s);
                const double v = u0(r);
                if (!(v > 0.0) || !std::isfinite(v))
                    throw Error(ErrorCode::NonPositiveFactor, "initial profile is not positive at r=" + format_number(r));
                return 2.0 * kPi * v * r * std::exp(s);
            },
            ds * static_cast<double>(i), ds * static_cast<double>(i + 1));
        u[i] = mass[i] / volume[i];
    }
    for (std::size_t k = 1; k < n; ++k) conductance[k] = 2.0 * kPi * sol.faces[k] / (sol.radii[k] - sol.radii[k - 1]);
    const double outer_flux = -4.0 * kPi * (1.0 + 1.0 / logR);

    auto total_mass = [&] {
        double m = 0.0;
        for (double v : mass) m += v;
        return m + tail_mass(u.back() * cusp_weight(sol.radii.back()), R);
    };
    auto record = [&](double t) {
        sol.times.push_back(t);
        sol.u_values.push_back(u);
        sol.mass.push_back(total_mass());
        sol.tail_constant.push_back(u.back() * cusp_weight(sol.radii.back()));
    };
    record(0.0);

    const double m0 = sol.mass.front();
    if (!(t_end < m0 / (4.0 * kPi)))
        throw Error(ErrorCode::DomainError, "t_end must precede the extinction time M0/(4 pi) = " +
                                                format_number(m0 / (4.0 * kPi)));
    sol.not_maximal_regime = sol.tail_constant.front() < opts.maximal_tail_fraction * m0 / (4.0 * kPi);

    std::vector<double> flux(n + 1, 0.0), next(n);
    double t = 0.0;
    for (std::size_t snap = 1; snap <= opts.snapshots; ++snap) {
        const double t_snap = t_end * static_cast<double>(snap) / static_cast<double>(opts.snapshots);
        while (t < t_snap) {
            for (std::size_t i = 0; i < n; ++i) lu[i] = std::log(u[i]);
            double limit = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i) {
                const double g = conductance[i] + (i + 1 < n ? conductance[i + 1] : 0.0);
                limit = std::min(limit, mass[i] / g);
            }
            for (std::size_t k = 1; k < n; ++k) flux[k] = conductance[k] * (lu[k] - lu[k - 1]);
            flux[n] = outer_flux;

            double dt = std::min(opts.dt_safety * limit, t_snap - t);
            bool last = dt >= t_snap - t;
            int halvings = 0;
            for (;;) {
                bool positive = true;
                for (std::size_t i = 0; i < n && positive; ++i) {
                    next[i] = mass[i] + dt * (flux[i + 1] - flux[i]);
                    positive = next[i] > 0.0;
                }
                if (positive) break;
                if (++halvings > opts.max_halvings)
                    throw Error(ErrorCode::StepUnstable, "positivity lost at t=" + format_number(t) + " after " +
                                                             std::to_string(opts.max_halvings) + " halvings");
                dt *= 0.5;
                last = false;
            }
            mass.swap(next);
            for (std::size_t i = 0; i < n; ++i) u[i] = mass[i] / volume[i];
            t = last ? t_snap : t + dt;
            ++sol.steps;
        }
        record(t_snap);
    }

    const double w0 = 0.25 * t_end, w1 = 0.75 * t_end;
    std::vector<double> ft, fm;
    for (std::size_t k = 0; k < sol.times.size(); ++k)
        if (sol.times[k] >= w0 - 1e-12 * t_end && sol.times[k] <= w1 + 1e-12 * t_end) {
            ft.push_back(sol.times[k]);
            fm.push_back(sol.mass[k]);
        }
    const auto [intercept, slope] = linear_fit(ft, fm);
    sol.mass_slope = slope;
    sol.extinction_estimate = slope < 0.0 ? -intercept / slope : std::numeric_limits<double>::infinity();
    sol.fit_window = {w0, w1};
    return sol;
}

RicciSolution solve_radial(const ConformalMetric& u0, double t_end, const RadialGrid& grid, const RicciOptions& opts) {
    return solve_radial([&](double r) { return u0.u(Point{r, 0.0}); }, t_end, grid, opts);
}

std::vector<double> RicciSolution::profile(double t) const {
    if (times.empty()) throw Error(ErrorCode::DomainError, "empty solution");
    if (!(t >= times.front() && t <= times.back()))
        throw Error(ErrorCode::DomainError, "time " + format_number(t) + " outside the solved range");
    const auto it = std::lower_bound(times.begin(), times.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - times.begin());
    if (times[k] == t) return u_values[k];
    const double w = (t - times[k - 1]) / (times[k] - times[k - 1]);
    std::vector<double> out(radii.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - w) * u_values[k - 1][i] + w * u_values[k][i];
    return out;
}

double RicciSolution::u_at(double r, double t) const {
    const std::vector<double> p = profile(t);
    if (r <= radii.front()) return p.front();
    if (r >= radii.back()) return p.back() * cusp_weight(radii.back()) / cusp_weight(r);
    const auto it = std::upper_bound(radii.begin(), radii.end(), r);
    const std::size_t i = static_cast<std::size_t>(it - radii.begin()) - 1;
    const double w = std::log(r / radii[i]) / std::log(radii[i + 1] / radii[i]);
    return std::exp((1.0 - w) * std::log(p[i]) + w * std::log(p[i + 1]));
}

std::string RicciSolution::field_csv() const {
    std::string out = "t,r,u\n";
    for (std::size_t k = 0; k < times.size(); ++k)
        for (std::size_t i = 0; i < radii.size(); ++i)
            out += format_number(times[k]) + ',' + format_number(radii[i]) + ',' + format_number(u_values[k][i]) + '\n';
    return out;
}

std::string RicciSolution::mass_csv() const {
    std::string out = "t,M\n";
    for (std::size_t k = 0; k < times.size(); ++k) out += format_number(times[k]) + ',' + format_number(mass[k]) + '\n';
    return out;
}

nlohmann::json RicciSolution::summary() const {
    return {{"cells", radii.size()},
            {"r_max", faces.back()},
            {"t_end", times.back()},
            {"steps", steps},
            {"initial_mass", mass.front()},
            {"final_mass", mass.back()},
            {"mass_slope", mass_slope},
            {"fit_window", {fit_window.first, fit_window.second}},
            {"extinction_estimate", extinction_estimate},
            {"not_maximal_regime", not_maximal_regime},
            {"lp_hypothesis_checked", false}};
}

TailBounds tail_bounds(const RicciSolution& sol, double t, double lo, double hi) {
    const std::vector<double> p = sol.profile(t);
    TailBounds b{lo, hi, std::numeric_limits<double>::infinity(), 0.0};
    for (std::size_t i = 0; i < sol.radii.size(); ++i) {
        const double r = sol.radii[i];
        if (r < lo || r > hi) continue;
        const double c = p[i] * cusp_weight(r);
        b.c_min = std::min(b.c_min, c);
        b.c_max = std::max(b.c_max, c);
    }
    if (!(b.c_max > 0.0)) throw Error(ErrorCode::DomainError, "no grid cells inside the tail window");
    return b;
}

SliceMetric slice_metric(const RicciSolution& sol, double t, double window_start) {
    if (!(t < sol.extinction_estimate))
        throw Error(ErrorCode::ExtinctPastT, "slice time " + format_number(t) + " is not before the extinction estimate " +
                                                 format_number(sol.extinction_estimate));
    const std::vector<double> p = sol.profile(t);
    const TailBounds b = tail_bounds(sol, t, std::max(10.0, window_start), sol.radii.back());
    SliceMetric s{ConformalMetric::radial_table(sol.radii, p, TableTail::Cusp).with_envelope(
                      cusp_envelope(b.c_min, b.c_max, b.lo)),
                  b.c_min, b.c_max, b.lo, b.hi};
    return s;
}

std::vector<RatioTrack> track_ratio(const RicciSolution& sol, const std::vector<double>& times, const TrackOptions& opts) {
    std::vector<RatioTrack> rows(times.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < times.size(); k = next++) {
            RatioTrack& row = rows[k];
            row.t = times[k];
            try {
                const SliceMetric s = slice_metric(sol, times[k]);
                row.c1 = s.c1;
                row.c2 = s.c2;
                row.area = s.metric.total_area();
                const Prop2Constants pc = prop2_constants(s.c1, s.c2);
                row.b0 = threshold_b0(pc.b1, pc.b2, row.area);
                MinimizeOptions mo = opts.minimize;
                mo.b0 = row.b0;
                const MinimizeResult res =
                    minimize(s.metric, default_starts(s.metric, s.metric.half_mass_radius(), opts.start_count), mo);
                row.best_ratio = res.best_ratio;
                row.below = res.threshold_check && res.threshold_check->below;
                row.curve = res.best_curve;
            } catch (const Error& e) {
                row.error = e.what();
            }
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(opts.threads, times.size()));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return rows;
}

std::string track_csv(const std::vector<RatioTrack>& rows) {
    auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string("nan"); };
    std::string out = "t,area,c1,c2,best_ratio,b0,below\n";
    for (const auto& r : rows)
        out += format_number(r.t) + ',' + format_number(r.area) + ',' + format_number(r.c1) + ',' + format_number(r.c2) +
               ',' + opt(r.best_ratio) + ',' + opt(r.b0) + ',' + (r.below ? "1" : "0") + '\n';
    return out;
}

} // namespace isoflow
