#include "isoflow/metric.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>

#include "isoflow/error.hpp"
#include "isoflow/quadrature.hpp"

namespace isoflow {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kE = std::numbers::e;

/// log u and its first two derivatives with respect to x = r^2.
struct LogProfile {
    double f = 0.0;
    double fx = 0.0;
    double fxx = 0.0;
};

Jet radial_jet(const LogProfile& lp, Vec2 d) {
    const double x = norm2(d);
    const double u = std::exp(lp.f);
    return {u, (2.0 * u * lp.fx) * d, 4.0 * u * (lp.fx + x * lp.fxx + x * lp.fx * lp.fx)};
}

} // namespace

namespace detail {

struct MetricModel {
    virtual ~MetricModel() = default;

    virtual Jet jet(Point p) const = 0;
    virtual double u(Point p) const { return jet(p).u; }
    virtual double compute_area() const = 0;
    virtual bool finite_area() const { return true; }
    virtual double half_mass_radius() const = 0;
    virtual std::vector<Point> centers() const = 0;
    virtual bool uses_table() const { return false; }
    /// Largest tabulated radius among table components.
    virtual double table_limit() const { return std::numeric_limits<double>::infinity(); }
    /// Distance over which u changes appreciably near p.
    virtual double length_scale(Point p) const = 0;
    /// Circles across which u is less smooth than elsewhere.
    virtual std::vector<Circle> kinks() const { return {}; }
    virtual std::string family() const = 0;
    virtual json describe() const = 0;

    std::optional<RadialEnvelope> envelope;

    double area() const {
        std::call_once(area_once_, [this] {
            try {
                area_ = compute_area();
            } catch (...) {
                area_error_ = std::current_exception();
            }
        });
        if (area_error_) std::rethrow_exception(area_error_);
        return area_;
    }

private:
    mutable std::once_flag area_once_;
    mutable double area_ = 0.0;
    mutable std::exception_ptr area_error_;
};

} // namespace detail

namespace {

using detail::MetricModel;

/// Radially symmetric model about `center`, described by log u as a function of x = r^2.
struct RadialModel : MetricModel {
    Point center;

    virtual LogProfile profile(double x) const = 0;
    /// Area outside radius R about the center.
    virtual double tail_mass(double R) const = 0;
    /// Radius beyond which the analytic tail takes over.
    virtual double quadrature_radius() const = 0;
    virtual std::vector<double> breakpoints() const { return {}; }
    /// Size of the core where the profile turns over.
    virtual double core_radius() const = 0;

    double length_scale(Point p) const override { return norm(p - center) + core_radius(); }

    Jet jet(Point p) const override { return radial_jet(profile(norm2(p - center)), p - center); }
    double u(Point p) const override { return std::exp(profile(norm2(p - center)).f); }

    double mass_within(double R) const {
        auto integrand = [this](double s) {
            const double r = std::expm1(s);
            return 2.0 * kPi * r * (1.0 + r) * std::exp(profile(r * r).f);
        };
        std::vector<double> cuts{0.0};
        for (double b : breakpoints())
            if (b > 0.0 && b < R) cuts.push_back(b);
        cuts.push_back(R);
        double sum = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
            sum += quad::composite_gauss_width(integrand, std::log1p(cuts[i]), std::log1p(cuts[i + 1]), 0.125);
        return sum;
    }

    double compute_area() const override {
        const double R = quadrature_radius();
        return mass_within(R) + tail_mass(R);
    }

    double half_mass_radius() const override {
        const double half = 0.5 * area();
        double lo = 0.0;
        double hi = 1.0;
        while (mass_within(hi) < half && hi < 1e12) hi *= 2.0;
        for (int i = 0; i < 80 && hi - lo > 1e-12 * hi; ++i) {
            const double mid = 0.5 * (lo + hi);
            (mass_within(mid) < half ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

    std::vector<Point> centers() const override { return {center}; }
};

json point_json(Point p) { return json::array({p.x, p.y}); }

struct SphereModel : RadialModel {
    double scale;

    SphereModel(double a, Point c) : scale(a) {
        center = c;
        if (c == Point{}) {
            const double a2 = a * a;
            RadialEnvelope env;
            env.lambda1 = [a2](double r) { return 4.0 * a2 / ((a2 + r * r) * (a2 + r * r)); };
            env.lambda2 = env.lambda1;
            env.r0 = std::max(2.0, 2.0 * a);
            env.sqrt_lambda1_integral = [a](double lo, double hi) {
                return 2.0 * (std::atan(hi / a) - std::atan(lo / a));
            };
            env.rho_lambda2_tail = [a2](double r) { return 2.0 * a2 / (a2 + r * r); };
            envelope = env;
        }
    }

    LogProfile profile(double x) const override {
        const double a2 = scale * scale;
        const double q = a2 + x;
        return {std::log(4.0 * a2) - 2.0 * std::log(q), -2.0 / q, 2.0 / (q * q)};
    }
    double tail_mass(double R) const override { return 4.0 * kPi * scale * scale / (scale * scale + R * R); }
    double quadrature_radius() const override { return 1e4 * scale; }
    double core_radius() const override { return scale; }
    std::string family() const override { return "RoundSphere"; }
    json describe() const override {
        return {{"family", "sphere"}, {"params", {{"scale", scale}, {"center", point_json(center)}}}};
    }
};

/// log u = log(4C) - log x - 2 log log x for x = r^2 > 1.
LogProfile cusp_profile_at(double C, double x) {
    const double L = std::log(x);
    return {std::log(4.0 * C) - L - 2.0 * std::log(L), -1.0 / x - 2.0 / (x * L),
            (1.0 + 2.0 / L + 2.0 / (L * L)) / (x * x)};
}

struct CuspModel : RadialModel {
    double C;
    double r_cap;
    double x_cap;
    double a0, a1, a2, a3;  // cap cubic in (x - x_cap)

    CuspModel(double c, double cap) : C(c), r_cap(cap), x_cap(cap * cap) {
        if (!(c > 0.0)) throw Error(ErrorCode::DomainError, "cusp constant must be positive");
        if (!(cap > 1.0)) throw Error(ErrorCode::DomainError, "cusp cap radius must exceed 1");
        const LogProfile at = cusp_profile_at(C, x_cap);
        const double L = std::log(x_cap);
        const double fxxx =
            -(2.0 + 4.0 / L + 6.0 / (L * L) + 4.0 / (L * L * L)) / (x_cap * x_cap * x_cap);
        a0 = at.f;
        a1 = at.fx;
        a2 = 0.5 * at.fxx;
        a3 = fxxx / 6.0;
        envelope = cusp_envelope(C, C, r_cap);
    }

    LogProfile profile(double x) const override {
        if (x >= x_cap) return cusp_profile_at(C, x);
        const double d = x - x_cap;
        return {a0 + d * (a1 + d * (a2 + d * a3)), a1 + d * (2.0 * a2 + 3.0 * a3 * d), 2.0 * a2 + 6.0 * a3 * d};
    }
    double tail_mass(double R) const override { return 2.0 * kPi * C / std::log(R); }
    double quadrature_radius() const override { return 1e4 * r_cap; }
    double core_radius() const override { return 0.5 * r_cap; }
    std::vector<Circle> kinks() const override { return {{center, r_cap}}; }
    std::vector<double> breakpoints() const override { return {r_cap}; }
    std::string family() const override { return "CuspProfile"; }
    json describe() const override {
        return {{"family", "cusp"}, {"params", {{"C", C}, {"r_cap", r_cap}}}};
    }
};

struct LogBumpModel : RadialModel {
    double mass;

    LogBumpModel(double m, Point c) : mass(m) {
        if (!(m > 0.0)) throw Error(ErrorCode::DomainError, "bump mass must be positive");
        center = c;
        if (c == Point{}) {
            RadialEnvelope env;
            env.lambda1 = [m](double r) {
                const double y = kE + r * r;
                const double L = std::log(y);
                return (m / kPi) / (y * L * L);
            };
            env.lambda2 = env.lambda1;
            env.r0 = kE;
            env.rho_lambda2_tail = [m](double r) { return (m / (2.0 * kPi)) / std::log(kE + r * r); };
            envelope = env;
        }
    }

    LogProfile profile(double x) const override {
        const double y = kE + x;
        const double L = std::log(y);
        return {std::log(mass / kPi) - std::log(y) - 2.0 * std::log(L), -1.0 / y - 2.0 / (y * L),
                (1.0 + 2.0 / L + 2.0 / (L * L)) / (y * y)};
    }
    double tail_mass(double R) const override { return mass / std::log(kE + R * R); }
    double quadrature_radius() const override { return 1e4; }
    double core_radius() const override { return 1.0; }
    std::string family() const override { return "LogBump"; }
    json describe() const override {
        return {{"family", "log_bump"}, {"params", {{"mass", mass}, {"center", point_json(center)}}}};
    }
};

struct ConstantModel : MetricModel {
    double value;
    explicit ConstantModel(double v) : value(v) {
        if (!(v > 0.0)) throw Error(ErrorCode::NonPositiveFactor, "constant factor must be positive");
    }
    Jet jet(Point) const override { return {value, {}, 0.0}; }
    double compute_area() const override {
        throw Error(ErrorCode::DivergentArea, "constant conformal factor has infinite area");
    }
    bool finite_area() const override { return false; }
    double half_mass_radius() const override { return 1.0; }
    std::vector<Point> centers() const override { return {Point{}}; }
    double length_scale(Point) const override { return std::numeric_limits<double>::infinity(); }
    std::string family() const override { return "Constant"; }
    json describe() const override { return {{"family", "constant"}, {"params", {{"value", value}}}}; }
};

/// Cubic spline of F = log u in t = log r.
struct TableModel : MetricModel {
    std::vector<double> r, u_samples;
    std::vector<double> t, F, M;  // knots, values, second derivatives
    TableTail tail;
    double end_slope = 0.0;  // dF/dt at the last knot
    double cusp_C = 0.0;

    TableModel(std::vector<double> radii, std::vector<double> values, TableTail tail_mode)
        : r(std::move(radii)), u_samples(std::move(values)), tail(tail_mode) {
        if (r.size() != u_samples.size()) throw Error(ErrorCode::DomainError, "table columns differ in length");
        if (!r.empty() && r.front() == 0.0) {
            r.erase(r.begin());
            u_samples.erase(u_samples.begin());
        }
        if (r.size() < 2) throw Error(ErrorCode::DomainError, "radial table needs at least two positive radii");
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (!(u_samples[i] > 0.0) || !std::isfinite(u_samples[i]))
                throw Error(ErrorCode::NonPositiveFactor, "table value at r=" + std::to_string(r[i]) + " is not positive");
            if (!(r[i] > 0.0) || (i > 0 && !(r[i] > r[i - 1])))
                throw Error(ErrorCode::DomainError, "table radii must be positive and increasing");
            t.push_back(std::log(r[i]));
            F.push_back(std::log(u_samples[i]));
        }
        if (tail == TableTail::Cusp) {
            if (!(r.back() > 1.0)) throw Error(ErrorCode::DomainError, "cusp tail needs the table to extend past r = 1");
            const double L = t.back();
            cusp_C = u_samples.back() * r.back() * r.back() * L * L;
        }
        build_spline();
    }

    void build_spline() {
        const std::size_t n = t.size();
        // Clamped zero slope at the first knot; the last knot is natural for the
        // power-law tail and clamped to the cusp slope for the cusp tail.
        std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), d(n, 0.0);
        const double h0 = t[1] - t[0];
        b[0] = h0 / 3.0;
        c[0] = h0 / 6.0;
        d[0] = (F[1] - F[0]) / h0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double hl = t[i] - t[i - 1];
            const double hr = t[i + 1] - t[i];
            a[i] = hl / 6.0;
            b[i] = (hl + hr) / 3.0;
            c[i] = hr / 6.0;
            d[i] = (F[i + 1] - F[i]) / hr - (F[i] - F[i - 1]) / hl;
        }
        const double hn = t[n - 1] - t[n - 2];
        if (tail == TableTail::Cusp) {
            const double slope = -2.0 - 2.0 / t[n - 1];
            a[n - 1] = hn / 6.0;
            b[n - 1] = hn / 3.0;
            d[n - 1] = slope - (F[n - 1] - F[n - 2]) / hn;
        } else {
            b[n - 1] = 1.0;
            d[n - 1] = 0.0;
        }
        // Thomas algorithm.
        for (std::size_t i = 1; i < n; ++i) {
            const double m = a[i] / b[i - 1];
            b[i] -= m * c[i - 1];
            d[i] -= m * d[i - 1];
        }
        M.assign(n, 0.0);
        M[n - 1] = d[n - 1] / b[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) M[i] = (d[i] - c[i] * M[i + 1]) / b[i];
        end_slope = (F[n - 1] - F[n - 2]) / hn + hn * (M[n - 2] + 2.0 * M[n - 1]) / 6.0;
    }

    /// F, F', F'' at log-radius s.
    std::array<double, 3> spline(double s) const {
        if (s <= t.front()) return {F.front(), 0.0, 0.0};
        if (s >= t.back()) {
            const double ds = s - t.back();
            if (tail == TableTail::Cusp) {
                return {std::log(cusp_C) - 2.0 * s - 2.0 * std::log(s), -2.0 - 2.0 / s, 2.0 / (s * s)};
            }
            return {F.back() + end_slope * ds, end_slope, 0.0};
        }
        const auto it = std::upper_bound(t.begin(), t.end(), s);
        const std::size_t i = static_cast<std::size_t>(it - t.begin()) - 1;
        const double h = t[i + 1] - t[i];
        const double A = (t[i + 1] - s) / h;
        const double B = (s - t[i]) / h;
        const double val = A * F[i] + B * F[i + 1] + ((A * A * A - A) * M[i] + (B * B * B - B) * M[i + 1]) * h * h / 6.0;
        const double d1 = (F[i + 1] - F[i]) / h + (-(3.0 * A * A - 1.0) * M[i] + (3.0 * B * B - 1.0) * M[i + 1]) * h / 6.0;
        const double d2 = A * M[i] + B * M[i + 1];
        return {val, d1, d2};
    }

    Jet jet(Point p) const override {
        const double x = norm2(p);
        if (x <= r.front() * r.front()) return {u_samples.front(), {}, 0.0};
        const auto [val, d1, d2] = spline(0.5 * std::log(x));
        const double u = std::exp(val);
        return {u, (u * d1 / x) * p, u * (d2 + d1 * d1) / x};
    }
    double u(Point p) const override {
        const double x = norm2(p);
        if (x <= r.front() * r.front()) return u_samples.front();
        return std::exp(spline(0.5 * std::log(x))[0]);
    }

    double mass_within(double R) const {
        double sum = kPi * r.front() * r.front() * u_samples.front();
        auto integrand = [this](double s) { return 2.0 * kPi * std::exp(2.0 * s + spline(s)[0]); };
        const double tR = std::log(R);
        for (std::size_t i = 0; i + 1 < t.size() && t[i] < tR; ++i)
            sum += quad::gauss16(integrand, t[i], std::min(t[i + 1], tR));
        if (tR > t.back()) sum += quad::composite_gauss_width(integrand, t.back(), tR, 0.25);
        return sum;
    }

    double compute_area() const override {
        double sum = mass_within(r.back());
        if (tail == TableTail::Cusp) return sum + 2.0 * kPi * cusp_C / t.back();
        if (!(end_slope < -2.0 - 1e-9))
            throw Error(ErrorCode::DivergentArea, "power-law tail r^" + std::to_string(end_slope) + " is not integrable");
        return sum + 2.0 * kPi * u_samples.back() * r.back() * r.back() / (-end_slope - 2.0);
    }
    bool finite_area() const override {
        return tail == TableTail::Cusp || end_slope < -2.0 - 1e-9;
    }
    double half_mass_radius() const override {
        if (!finite_area()) return r.back();
        const double half = 0.5 * area();
        double lo = 0.0;
        double hi = r.back();
        while (mass_within(hi) < half && hi < 1e12) hi *= 2.0;
        for (int i = 0; i < 80 && hi - lo > 1e-10 * hi; ++i) {
            const double mid = 0.5 * (lo + hi);
            (mass_within(mid) < half ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }
    std::vector<Point> centers() const override { return {Point{}}; }
    bool uses_table() const override { return true; }
    double table_limit() const override { return r.back(); }
    double length_scale(Point p) const override { return norm(p) + r.front(); }
    std::string family() const override { return "RadialTable"; }
    json describe() const override {
        return {{"family", "table"},
                {"params", {{"r", r}, {"u", u_samples}, {"tail", tail == TableTail::Cusp ? "cusp" : "power"}}}};
    }
};

struct ScaleModel : MetricModel {
    double factor;
    std::shared_ptr<const MetricModel> child;

    ScaleModel(double c, std::shared_ptr<const MetricModel> m) : factor(c), child(std::move(m)) {
        if (!(c > 0.0)) throw Error(ErrorCode::NonPositiveFactor, "scale factor must be positive");
        if (child->envelope) {
            const RadialEnvelope& e = *child->envelope;
            RadialEnvelope s;
            s.lambda1 = [c, f = e.lambda1](double r) { return c * f(r); };
            s.lambda2 = [c, f = e.lambda2](double r) { return c * f(r); };
            s.r0 = e.r0;
            if (e.sqrt_lambda1_integral)
                s.sqrt_lambda1_integral = [sc = std::sqrt(c), f = e.sqrt_lambda1_integral](double a, double b) { return sc * f(a, b); };
            if (e.rho_lambda2_tail)
                s.rho_lambda2_tail = [c, f = e.rho_lambda2_tail](double r) { return c * f(r); };
            if (e.cusp_constants) s.cusp_constants = std::pair{c * e.cusp_constants->first, c * e.cusp_constants->second};
            envelope = s;
        }
    }

    Jet jet(Point p) const override {
        Jet j = child->jet(p);
        return {factor * j.u, factor * j.grad, factor * j.laplacian};
    }
    double u(Point p) const override { return factor * child->u(p); }
    double compute_area() const override { return factor * child->area(); }
    bool finite_area() const override { return child->finite_area(); }
    double half_mass_radius() const override { return child->half_mass_radius(); }
    std::vector<Point> centers() const override { return child->centers(); }
    bool uses_table() const override { return child->uses_table(); }
    double table_limit() const override { return child->table_limit(); }
    double length_scale(Point p) const override { return child->length_scale(p); }
    std::vector<Circle> kinks() const override { return child->kinks(); }
    std::string family() const override { return "Scale"; }
    json describe() const override {
        return {{"family", "scale"}, {"params", {{"factor", factor}, {"metric", child->describe()}}}};
    }
};

struct SumModel : MetricModel {
    std::vector<std::shared_ptr<const MetricModel>> terms;

    explicit SumModel(std::vector<std::shared_ptr<const MetricModel>> t) : terms(std::move(t)) {
        if (terms.empty()) throw Error(ErrorCode::DomainError, "sum of zero metrics");
        const bool all = std::all_of(terms.begin(), terms.end(), [](const auto& m) { return m->envelope.has_value(); });
        if (!all) return;
        RadialEnvelope s;
        std::vector<RadialEnvelope> envs;
        for (const auto& m : terms) envs.push_back(*m->envelope);
        s.lambda1 = [envs](double r) { double v = 0; for (const auto& e : envs) v += e.lambda1(r); return v; };
        s.lambda2 = [envs](double r) { double v = 0; for (const auto& e : envs) v += e.lambda2(r); return v; };
        s.r0 = 0.0;
        for (const auto& e : envs) s.r0 = std::max(s.r0, e.r0);
        if (std::all_of(envs.begin(), envs.end(), [](const auto& e) { return bool(e.rho_lambda2_tail); }))
            s.rho_lambda2_tail = [envs](double r) { double v = 0; for (const auto& e : envs) v += e.rho_lambda2_tail(r); return v; };
        envelope = s;
    }

    Jet jet(Point p) const override {
        Jet sum;
        for (const auto& m : terms) {
            const Jet j = m->jet(p);
            sum.u += j.u;
            sum.grad += j.grad;
            sum.laplacian += j.laplacian;
        }
        return sum;
    }
    double u(Point p) const override {
        double v = 0.0;
        for (const auto& m : terms) v += m->u(p);
        return v;
    }
    double compute_area() const override {
        double v = 0.0;
        for (const auto& m : terms) v += m->area();
        return v;
    }
    bool finite_area() const override {
        return std::all_of(terms.begin(), terms.end(), [](const auto& m) { return m->finite_area(); });
    }
    double half_mass_radius() const override {
        double v = 0.0;
        for (const auto& m : terms) v = std::max(v, m->half_mass_radius());
        return v;
    }
    std::vector<Point> centers() const override {
        std::vector<Point> out;
        for (const auto& m : terms)
            for (Point c : m->centers())
                if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
        return out;
    }
    bool uses_table() const override {
        return std::any_of(terms.begin(), terms.end(), [](const auto& m) { return m->uses_table(); });
    }
    double table_limit() const override {
        double v = std::numeric_limits<double>::infinity();
        for (const auto& m : terms) v = std::min(v, m->table_limit());
        return v;
    }
    double length_scale(Point p) const override {
        double v = std::numeric_limits<double>::infinity();
        for (const auto& m : terms) v = std::min(v, m->length_scale(p));
        return v;
    }
    std::vector<Circle> kinks() const override {
        std::vector<Circle> all;
        for (const auto& m : terms)
            for (const Circle& c : m->kinks()) all.push_back(c);
        return all;
    }
    std::string family() const override { return "Sum"; }
    json describe() const override {
        json list = json::array();
        for (const auto& m : terms) list.push_back(m->describe());
        return {{"family", "sum"}, {"params", {{"terms", list}}}};
    }
};

/// Shares the wrapped model but replaces its envelope.
struct EnvelopeOverride : MetricModel {
    std::shared_ptr<const MetricModel> inner;
    EnvelopeOverride(std::shared_ptr<const MetricModel> m, RadialEnvelope env) : inner(std::move(m)) {
        envelope = std::move(env);
    }
    Jet jet(Point p) const override { return inner->jet(p); }
    double u(Point p) const override { return inner->u(p); }
    double compute_area() const override { return inner->area(); }
    bool finite_area() const override { return inner->finite_area(); }
    double half_mass_radius() const override { return inner->half_mass_radius(); }
    std::vector<Point> centers() const override { return inner->centers(); }
    bool uses_table() const override { return inner->uses_table(); }
    double table_limit() const override { return inner->table_limit(); }
    double length_scale(Point p) const override { return inner->length_scale(p); }
    std::vector<Circle> kinks() const override { return inner->kinks(); }
    std::string family() const override { return inner->family(); }
    json describe() const override { return inner->describe(); }
};

} // namespace

RadialEnvelope cusp_envelope(double c1, double c2, double r0) {
    if (!(c1 > 0.0) || !(c2 >= c1)) throw Error(ErrorCode::DomainError, "cusp envelope needs C2 >= C1 > 0");
    if (!(r0 > 1.0)) throw Error(ErrorCode::DomainError, "envelope radius r0 must exceed 1");
    RadialEnvelope env;
    env.lambda1 = [c1](double r) { const double q = r * std::log(r); return c1 / (q * q); };
    env.lambda2 = [c2](double r) { const double q = r * std::log(r); return c2 / (q * q); };
    env.r0 = r0;
    env.sqrt_lambda1_integral = [s = std::sqrt(c1)](double a, double b) {
        return s * std::log(std::log(b) / std::log(a));
    };
    env.rho_lambda2_tail = [c2](double r) { return c2 / std::log(r); };
    env.cusp_constants = std::pair{c1, c2};
    return env;
}

double envelope_tail_integral(const RadialEnvelope& env, double r) {
    if (!(r >= env.r0 * (1.0 - 1e-12))) throw Error(ErrorCode::DomainError, "tail radius below r0");
    if (env.rho_lambda2_tail) return env.rho_lambda2_tail(r);
    auto g = [&env](double s) {
        const double rho = std::exp(s);
        return rho * rho * env.lambda2(rho);
    };
    return quad::extrapolated_tail(g, std::log(r), 1e-10).value;
}

double envelope_sqrt_integral(const RadialEnvelope& env, double a, double b) {
    if (env.sqrt_lambda1_integral) return env.sqrt_lambda1_integral(a, b);
    auto g = [&env](double s) {
        const double rho = std::exp(s);
        return rho * std::sqrt(env.lambda1(rho));
    };
    return quad::composite_gauss_width(g, std::log(a), std::log(b), 0.25);
}

ConformalMetric::ConformalMetric(std::shared_ptr<const detail::MetricModel> model) : model_(std::move(model)) {}

ConformalMetric ConformalMetric::round_sphere(double scale, Point center) {
    if (!(scale > 0.0)) throw Error(ErrorCode::DomainError, "sphere scale must be positive");
    return ConformalMetric(std::make_shared<SphereModel>(scale, center));
}
ConformalMetric ConformalMetric::cusp_profile(double C, double r_cap) {
    return ConformalMetric(std::make_shared<CuspModel>(C, r_cap));
}
ConformalMetric ConformalMetric::constant(double value) {
    return ConformalMetric(std::make_shared<ConstantModel>(value));
}
ConformalMetric ConformalMetric::log_bump(double mass, Point center) {
    return ConformalMetric(std::make_shared<LogBumpModel>(mass, center));
}
ConformalMetric ConformalMetric::radial_table(std::vector<double> radii, std::vector<double> values, TableTail tail) {
    return ConformalMetric(std::make_shared<TableModel>(std::move(radii), std::move(values), tail));
}
ConformalMetric ConformalMetric::scaled(double factor, const ConformalMetric& metric) {
    return ConformalMetric(std::make_shared<ScaleModel>(factor, metric.model_));
}
ConformalMetric ConformalMetric::sum(const std::vector<ConformalMetric>& terms) {
    std::vector<std::shared_ptr<const detail::MetricModel>> models;
    for (const auto& m : terms) models.push_back(m.model_);
    return ConformalMetric(std::make_shared<SumModel>(std::move(models)));
}
ConformalMetric ConformalMetric::with_envelope(RadialEnvelope env) const {
    return ConformalMetric(std::make_shared<EnvelopeOverride>(model_, std::move(env)));
}

double ConformalMetric::u(Point p) const {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw Error(ErrorCode::DomainError, "point is not finite");
    return model_->u(p);
}
Jet ConformalMetric::jet(Point p) const { return model_->jet(p); }
Vec2 ConformalMetric::grad_log_u(Point p) const {
    const Jet j = model_->jet(p);
    return (1.0 / j.u) * j.grad;
}

double ConformalMetric::gauss_curvature(Point p) const {
    if (model_->uses_table()) {
        const double h = 1e-3 * std::max(1.0, norm(p));
        if (norm(p) + h > model_->table_limit())
            throw Error(ErrorCode::NumericalDifferentiationFailure, "stencil leaves the tabulated range");
        return gauss_curvature_fd(*this, p, h);
    }
    const Jet j = model_->jet(p);
    const double lap_log = j.laplacian / j.u - norm2(j.grad) / (j.u * j.u);
    return -lap_log / (2.0 * j.u);
}

double ConformalMetric::total_area() const { return model_->area(); }
bool ConformalMetric::has_finite_area() const { return model_->finite_area(); }
double ConformalMetric::half_mass_radius() const { return model_->half_mass_radius(); }
std::vector<Point> ConformalMetric::centers() const { return model_->centers(); }
const std::optional<RadialEnvelope>& ConformalMetric::envelope() const { return model_->envelope; }
bool ConformalMetric::uses_table() const { return model_->uses_table(); }
double ConformalMetric::length_scale(Point p) const { return model_->length_scale(p); }
std::vector<Circle> ConformalMetric::kinks() const { return model_->kinks(); }
std::string ConformalMetric::family() const { return model_->family(); }
json ConformalMetric::describe() const { return model_->describe(); }

double eval_u(const ConformalMetric& metric, Point p) { return metric.u(p); }
double total_area(const ConformalMetric& metric) { return metric.total_area(); }
double gauss_curvature(const ConformalMetric& metric, Point p) { return metric.gauss_curvature(p); }

double gauss_curvature_fd(const ConformalMetric& metric, Point p, double h) {
    auto f = [&](Point q) { return std::log(metric.u(q)); };
    const double center = f(p);
    const double lap = (f(p + Vec2{h, 0}) + f(p - Vec2{h, 0}) + f(p + Vec2{0, h}) + f(p - Vec2{0, h}) - 4.0 * center) / (h * h);
    return -lap / (2.0 * std::exp(center));
}

double integrated_curvature(const ConformalMetric& metric, double r_max) {
    return quad::disk_integral([&](Point p) { return metric.gauss_curvature(p) * metric.u(p); }, Point{}, r_max);
}

} // namespace isoflow
