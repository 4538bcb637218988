#pragma once

// Radially symmetric logarithmic diffusion u_t = Laplacian(log u) on the
// plane, time slices as conformal metrics, and ratio tracking along the flow.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "isoflow/hypotheses.hpp"
#include "isoflow/metric.hpp"
#include "isoflow/minimizer.hpp"

namespace isoflow {

/// Cells uniform in s = log(1 + r) on [0, log(1 + r_max)].
struct RadialGrid {
    double r_max = 1e6;
    std::size_t cells = 300;
};

struct RicciOptions {
    double dt_safety = 0.4;   ///< fraction of the explicit stability limit
    std::size_t snapshots = 40;  ///< equally spaced output times after t = 0
    int max_halvings = 40;    ///< positivity retries per step before StepUnstable
    /// Flag threshold: the initial tail constant u r^2 (log r)^2 at the outer
    /// cell relative to the cusp constant M0 / (4 pi) of the same mass.
    double maximal_tail_fraction = 1e-3;
};

struct RicciSolution {
    std::vector<double> radii;      ///< cell centers
    std::vector<double> faces;      ///< cell faces, faces.front() = 0, faces.back() = r_max
    std::vector<double> times;      ///< snapshot times, times.front() = 0
    std::vector<std::vector<double>> u_values;  ///< cell averages per snapshot
    std::vector<double> mass;       ///< grid mass plus analytic tail per snapshot
    std::vector<double> tail_constant;  ///< u r^2 (log r)^2 at the outer cell per snapshot
    double extinction_estimate = 0.0;   ///< zero of the linear mass fit
    double mass_slope = 0.0;            ///< fitted dM/dt over the middle half of the run
    std::pair<double, double> fit_window{0.0, 0.0};
    std::size_t steps = 0;
    bool not_maximal_regime = false;

    /// u at radius r and time t (linear in time between snapshots, the
    /// outer cell's cusp tail beyond the grid).
    double u_at(double r, double t) const;
    std::vector<double> profile(double t) const;

    std::string field_csv() const;  ///< "t,r,u"
    std::string mass_csv() const;   ///< "t,M"
    nlohmann::json summary() const;
};

/// Explicit conservative finite-volume solve with the cusp flux
/// -4 pi (1 + 1/log r_max) through the outer face.
RicciSolution solve_radial(const std::function<double(double)>& u0, double t_end, const RadialGrid& grid = {},
                           const RicciOptions& opts = {});
RicciSolution solve_radial(const ConformalMetric& u0, double t_end, const RadialGrid& grid = {},
                           const RicciOptions& opts = {});

/// Range of u r^2 (log r)^2 over cell centers inside [lo, hi] at time t.
struct TailBounds {
    double lo = 0.0, hi = 0.0;
    double c_min = 0.0, c_max = 0.0;
};
TailBounds tail_bounds(const RicciSolution& sol, double t, double lo, double hi);

struct SliceMetric {
    ConformalMetric metric;
    double c1 = 0.0, c2 = 0.0;  ///< fitted envelope constants
    double window_lo = 0.0, window_hi = 0.0;
};

/// Radial table of u(., t) with a cusp tail and envelopes C_i / (r log r)^2
/// fitted over [max(10, window_start), r_max].
SliceMetric slice_metric(const RicciSolution& sol, double t, double window_start = 10.0);

struct RatioTrack {
    double t = 0.0;
    double area = 0.0;
    double c1 = 0.0, c2 = 0.0;
    std::optional<double> best_ratio;
    std::optional<double> b0;
    bool below = false;
    std::optional<ClosedCurve> curve;
    std::string error;
};

/// Slice minimization uses a bounded budget: cusp tails have no minimizer,
/// so descent pushes curves outward until the budget runs out.
struct TrackOptions {
    MinimizeOptions minimize = default_minimize();
    std::size_t start_count = 3;
    std::size_t threads = 1;

    static MinimizeOptions default_minimize() {
        MinimizeOptions m;
        m.vertices = 256;
        m.coarse_stages = {64, 128};
        m.flow.max_steps = 400;
        return m;
    }
};

/// For each time: slice metric, b0 from the fitted envelopes, and the
/// minimizer's best ratio. Errors are recorded per slice.
std::vector<RatioTrack> track_ratio(const RicciSolution& sol, const std::vector<double>& times,
                                    const TrackOptions& opts = {});

std::string track_csv(const std::vector<RatioTrack>& rows);  ///< "t,area,c1,c2,best_ratio,b0,below"

} // namespace isoflow
