#pragma once

// Numerical integration of the state-dependent delay equation
//
//     u'(t) = mu*u(t) + sigma*u(t - a - c*u(t)),    u(t) = phi(t) for t <= 0,
//
// with dense output, extremum detection, behaviour classification, and tail
// statistics.  The integrator is a classical 4-stage fixed-step scheme with
// cubic Hermite dense output; the state-dependent delay is treated
// explicitly (delayed values inside the live step extrapolate the most
// recent completed segment, which stays shallow while step <= a/4).

#include <cstddef>
#include <string>
#include <vector>

#include "raz/errors.hpp"
#include "raz/model.hpp"

namespace raz {

// Initial data on t <= 0: either a constant or a monotone-cubic interpolant
// through sorted knots whose last abscissa is exactly 0.  Queries left of the
// first knot clamp to the first value.
class HistoryFunction {
public:
    static HistoryFunction constant(double value);
    static HistoryFunction table(std::vector<double> ts, std::vector<double> us);

    double operator()(double t) const;
    double value_at_zero() const;
    double max_value() const; // largest knot value (== the constant if constant)
    bool is_constant() const { return ts_.empty(); }

private:
    HistoryFunction() = default;
    std::vector<double> ts_, us_, slopes_; // empty ts_ => constant us_[0]
};

enum class ExtremumKind { Min, Max };

struct ExtremumRecord {
    double t;
    double v;
    ExtremumKind kind;
};

// Solution nodes plus the data needed to evaluate anywhere: history for
// t < 0, per-step cubic Hermite dense output on [0, t_end], extrapolation of
// the final segment just beyond t_end.  Immutable after integrate() returns.
struct Trajectory {
    Params params;
    HistoryFunction history = HistoryFunction::constant(0.0);
    double step = 0.0;
    std::vector<double> ts, us, dus; // nodes, ts[0] == 0
    std::vector<ExtremumRecord> extrema; // refined local extrema on (0, t_end]

    double t_end() const { return ts.empty() ? 0.0 : ts.back(); }
    double value(double t) const;
    double derivative(double t) const; // valid for t >= 0 only
};

// Instantaneous right-hand side mu*u + sigma*u(t - a - c*u) with the delayed
// value read from the trajectory (history / dense output / shallow
// extrapolation).  Throws DelayCollapse if a + c*u <= 0.
double rhs(const Trajectory& traj, double t, double u);

// Integrate from the history up to t_end.  step <= 0 selects the default
// min(1e-3, a/100); requesting step > a/4 throws StepTooLarge.  The returned
// trajectory carries refined extrema for the whole run.
Trajectory integrate(const Params& p, const HistoryFunction& phi, double t_end,
                     double step = 0.0);

// Locate sign changes of the derivative (evaluated through rhs along the
// dense output) at t >= t_start, refined by bisection to time tolerance
// 1e-10.  Kinds alternate; an equilibrium yields an empty list.
std::vector<ExtremumRecord> find_extrema(const Trajectory& traj, double t_start);

enum class Behaviour { MonotoneConverging, Oscillatory, Undetermined };
const char* to_string(Behaviour b);

// Classify the final window of a run.  Extrema with |v| <= amp_floor count as
// numerically settled rather than as oscillation, so a decaying-oscillation
// tail that has collapsed below the floor classifies as converged.
// Requires t_end >= 2*window.
Behaviour classify_behaviour(const Trajectory& traj, double window,
                             double amp_floor = 1e-8);

// Min and max of u over [t_end - window, t_end], from the stored nodes plus
// refined extremum records.
std::pair<double, double> tail_amplitude(const Trajectory& traj, double window);

// CSV export: header `t,u,udot`, one row per stored node (every stride-th
// node, always including the last), 17 significant digits.
void write_trajectory_csv(const Trajectory& traj, const std::string& path,
                          int stride = 1);

} // namespace raz
