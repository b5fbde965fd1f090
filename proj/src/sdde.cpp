#include "raz/sdde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "raz/util.hpp"

namespace raz {

namespace {

// Cubic Hermite on [t0, t1] with endpoint values/slopes; s = (t - t0)/h may
// lie outside [0, 1] (shallow extrapolation of the final segment).
double hermite_value(double t0, double t1, double u0, double u1, double d0, double d1,
                     double t) {
    const double h = t1 - t0;
    const double s = (t - t0) / h;
    const double s2 = s * s, s3 = s2 * s;
    return (2.0 * s3 - 3.0 * s2 + 1.0) * u0 + (s3 - 2.0 * s2 + s) * h * d0 +
           (-2.0 * s3 + 3.0 * s2) * u1 + (s3 - s2) * h * d1;
}

double hermite_slope(double t0, double t1, double u0, double u1, double d0, double d1,
                     double t) {
    const double h = t1 - t0;
    const double s = (t - t0) / h;
    const double s2 = s * s;
    return (6.0 * s2 - 6.0 * s) * (u0 - u1) / h + (3.0 * s2 - 4.0 * s + 1.0) * d0 +
           (3.0 * s2 - 2.0 * s) * d1;
}

std::size_t segment_index(const std::vector<double>& ts, double t) {
    const std::size_t last = ts.size() - 2; // callers guarantee >= 2 nodes
    const double h = ts[1] - ts[0];
    double guess = (t - ts.front()) / h;
    std::size_t i = guess <= 0.0 ? 0 : std::min(last, static_cast<std::size_t>(guess));
    while (i < last && t > ts[i + 1])
        ++i;
    while (i > 0 && t < ts[i])
        --i;
    return i;
}

} // namespace

// ---------------------------------------------------------------------------
// HistoryFunction

HistoryFunction HistoryFunction::constant(double value) {
    if (!std::isfinite(value))
        throw DomainError("history value must be finite");
    HistoryFunction h;
    h.us_ = {value};
    return h;
}

HistoryFunction HistoryFunction::table(std::vector<double> ts, std::vector<double> us) {
    const std::size_t n = ts.size();
    if (n < 2 || us.size() != n)
        throw DomainError("history table needs >= 2 knots with matching value count");
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(ts[i]) || !std::isfinite(us[i]))
            throw DomainError("history table entries must be finite");
        if (i > 0 && !(ts[i] > ts[i - 1]))
            throw DomainError("history knots must be strictly increasing");
    }
    if (ts.back() != 0.0)
        throw DomainError("history table must end at t = 0");

    // Monotone cubic (Fritsch-Carlson) slopes: no overshoot between knots, so
    // the interpolant's range per interval is spanned by the knot values.
    std::vector<double> slopes(n, 0.0);
    std::vector<double> dt(n - 1), du(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        dt[i] = ts[i + 1] - ts[i];
        du[i] = (us[i + 1] - us[i]) / dt[i];
    }
    if (n == 2) {
        slopes[0] = slopes[1] = du[0];
    } else {
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (du[i - 1] * du[i] <= 0.0) {
                slopes[i] = 0.0;
            } else {
                const double w1 = 2.0 * dt[i] + dt[i - 1];
                const double w2 = dt[i] + 2.0 * dt[i - 1];
                slopes[i] = (w1 + w2) / (w1 / du[i - 1] + w2 / du[i]);
            }
        }
        const auto end_slope = [](double h0, double h1, double d0, double d1) {
            double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
            if (sign3(s) != sign3(d0))
                return 0.0;
            if (sign3(d0) != sign3(d1) && std::abs(s) > 3.0 * std::abs(d0))
                return 3.0 * d0;
            return s;
        };
        slopes[0] = end_slope(dt[0], dt[1], du[0], du[1]);
        slopes[n - 1] = end_slope(dt[n - 2], dt[n - 3], du[n - 2], du[n - 3]);
    }

    HistoryFunction h;
    h.ts_ = std::move(ts);
    h.us_ = std::move(us);
    h.slopes_ = std::move(slopes);
    return h;
}

double HistoryFunction::operator()(double t) const {
    if (is_constant())
        return us_[0];
    if (t <= ts_.front())
        return us_.front();
    if (t >= ts_.back())
        return us_.back();
    const std::size_t i =
        static_cast<std::size_t>(std::upper_bound(ts_.begin(), ts_.end(), t) - ts_.begin()) - 1;
    return hermite_value(ts_[i], ts_[i + 1], us_[i], us_[i + 1], slopes_[i], slopes_[i + 1], t);
}

double HistoryFunction::value_at_zero() const { return us_.back(); }

double HistoryFunction::max_value() const {
    return *std::max_element(us_.begin(), us_.end());
}

// ---------------------------------------------------------------------------
// Trajectory dense output

double Trajectory::value(double t) const {
    if (t < 0.0)
        return history(t);
    if (ts.size() < 2)
        return us.empty() ? history(0.0) : us[0] + t * (dus.empty() ? 0.0 : dus[0]);
    const std::size_t i = t >= ts.back() ? ts.size() - 2 : segment_index(ts, t);
    return hermite_value(ts[i], ts[i + 1], us[i], us[i + 1], dus[i], dus[i + 1], t);
}

double Trajectory::derivative(double t) const {
    if (t < 0.0)
        throw DomainError("trajectory derivative is defined for t >= 0 only");
    if (ts.size() < 2)
        return dus.empty() ? 0.0 : dus[0];
    const std::size_t i = t >= ts.back() ? ts.size() - 2 : segment_index(ts, t);
    return hermite_slope(ts[i], ts[i + 1], us[i], us[i + 1], dus[i], dus[i + 1], t);
}

// ---------------------------------------------------------------------------
// Right-hand side and integration

double rhs(const Trajectory& traj, double t, double u) {
    const Params& p = traj.params;
    const double lag = p.a + p.c * u;
    if (!(lag > 0.0))
        throw DelayCollapse("delay a + c*u = " + fmt17(lag) + " at t = " + fmt17(t) +
                            " (solution breached the lower barrier)");
    return p.mu * u + p.sigma * traj.value(t - lag);
}

Trajectory integrate(const Params& p, const HistoryFunction& phi, double t_end,
                     double step) {
    validate(p);
    if (!(t_end > 0.0) || !std::isfinite(t_end))
        throw DomainError("t_end must be positive and finite");
    const double h_req = step > 0.0 ? step : std::min(1e-3, p.a / 100.0);
    if (h_req > p.a / 4.0)
        throw StepTooLarge("step " + fmt17(h_req) + " exceeds a/4 = " + fmt17(p.a / 4.0));
    const long long n =
        std::max<long long>(1, static_cast<long long>(std::ceil(t_end / h_req - 1e-9)));
    const double h = t_end / static_cast<double>(n);

    Trajectory traj;
    traj.params = p;
    traj.history = phi;
    traj.step = h;
    traj.ts.reserve(n + 1);
    traj.us.reserve(n + 1);
    traj.dus.reserve(n + 1);

    const double u0 = phi.value_at_zero();
    traj.ts.push_back(0.0);
    traj.us.push_back(u0);
    traj.dus.push_back(rhs(traj, 0.0, u0));

    for (long long i = 0; i < n; ++i) {
        const double t = traj.ts.back();
        const double u = traj.us.back();
        const double k1 = traj.dus.back();
        const double k2 = rhs(traj, t + 0.5 * h, u + 0.5 * h * k1);
        const double k3 = rhs(traj, t + 0.5 * h, u + 0.5 * h * k2);
        const double k4 = rhs(traj, t + h, u + h * k3);
        const double u1 = u + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const double t1 = i + 1 == n ? t_end : static_cast<double>(i + 1) * h;
        // Close the step before pushing: the node slope comes from the same
        // explicit delayed lookup (extrapolating the last completed segment).
        const double d1 = rhs(traj, t1, u1);
        traj.ts.push_back(t1);
        traj.us.push_back(u1);
        traj.dus.push_back(d1);
    }

    traj.extrema = find_extrema(traj, 0.0);
    return traj;
}

// ---------------------------------------------------------------------------
// Extremum detection and classification

std::vector<ExtremumRecord> find_extrema(const Trajectory& traj, double t_start) {
    std::vector<ExtremumRecord> out;
    if (traj.ts.size() < 2)
        return out;
    if (!(t_start < traj.t_end()))
        throw DomainError("find_extrema: t_start must precede the end of the trajectory");

    const auto slope_at = [&](double t) { return rhs(traj, t, traj.value(t)); };
    std::size_t i0 = static_cast<std::size_t>(
        std::lower_bound(traj.ts.begin(), traj.ts.end(), t_start) - traj.ts.begin());
    if (i0 > 0)
        --i0; // keep one node of lead-in so a change right at t_start is caught

    double prev_sign = 0.0;
    std::size_t prev_idx = 0;
    for (std::size_t i = i0; i < traj.ts.size(); ++i) {
        const double s = sign3(traj.dus[i]);
        if (s == 0.0)
            continue;
        if (prev_sign != 0.0 && s != prev_sign) {
            double lo = traj.ts[prev_idx], hi = traj.ts[i];
            const double sign_lo = prev_sign;
            while (hi - lo > 1e-10) {
                const double mid = 0.5 * (lo + hi);
                if (mid == lo || mid == hi)
                    break;
                if (sign3(slope_at(mid)) == sign_lo)
                    lo = mid;
                else
                    hi = mid;
            }
            const double t_star = 0.5 * (lo + hi);
            if (t_star >= t_start)
                out.push_back({t_star, traj.value(t_star),
                               sign_lo > 0.0 ? ExtremumKind::Max : ExtremumKind::Min});
        }
        prev_sign = s;
        prev_idx = i;
    }
    return out;
}

const char* to_string(Behaviour b) {
    switch (b) {
    case Behaviour::MonotoneConverging: return "MonotoneConverging";
    case Behaviour::Oscillatory: return "Oscillatory";
    case Behaviour::Undetermined: return "Undetermined";
    }
    return "Undetermined";
}

Behaviour classify_behaviour(const Trajectory& traj, double window, double amp_floor) {
    if (!(window > 0.0) || traj.t_end() < 2.0 * window)
        throw DomainError("classify_behaviour requires t_end >= 2*window");
    const double t0 = traj.t_end() - window;

    int significant = 0;
    bool alternating = true;
    int last_kind = -1;
    for (const auto& e : traj.extrema) {
        if (e.t < t0 || std::abs(e.v) <= amp_floor)
            continue;
        const int kind = e.kind == ExtremumKind::Max ? 1 : 0;
        if (last_kind != -1 && kind == last_kind)
            alternating = false;
        last_kind = kind;
        ++significant;
    }
    if (significant >= 4 && alternating)
        return Behaviour::Oscillatory;
    const double tail = std::abs(traj.value(traj.t_end()));
    if (significant == 0 && (tail <= amp_floor || tail < std::abs(traj.value(t0))))
        return Behaviour::MonotoneConverging;
    return Behaviour::Undetermined;
}

std::pair<double, double> tail_amplitude(const Trajectory& traj, double window) {
    if (!(window > 0.0) || traj.t_end() < window)
        throw DomainError("tail_amplitude: window exceeds the trajectory span");
    const double t0 = traj.t_end() - window;
    double mn = std::numeric_limits<double>::infinity();
    double mx = -mn;
    const auto consider = [&](double v) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    };
    consider(traj.value(t0));
    const std::size_t i0 = static_cast<std::size_t>(
        std::lower_bound(traj.ts.begin(), traj.ts.end(), t0) - traj.ts.begin());
    for (std::size_t i = i0; i < traj.ts.size(); ++i)
        consider(traj.us[i]);
    for (const auto& e : traj.extrema)
        if (e.t >= t0)
            consider(e.v);
    return {mn, mx};
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path, int stride) {
    if (stride < 1)
        throw DomainError("write_trajectory_csv: stride must be >= 1");
    std::string out = "t,u,udot\n";
    out.reserve(out.size() + 80 * (traj.ts.size() / stride + 2));
    const std::size_t n = traj.ts.size();
    for (std::size_t i = 0; i < n; i += stride) {
        out += fmt17(traj.ts[i]);
        out += ',';
        out += fmt17(traj.us[i]);
        out += ',';
        out += fmt17(traj.dus[i]);
        out += '\n';
    }
    if (n > 0 && (n - 1) % stride != 0) {
        out += fmt17(traj.ts[n - 1]);
        out += ',';
        out += fmt17(traj.us[n - 1]);
        out += ',';
        out += fmt17(traj.dus[n - 1]);
        out += '\n';
    }
    write_file(path, out);
}

} // namespace raz
