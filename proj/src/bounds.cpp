#include "raz/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "raz/util.hpp"

namespace raz {

namespace {

void check_order(int k) {
    if (k != 1 && k != 2)
        throw DomainError("profile order k must be 1 or 2 (got " + std::to_string(k) + ")");
}

// The extremum machinery needs negative feedback at least as strong as the
// instantaneous decay: sigma <= mu < 0.
void check_machinery_params(const Params& p) {
    validate(p);
    if (!(p.sigma <= p.mu))
        throw DomainError("extremum machinery requires sigma <= mu < 0 (sigma = " +
                          std::to_string(p.sigma) + ", mu = " + std::to_string(p.mu) + ")");
}

struct QBox {
    double m0, n0, slack;
};

QBox q_box(const Params& p) {
    const DerivedConstants d = derived_constants(p);
    return {d.m0, d.n0, 1e-9 * std::max(1.0, d.n0 - d.m0)};
}

// Evaluation domain: minimum case (x in [0,n0], y in [m0,0], v in [m0,0]) or
// maximum case (x in [m0,0], y in [0,n0], v in [0,n0]), with a relative slack
// band so root brackets can probe the interval endpoints.
QBox check_q_domain(double v, double x, double y, const Params& p) {
    check_machinery_params(p);
    const QBox b = q_box(p);
    const bool min_case = x >= -b.slack && x <= b.n0 + b.slack && y >= b.m0 - b.slack &&
                          y <= b.slack && v >= b.m0 - b.slack && v <= b.slack;
    const bool max_case = x >= b.m0 - b.slack && x <= b.slack && y >= -b.slack &&
                          y <= b.n0 + b.slack && v >= -b.slack && v <= b.n0 + b.slack;
    if (!min_case && !max_case)
        throw DomainError("(v, x, y) = (" + fmt17(v) + ", " + fmt17(x) + ", " + fmt17(y) +
                          ") outside the extremum-functional domain");
    return b;
}

// Constant-profile value of Q (the k = 1 closed form; also the k = 2 value
// whenever the ramp breakpoint sits at or beyond theta = 0).
double q1_value(double v, double x, const Params& p) {
    const double L = p.a + p.c * v;
    const double E = std::exp(p.mu * L);
    return (1.0 + (p.mu / p.sigma) * E) * v + (p.sigma / p.mu) * x * (1.0 - E);
}

double dq1_value(double v, double x, const Params& p) {
    const double L = p.a + p.c * v;
    const double E = std::exp(p.mu * L);
    return 1.0 + (p.mu / p.sigma) * (1.0 + p.mu * p.c * v - (p.sigma * p.sigma * p.c / p.mu) * x) * E;
}

// Ramp breakpoint theta* = sign(y-x) * (x + (mu/sigma)*v) / D(x,y).
double ramp_breakpoint(double s, double v, double x, double D, const Params& p) {
    return s * (x + (p.mu / p.sigma) * v) / D;
}

} // namespace

double slope_bound(double x, double y, const Params& p) {
    check_machinery_params(p);
    const double rate = std::abs(p.mu) + std::abs(p.sigma);
    const double box = std::max(std::abs(x), std::abs(y));
    return rate * (1.0 + rate * box * p.c) * box;
}

double h_profile(int k, double v, double x, double y, double theta, const Params& p) {
    check_order(k);
    check_q_domain(v, x, y, p);
    const double L = p.a + p.c * v;
    const QBox b = q_box(p);
    if (theta < -L - b.slack || theta > b.slack)
        throw DomainError("profile argument theta outside [-(a+c*v), 0]");
    theta = std::clamp(theta, -L, 0.0);

    if (k == 1)
        return theta < 0.0 ? x : -(p.mu / p.sigma) * v;

    const double s = sign3(y - x);
    if (s == 0.0)
        return x;
    const double D = slope_bound(x, y, p);
    const double tstar = ramp_breakpoint(s, v, x, D, p);
    if (theta <= tstar)
        return x;
    return -(p.mu / p.sigma) * v + s * D * theta;
}

double q_closed(int k, double v, double x, double y, const Params& p) {
    check_order(k);
    check_q_domain(v, x, y, p);
    if (k == 1)
        return q1_value(v, x, p);

    const double s = sign3(y - x);
    if (s == 0.0)
        return q1_value(v, x, p); // profile constant almost everywhere
    const double D = slope_bound(x, y, p);
    const double L = p.a + p.c * v;
    const double tstar = ramp_breakpoint(s, v, x, D, p);
    if (tstar >= 0.0)
        return q1_value(v, x, p); // ramp never enters [-(a+c*v), 0]
    const double E = std::exp(p.mu * L);
    if (tstar <= -L) {
        // Ramp covers the whole interval.
        return v * E * (1.0 + p.mu / p.sigma) -
               s * (p.sigma / p.mu) * D * ((E - 1.0) / p.mu - L * E);
    }
    // Constant piece on [-(a+c*v), theta*], ramp on [theta*, 0].
    return (p.mu / p.sigma) * v * E -
           (p.sigma / p.mu) * (s * (D / p.mu) * (std::exp(-p.mu * tstar) - 1.0) + x * E);
}

namespace {

template <typename F>
double adaptive_simpson_rec(const F& f, double a, double b, double fa, double fm, double fb,
                            double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

// Composite adaptive Simpson: `panels` uniform panels, each refined adaptively.
template <typename F>
double integrate_piece(const F& f, double a, double b, double tol, int panels) {
    if (!(b > a))
        return 0.0;
    double total = 0.0;
    const double h = (b - a) / panels;
    for (int i = 0; i < panels; ++i) {
        const double pa = a + i * h;
        const double pb = i + 1 == panels ? b : pa + h;
        const double pm = 0.5 * (pa + pb);
        const double fa = f(pa), fm = f(pm), fb = f(pb);
        const double whole = (pb - pa) / 6.0 * (fa + 4.0 * fm + fb);
        total += adaptive_simpson_rec(f, pa, pb, fa, fm, fb, whole, tol / panels, 48);
    }
    return total;
}

} // namespace

double q_quadrature(int k, double v, double x, double y, const Params& p, int panels) {
    check_order(k);
    check_q_domain(v, x, y, p);
    if (panels < 2)
        throw DomainError("q_quadrature: panels must be >= 2");

    const double L = p.a + p.c * v;
    const double E = std::exp(p.mu * L);
    const double boundary = v + (p.mu / p.sigma) * v * E;
    const double scale = 1.0 + std::max({std::abs(x), std::abs(y), std::abs(v)});
    const double tol = 1e-12 * scale;

    const auto weight = [&p](double th) { return std::exp(-p.mu * th); };
    double integral = 0.0;

    const double s = k == 2 ? sign3(y - x) : 0.0;
    if (k == 1 || s == 0.0) {
        integral = integrate_piece([&](double th) { return x * weight(th); }, -L, 0.0, tol, panels);
    } else {
        const double D = slope_bound(x, y, p);
        const double tstar = std::clamp(ramp_breakpoint(s, v, x, D, p), -L, 0.0);
        const auto ramp = [&](double th) {
            return (-(p.mu / p.sigma) * v + s * D * th) * weight(th);
        };
        integral = integrate_piece([&](double th) { return x * weight(th); }, -L, tstar, tol, panels) +
                   integrate_piece(ramp, tstar, 0.0, tol, panels);
    }
    return boundary - p.sigma * integral;
}

double dq_dv(int k, double v, double x, double y, const Params& p) {
    check_order(k);
    check_q_domain(v, x, y, p);
    if (k == 1)
        return dq1_value(v, x, p);

    const double s = sign3(y - x);
    if (s == 0.0)
        return dq1_value(v, x, p);
    const double D = slope_bound(x, y, p);
    const double L = p.a + p.c * v;
    const double tstar = ramp_breakpoint(s, v, x, D, p);
    if (tstar >= 0.0)
        return dq1_value(v, x, p);
    const double E = std::exp(p.mu * L);
    if (tstar <= -L)
        return ((1.0 + p.mu * p.c * v) * (1.0 + p.mu / p.sigma) + s * p.sigma * p.c * D * L) * E;
    return (p.mu / p.sigma) * (1.0 + p.mu * p.c * v - p.sigma * p.sigma * p.c * x / p.mu) * E +
           std::exp(-p.mu * tstar);
}

double lambert_w_restricted(double z) {
    if (!std::isfinite(z) || z >= 0.0)
        throw DomainError("lambert_w_restricted: argument must lie in [-1/e, 0)");
    // ez + 1 measures the distance to the branch point at -1/e.
    const double q = std::fma(z, std::numbers::e, 1.0);
    if (q < -64.0 * std::numeric_limits<double>::epsilon())
        throw DomainError("lambert_w_restricted: argument below -1/e");
    if (q <= 0.0)
        return -1.0;
    if (q < 1e-8) {
        // Branch-point series W = -1 - r - r^2/3 - (11/72) r^3, r = sqrt(2q).
        const double r = std::sqrt(2.0 * q);
        return -1.0 - r - r * r / 3.0 - 11.0 / 72.0 * r * r * r;
    }

    const auto g = [z](double w) { return w * std::exp(w) - z; };
    // w*e^w decreases from 0- to -1/e on (-inf, -1]: g(-1) <= 0, g(-inf) -> -z > 0.
    double hi = -1.0;
    double lo = -2.0;
    while (g(lo) < 0.0)
        lo *= 2.0; // e^w underflows long before lo overflows
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi)
            break;
        if (g(mid) >= 0.0)
            lo = mid;
        else
            hi = mid;
    }
    double w = 0.5 * (lo + hi);
    // Two guarded Newton steps sharpen the last bits.
    for (int i = 0; i < 2; ++i) {
        const double ew = std::exp(w);
        const double deriv = ew * (1.0 + w);
        if (deriv == 0.0)
            break;
        const double w2 = w - (w * ew - z) / deriv;
        if (w2 >= lo && w2 <= hi && std::abs(g(w2)) <= std::abs(g(w)))
            w = w2;
    }
    return std::min(w, -1.0);
}

std::optional<double> critical_point_v_star(int k, double x, double y, const Params& p) {
    check_order(k);
    check_q_domain(0.0, x, y, p); // maximum case: x in [m0,0], y in [0,n0]
    if (!(y > 0.0))
        throw DomainError("critical_point_v_star: maximum case requires y > 0");
    if (x >= 0.0)
        return std::nullopt; // interval (0, -sigma*x/mu) is empty

    const double inv_e = std::exp(-1.0);
    const double base = 1.0 - p.mu * p.a - (p.c * p.sigma * p.sigma / p.mu) * x;
    const auto from_w = [&](double w) {
        return (w - 1.0) / (p.c * p.mu) + (p.sigma * p.sigma / (p.mu * p.mu)) * x;
    };

    if (k == 1) {
        const double z = -(p.sigma / p.mu) * std::exp(base);
        if (z < -inv_e)
            return std::nullopt;
        return from_w(lambert_w_restricted(z));
    }

    // k = 2: the Lambert argument keeps a residual v-dependence through the
    // ramp breakpoint; resolve it by damped fixed-point iteration.
    const double s = sign3(y - x); // +1 here since x < 0 < y
    const double D = slope_bound(x, y, p);
    double v = 0.5 * (-(p.sigma / p.mu) * x);
    if (auto seed = critical_point_v_star(1, x, y, p))
        v = *seed;
    for (int i = 0; i < 200; ++i) {
        const double expo = base - p.mu * s * (x + (p.mu / p.sigma) * v) / D;
        const double z = -(p.sigma / p.mu) * std::exp(expo);
        if (z < -inv_e)
            return std::nullopt;
        const double v_next = from_w(lambert_w_restricted(z));
        if (std::abs(v_next - v) <= 1e-12 * (1.0 + std::abs(v_next)))
            return v_next;
        v = 0.5 * (v + v_next);
    }
    return std::nullopt;
}

namespace {

// Safeguarded Newton inside a sign-change bracket (Q < 0 at lo, Q > 0 at hi).
// Newton steps that leave the bracket fall back to bisection, so convergence
// is guaranteed; `tol` is the residual target on |Q|.  The Lemma guarantees a
// single simple root, so a warm seed converges in a handful of evaluations.
double safeguarded_root(int k, double lo, double hi, double seed, double x, double y,
                        const Params& p, double tol) {
    const auto q = [&](double v) { return q_closed(k, v, x, y, p); };
    const double resid_target = std::min(tol, 1e-12);

    double v = std::clamp(seed, lo, hi);
    if (!(v > lo && v < hi))
        v = 0.5 * (lo + hi);
    double best_v = v;
    double best_q = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 160; ++i) {
        const double qv = q(v);
        if (std::abs(qv) < std::abs(best_q)) {
            best_q = qv;
            best_v = v;
        }
        if (std::abs(qv) <= resid_target)
            return v;
        if (qv < 0.0)
            lo = v;
        else
            hi = v;
        double v2 = std::numeric_limits<double>::quiet_NaN();
        const double d = dq_dv(k, v, x, y, p);
        if (d != 0.0)
            v2 = v - qv / d;
        if (!(v2 > lo && v2 < hi))
            v2 = 0.5 * (lo + hi);
        if (v2 == lo || v2 == hi || !(lo < hi))
            break; // bracket exhausted at machine resolution
        v = v2;
    }
    return best_v;
}

} // namespace

double bound_root_m(int k, double x, double y, const Params& p, double tol) {
    check_order(k);
    const QBox b = q_box(p);
    if (x < -b.slack || x > b.n0 + b.slack || y < b.m0 - b.slack || y > b.slack)
        throw DomainError("bound_root_m: need x in [0, n0] and y in [m0, 0]");
    x = std::clamp(x, 0.0, b.n0);
    y = std::clamp(y, b.m0, 0.0);
    if (x <= 0.0)
        return 0.0;

    const double lo0 = std::max(b.m0, -(p.sigma / p.mu) * x);
    const double qlo = q_closed(k, lo0, x, y, p);
    const double qhi = q_closed(k, 0.0, x, y, p);
    if (qlo >= 0.0) {
        if (qlo <= 1e-10 * (1.0 + std::abs(x)))
            return lo0; // degenerate bracket (sigma = mu collapses the root onto lo)
        throw BracketError("bound_root_m: no sign change on the bracket");
    }
    if (qhi <= 0.0)
        throw BracketError("bound_root_m: functional not positive at v = 0");
    return safeguarded_root(k, lo0, 0.0, y, x, y, p, tol);
}

double bound_root_n(int k, double x, double y, const Params& p, double tol) {
    check_order(k);
    const QBox b = q_box(p);
    if (x < b.m0 - b.slack || x > b.slack || y < -b.slack || y > b.n0 + b.slack)
        throw DomainError("bound_root_n: need x in [m0, 0] and y in [0, n0]");
    x = std::clamp(x, b.m0, 0.0);
    y = std::clamp(y, 0.0, b.n0);
    if (x >= 0.0)
        return 0.0;

    const double hi0 = -(p.sigma / p.mu) * x;
    const double qlo = q_closed(k, 0.0, x, y, p);
    const double qhi = q_closed(k, hi0, x, y, p);
    if (qhi <= 0.0) {
        if (-qhi <= 1e-10 * (1.0 + std::abs(x)))
            return hi0;
        throw BracketError("bound_root_n: no sign change on the bracket");
    }
    if (qlo >= 0.0)
        throw BracketError("bound_root_n: functional not negative at v = 0");
    return safeguarded_root(k, 0.0, hi0, y, x, y, p, tol);
}

namespace {

double fixed_point_residual(int k, double m, double n, const Params& p) {
    return std::max(std::abs(q_closed(k, n, m, n, p)), std::abs(q_closed(k, m, n, m, p)));
}

} // namespace

IterationTrace iterate_bounds(int k, const Params& p, int max_n, double tol) {
    check_order(k);
    check_machinery_params(p);
    if (max_n < 1)
        throw DomainError("iterate_bounds: max_n must be >= 1");
    const DerivedConstants d = derived_constants(p);

    IterationTrace trace;
    trace.k = k;
    double m = d.m0, n = d.n0;
    double settle = 5.0 * d.tau0; // burn-in heuristic for the first pair
    trace.pairs.push_back({m, n});
    trace.settle_times.push_back(settle);

    for (int it = 0; it < max_n; ++it) {
        const double m_next = bound_root_m(k, n, m, p);
        const double n_next = bound_root_n(k, m, n, p);
        settle += (k + 1) * (p.a + p.c * n); // spacing uses the pre-update ceiling
        const double step = std::abs(m_next - m) + std::abs(n_next - n);
        m = m_next;
        n = n_next;
        trace.pairs.push_back({m, n});
        trace.settle_times.push_back(settle);
        if (step <= tol) {
            trace.converged = true;
            break;
        }
    }
    trace.residual = fixed_point_residual(k, m, n, p);
    return trace;
}

namespace detail {

LimitOutcome run_limit_iteration(int k, const Params& p, double tol, int max_n) {
    check_order(k);
    check_machinery_params(p);
    const DerivedConstants d = derived_constants(p);

    double m = d.m0, n = d.n0;
    double residual = fixed_point_residual(k, m, n, p);
    int iters = 0;
    int stalls = 0;
    const double stall_step = 1e-15 * (d.n0 - d.m0);
    bool converged = false;

    for (; iters < max_n; ) {
        const double m_next = bound_root_m(k, n, m, p);
        const double n_next = bound_root_n(k, m, n, p);
        const double step = std::abs(m_next - m) + std::abs(n_next - n);
        m = m_next;
        n = n_next;
        ++iters;
        residual = fixed_point_residual(k, m, n, p);
        if (step <= tol && residual <= tol) {
            converged = true;
            break;
        }
        if (step <= stall_step) {
            if (++stalls >= 5)
                break; // pair stopped moving yet the residual stays above tol
        } else {
            stalls = 0;
        }
    }
    return {{m, n}, residual, iters, converged};
}

} // namespace detail

LimitResult limit_bounds(int k, const Params& p, double tol, int max_n) {
    const detail::LimitOutcome out = detail::run_limit_iteration(k, p, tol, max_n);
    if (!out.converged)
        throw ConvergenceError("limit_bounds: residual " + fmt17(out.residual) + " after " +
                               std::to_string(out.iters) + " iterations (tol " + fmt17(tol) + ")");
    return {out.pair, out.residual, out.iters};
}

const char* to_string(GasVerdict v) {
    switch (v) {
    case GasVerdict::GasCone: return "GAS_cone";
    case GasVerdict::GasFixedPoint: return "GAS_fixed_point";
    case GasVerdict::NotCertified: return "NotCertified";
    }
    return "NotCertified";
}

GasVerdict is_gas(const Params& p, int k, double tol) {
    check_order(k);
    validate(p);
    if (std::abs(p.sigma) < -p.mu)
        return GasVerdict::GasCone;
    const LimitResult lr = limit_bounds(k, p, std::min(tol, 1e-9));
    return std::max(std::abs(lr.pair.m), lr.pair.n) <= tol ? GasVerdict::GasFixedPoint
                                                           : GasVerdict::NotCertified;
}

namespace detail {

std::optional<double> q2_switch_v(double x, double y, const Params& p) {
    check_machinery_params(p);
    const double s = sign3(y - x);
    if (s == 0.0)
        return std::nullopt;
    const double D = slope_bound(x, y, p);
    const double denom = p.c + s * p.mu / (p.sigma * D);
    if (denom == 0.0)
        return std::nullopt;
    const double v = -(p.a + s * x / D) / denom;
    // Only meaningful inside the evaluation interval of the respective case.
    const QBox b = q_box(p);
    if (x <= 0.0 && y >= 0.0) {
        const double hi = -(p.sigma / p.mu) * x;
        if (v > 0.0 && v < hi)
            return v;
        return std::nullopt;
    }
    if (v > b.m0 && v < 0.0)
        return v;
    return std::nullopt;
}

double dq2_two_piece(double v, double x, double y, const Params& p) {
    const double s = sign3(y - x);
    if (s == 0.0)
        return dq1_value(v, x, p);
    const double D = slope_bound(x, y, p);
    const double L = p.a + p.c * v;
    const double tstar = ramp_breakpoint(s, v, x, D, p);
    return (p.mu / p.sigma) * (1.0 + p.mu * p.c * v - p.sigma * p.sigma * p.c * x / p.mu) *
               std::exp(p.mu * L) +
           std::exp(-p.mu * tstar);
}

double dq2_all_ramp(double v, double x, double y, const Params& p) {
    const double s = sign3(y - x);
    if (s == 0.0)
        return dq1_value(v, x, p);
    const double D = slope_bound(x, y, p);
    const double L = p.a + p.c * v;
    return ((1.0 + p.mu * p.c * v) * (1.0 + p.mu / p.sigma) + s * p.sigma * p.c * D * L) *
           std::exp(p.mu * L);
}

} // namespace detail

} // namespace raz
