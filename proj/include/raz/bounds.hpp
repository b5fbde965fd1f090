#pragma once

#include <optional>
#include <vector>

#include "raz/model.hpp"

// Certified shrinking bounds on the persistent dynamics of the delay model,
// built from the value a solution must have at a relative extremum.
//
// At a relative extremum u(t) = v with u'(t) = 0 the delayed value satisfies
// u(t - a - c*v) = -(mu/sigma)*v, and integrating the equation back over one
// delay interval expresses v through the solution segment on [t-a-c*v, t].
// Replacing that unknown segment by an extremal admissible profile H_k(v,x,y)
// (k = 1: worst-case constant, k = 2: constant plus a slope-limited ramp into
// the extremum) yields a scalar functional
//
//   Q_k(v,x,y) = v + (mu/sigma)*v*e^{mu(a+cv)}
//                - sigma * Int_{-(a+cv)}^{0} e^{-mu θ} H_k(v,x,y)(θ) dθ
//
// whose sign constrains every maximum (Q_k(v,M,N) <= 0) and minimum
// (Q_k(v,N,M) >= 0) once the solution is confined to [M, N].  Roots of Q_k
// therefore tighten [M, N] iteratively.  Everything here requires
// sigma <= mu < 0 (negative feedback at least as strong as the decay).

namespace raz {

// ---------------------------------------------------------------------------
// Extremal profiles and the extremum functional.

// Uniform slope bound for the delayed solution segment while the solution
// lives in [min(x,y), max(x,y)]-type boxes:
//   D(x,y) = (|mu|+|sigma|) * (1 + (|mu|+|sigma|)*max(|x|,|y|)*c) * max(|x|,|y|).
// Symmetric in (x, y); zero only at x = y = 0.
double slope_bound(double x, double y, const Params& p);

// Profile value H_k(v,x,y)(theta) for theta in [-(a+c*v), 0].
//   k = 1: x for theta < 0, -(mu/sigma)*v at theta = 0.
//   k = 2: x up to the breakpoint theta* = sign(y-x)*(x + mu*v/sigma)/D(x,y),
//          then the ramp -(mu/sigma)*v + sign(y-x)*D(x,y)*theta.
// sign(0) = 0 collapses k = 2 onto the constant profile.
double h_profile(int k, double v, double x, double y, double theta, const Params& p);

// Closed-form Q_k(v,x,y).  Domain (checked): minimum case x in [0,n0],
// y in [m0,0], v in [m0,0]; maximum case x in [m0,0], y in [0,n0], v in [0,n0].
double q_closed(int k, double v, double x, double y, const Params& p);

// Independent evaluation of Q_k by adaptive composite quadrature of the
// profile integral, split at the k = 2 breakpoint; panels >= 2 initial
// subdivisions per smooth piece.  Oracle for q_closed.
double q_quadrature(int k, double v, double x, double y, const Params& p,
                    int panels = 8);

// Closed-form partial derivative dQ_k/dv at fixed (x, y).
double dq_dv(int k, double v, double x, double y, const Params& p);

// Lower real branch of the Lambert W function restricted to W <= -1,
// defined for z in [-1/e, 0); W(-1/e) = -1.  Throws DomainError outside.
double lambert_w_restricted(double z);

// Candidate location where dQ_k/dv can change sign on the maximum-case
// interval (0, -sigma*x/mu), obtained from the restricted Lambert W; absent
// when the Lambert argument falls below -1/e (derivative then keeps one
// sign).  Diagnostic companion to the root maps.
std::optional<double> critical_point_v_star(int k, double x, double y, const Params& p);

// ---------------------------------------------------------------------------
// Root maps and the bound iteration.

// Minimum-case root map: the unique zero of Q_k(., x, y) in
// [max(m0, -sigma*x/mu), 0] for x in [0, n0], y in [m0, 0).  Q_k is negative
// below the root and positive between root and 0.  Bracketed bisection with
// a guarded Newton polish; tol bounds the bracket width.
double bound_root_m(int k, double x, double y, const Params& p, double tol = 1e-12);

// Maximum-case root map: the unique zero of Q_k(., x, y) in [0, -sigma*x/mu]
// for x in [m0, 0], y in (0, n0].  Negative below the root, positive above.
double bound_root_n(int k, double x, double y, const Params& p, double tol = 1e-12);

struct BoundPair {
    double m; // lower bound, in [m0, 0]
    double n; // upper bound, in [0, n0]
};

struct IterationTrace {
    int k = 1;
    std::vector<BoundPair> pairs;      // pairs[0] = (m0, n0); nested in n
    std::vector<double> settle_times;  // validity times; spaced by (k+1)*(a+c*n)
    bool converged = false;            // pair step reached tol before max_n
    double residual = 0.0;             // fixed-point residual at the last pair
};

// Monotone bound recursion from (m0, n0):
//   m_{n+1} = bound_root_m(k, n_n, m_n),  n_{n+1} = bound_root_n(k, m_n, n_n),
// stopping when |Δm| + |Δn| <= tol or after max_n steps.  Settle times start
// at the 5*tau0 burn-in heuristic and advance by (k+1)*(a + c*n_n).
IterationTrace iterate_bounds(int k, const Params& p, int max_n = 10000,
                              double tol = 1e-9);

struct LimitResult {
    BoundPair pair;       // outermost solution of the limit equations
    double residual;      // max(|Q_k(n,m,n)|, |Q_k(m,n,m)|)
    int iters;            // iterations consumed
};

// Iterate to the limit pair (m_inf, n_inf) solving
//   Q_k(n_inf, m_inf, n_inf) = Q_k(m_inf, n_inf, m_inf) = 0,
// stopping when both the pair step and the residual are <= tol; throws
// ConvergenceError if max_n is exhausted or the iteration stagnates first.
LimitResult limit_bounds(int k, const Params& p, double tol = 1e-9,
                         int max_n = 10000);

enum class GasVerdict {
    GasCone,       // |sigma| < -mu: certified with no computation
    GasFixedPoint, // limit pair collapsed to (0, 0) within tol
    NotCertified,
};

const char* to_string(GasVerdict v);

// Numerically verifiable global-asymptotic-stability test for the zero
// solution.  Propagates ConvergenceError from limit_bounds.
GasVerdict is_gas(const Params& p, int k, double tol = 1e-9);

// ---------------------------------------------------------------------------
// Internals exposed for verification harnesses.

namespace detail {

// v where the k = 2 profile switches between the two-piece and all-ramp
// regimes (breakpoint reaches -(a+c*v)); absent if the switch lies outside
// the evaluation interval for these (x, y).
std::optional<double> q2_switch_v(double x, double y, const Params& p);

// The two dQ_2/dv branch formulas, evaluated unconditionally (for checking
// continuity across the switch).
double dq2_two_piece(double v, double x, double y, const Params& p);
double dq2_all_ramp(double v, double x, double y, const Params& p);

// Non-throwing core of limit_bounds (used by sweeps to report partial rows).
struct LimitOutcome {
    BoundPair pair;
    double residual;
    int iters;
    bool converged;
};
LimitOutcome run_limit_iteration(int k, const Params& p, double tol, int max_n);

} // namespace detail

} // namespace raz
