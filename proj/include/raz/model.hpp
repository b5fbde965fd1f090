#pragma once

#include <optional>
#include <string>
#include <utility>

#include "raz/errors.hpp"

// Scalar state-dependent delay model
//
//     u'(t) = mu*u(t) + sigma*u(t - a - c*u(t)),    u(t) = phi(t) for t <= 0,
//
// parameter validation, derived constants, and the delay-independent
// stability region of the zero solution in the (mu, sigma) plane.

namespace raz {

struct Params {
    double a = 1.0;     // base delay, a > 0
    double c = 1.0;     // state-dependence coefficient, c > 0
    double mu = -1.0;   // instantaneous coefficient, mu < 0
    double sigma = 0.0; // delayed coefficient, mu + sigma < 0
};

// Returns params unchanged if valid, else throws DomainError naming the first
// violated constraint in the order: a, c, mu, mu + sigma.
Params validate(const Params& p);

struct DerivedConstants {
    double m0;   // -a/c: floor below which the deviating argument reverses
    double n0;   // ceiling of persistent dynamics (a*sigma/(c*mu) for sigma <= 0)
    double tau0; // a + c*n0
    double tau;  // a + c*max(n0, n_override): effective history depth
};

// For sigma > 0 the ceiling is not intrinsic and the caller must supply it
// via n_override (>= 0); for sigma <= 0 n_override only deepens tau.
DerivedConstants derived_constants(const Params& p,
                                   std::optional<double> n_override = std::nullopt);

enum class RegionLabel {
    Cone,          // |sigma| < -mu: delay-independent stability
    Wedge,         // inside the stability region, mu < 0, not in the cone
    Cusp,          // inside the stability region with mu >= 0
    BoundaryLine,  // on sigma = -mu, mu <= 1/a (within boundary_eps)
    BoundaryCurve, // on the lower boundary curve (within boundary_eps)
    Outside,
};

const char* to_string(RegionLabel label);

// Lower boundary of the stability region, parameterised by s in (0, pi/a):
// (mu, sigma) = (s*cot(a*s), -s*csc(a*s)). Throws DomainError outside (0, pi/a).
std::pair<double, double> stability_boundary_point(double s, double a);

// sigma value of the lower boundary curve at a given mu < 1/a (bisection on
// s*cot(a*s) = mu, which is strictly decreasing in s).
double wedge_lower_sigma(double mu, double a);

// Classify (mu, sigma) against the stability region for delay parameter a.
// Unlike validate(), mu >= 0 is permitted here (the cusp exists there).
RegionLabel classify_region(const Params& p, double boundary_eps = 1e-9);

} // namespace raz
