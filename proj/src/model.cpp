#include "raz/model.hpp"

#include <cmath>

namespace raz {

Params validate(const Params& p) {
    if (!(p.a > 0.0) || !std::isfinite(p.a))
        throw DomainError("validate: a must be positive (a = " + std::to_string(p.a) + ")");
    if (!(p.c > 0.0) || !std::isfinite(p.c))
        throw DomainError("validate: c must be positive (c = " + std::to_string(p.c) + ")");
    if (!(p.mu < 0.0) || !std::isfinite(p.mu))
        throw DomainError("validate: mu must be negative (mu = " + std::to_string(p.mu) + ")");
    if (!std::isfinite(p.sigma) || !(p.mu + p.sigma < 0.0))
        throw DomainError("validate: mu + sigma must be negative (mu + sigma = " +
                          std::to_string(p.mu + p.sigma) + ")");
    return p;
}

DerivedConstants derived_constants(const Params& p, std::optional<double> n_override) {
    validate(p);
    if (n_override && !(*n_override >= 0.0))
        throw DomainError("derived_constants: n_override must be >= 0");

    DerivedConstants d{};
    d.m0 = -p.a / p.c;
    if (p.sigma <= 0.0) {
        d.n0 = p.a * p.sigma / (p.c * p.mu);
    } else {
        // Positive feedback has no intrinsic ceiling; the caller supplies one.
        if (!n_override)
            throw DomainError("derived_constants: sigma > 0 requires n_override");
        d.n0 = *n_override;
    }
    d.tau0 = p.a + p.c * d.n0;
    const double n_eff = n_override ? std::max(d.n0, *n_override) : d.n0;
    d.tau = p.a + p.c * n_eff;
    return d;
}

const char* to_string(RegionLabel label) {
    switch (label) {
    case RegionLabel::Cone: return "Cone";
    case RegionLabel::Wedge: return "Wedge";
    case RegionLabel::Cusp: return "Cusp";
    case RegionLabel::BoundaryLine: return "BoundaryLine";
    case RegionLabel::BoundaryCurve: return "BoundaryCurve";
    case RegionLabel::Outside: return "Outside";
    }
    return "Outside";
}

std::pair<double, double> stability_boundary_point(double s, double a) {
    if (!(a > 0.0))
        throw DomainError("stability_boundary_point: a must be positive");
    if (!(s > 0.0) || !(s < M_PI / a))
        throw DomainError("stability_boundary_point: s must lie in (0, pi/a)");
    const double as = a * s;
    return {s * std::cos(as) / std::sin(as), -s / std::sin(as)};
}

namespace {

// f(s) = s*cot(a*s) is strictly decreasing on (0, pi/a) from 1/a to -inf.
double mu_of_s(double s, double a) { return s * std::cos(a * s) / std::sin(a * s); }

} // namespace

double wedge_lower_sigma(double mu, double a) {
    if (!(a > 0.0))
        throw DomainError("wedge_lower_sigma: a must be positive");
    if (!(mu < 1.0 / a))
        throw DomainError("wedge_lower_sigma: mu must be below 1/a");
    const double eps = 1e-12;
    double lo = eps, hi = M_PI / a - eps;
    // mu_of_s(lo) ~ 1/a > mu, mu_of_s(hi) -> -inf < mu.
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mu_of_s(mid, a) > mu)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-16 * (1.0 + hi))
            break;
    }
    const double s = 0.5 * (lo + hi);
    return -s / std::sin(a * s);
}

RegionLabel classify_region(const Params& p, double boundary_eps) {
    if (!(p.a > 0.0))
        throw DomainError("classify_region: a must be positive");
    const double mu = p.mu, sigma = p.sigma, a = p.a;

    // Boundary bands take precedence over the open regions they delimit.
    // The line sigma = -mu bounds the region above, up to its endpoint at
    // mu = 1/a where it meets the lower boundary curve.
    if (mu <= 1.0 / a + boundary_eps && std::abs(sigma + mu) <= boundary_eps)
        return RegionLabel::BoundaryLine;
    if (mu >= 1.0 / a)
        return RegionLabel::Outside;

    const double sigma_curve = wedge_lower_sigma(mu, a);
    if (std::abs(sigma - sigma_curve) <= boundary_eps)
        return RegionLabel::BoundaryCurve;

    if (std::abs(sigma) < -mu)
        return RegionLabel::Cone;
    if (sigma > sigma_curve && sigma < -mu)
        return mu < 0.0 ? RegionLabel::Wedge : RegionLabel::Cusp;
    return RegionLabel::Outside;
}

} // namespace raz
