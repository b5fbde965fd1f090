#pragma once

// Parameter-plane computations: grids of limit bounds rendered to CSV/SVG
// heatmaps, certified-stability boundary tracing in sigma per mu, and
// bound-versus-simulation comparison tables along a sigma family.

#include <optional>
#include <string>
#include <vector>

#include "raz/bounds.hpp"
#include "raz/model.hpp"

namespace raz {

struct GridSpec {
    double mu_lo = -3.0, mu_hi = -0.05;
    int mu_count = 200;
    double sigma_lo = -3.2, sigma_hi = -0.05;
    int sigma_count = 200;
    double a = 1.0, c = 1.0;
    int k = 2;
};

// Throws DomainError unless lo < hi, counts >= 2, a > 0, c > 0, k in {1,2}.
const GridSpec& validate(const GridSpec& g);

// i-th grid value of a (lo, hi, count) axis.
double grid_value(double lo, double hi, int count, int i);

enum class RowStatus { Ok, Skipped, Failed };
const char* to_string(RowStatus s);

struct SweepRow {
    double mu = 0.0, sigma = 0.0;
    std::optional<double> m_inf, n_inf, residual;
    int iters = 0;
    bool gas = false;
    RegionLabel region = RegionLabel::Outside;
    RowStatus status = RowStatus::Skipped;

    bool operator==(const SweepRow&) const = default;
};

// One row per grid point, row-major (mu outer, sigma inner), deterministic
// regardless of thread count.  Points with mu >= 0 or mu + sigma >= 0 are
// Skipped; cone points (|sigma| < -mu) certify with zero iterations; the rest
// run the limit iteration, downgrading per-point failures to status Failed.
// threads <= 0 selects the hardware concurrency.
std::vector<SweepRow> sweep_limit_bounds(const GridSpec& spec, double tol = 1e-9,
                                         int threads = 0, int max_n = 10000);

struct BoundaryPoint {
    double mu = 0.0;
    std::optional<double> sigma; // absent when no certified/uncertified transition exists

    bool operator==(const BoundaryPoint&) const = default;
};

// For each mu < 0: bisect sigma between the lower stability-boundary curve
// and mu itself for the transition of the certified-stability predicate, to
// sigma-tolerance `tol`.  Absent when the whole interval certifies or none
// of it does.
std::vector<BoundaryPoint> gas_boundary(const std::vector<double>& mu_values, int k,
                                        double a, double c, double tol = 1e-6,
                                        double gas_tol = 1e-9);

struct CompareRow {
    double sigma = 0.0;
    std::optional<double> m1, n1, m2, n2; // limit bounds for k = 1 and k = 2
    std::optional<double> sim_min, sim_max; // simulated tail amplitude
    RowStatus status = RowStatus::Failed;

    bool operator==(const CompareRow&) const = default;
};

// For each sigma at fixed mu: limit bounds for both orders plus the tail
// (min, max) of a simulation started from the constant history
// 0.99 * (a * sigma) / (c * mu).  Per-row failures leave fields empty.
std::vector<CompareRow> compare_bounds_vs_orbit(double mu,
                                                const std::vector<double>& sigma_values,
                                                double a, double c, double t_end,
                                                double step = 0.0, double window = 50.0);

// CSV serialization.  Sweep header is exactly
//   mu,sigma,m_inf,n_inf,iters,residual,gas,region,status
// with empty numeric fields on Skipped/Failed rows; values print with 17
// significant digits so parse(to_csv(rows)) == rows exactly.
std::string to_csv(const std::vector<SweepRow>& rows);
std::vector<SweepRow> parse_sweep_csv(const std::string& text);
std::string to_csv(const std::vector<CompareRow>& rows); // sigma,m1,n1,m2,n2,sim_min,sim_max
std::string to_csv(const std::vector<BoundaryPoint>& pts); // mu,sigma_boundary
void emit_csv(const std::vector<SweepRow>& rows, const std::string& path);
void emit_csv(const std::vector<CompareRow>& rows, const std::string& path);
void emit_csv(const std::vector<BoundaryPoint>& pts, const std::string& path);

// Static SVG heatmap of one field over the grid.  Fields: m_inf, n_inf,
// m_improve (1 - m_inf/m0), n_improve (1 - n_inf/n0), residual, iters, gas.
// Unavailable cells are gray; the color map is documented in the file header.
void emit_heatmap_svg(const GridSpec& spec, const std::vector<SweepRow>& rows,
                      const std::string& field, const std::string& path);

} // namespace raz
