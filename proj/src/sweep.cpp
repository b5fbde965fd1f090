#include "raz/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include "raz/sdde.hpp"
#include "raz/util.hpp"

namespace raz {

const GridSpec& validate(const GridSpec& g) {
    if (!(g.mu_lo < g.mu_hi))
        throw DomainError("grid: mu range needs lo < hi");
    if (!(g.sigma_lo < g.sigma_hi))
        throw DomainError("grid: sigma range needs lo < hi");
    if (g.mu_count < 2 || g.sigma_count < 2)
        throw DomainError("grid: axis counts must be >= 2");
    if (!(g.a > 0.0) || !(g.c > 0.0))
        throw DomainError("grid: requires a > 0 and c > 0");
    if (g.k != 1 && g.k != 2)
        throw DomainError("grid: order k must be 1 or 2");
    return g;
}

double grid_value(double lo, double hi, int count, int i) {
    if (count < 2)
        throw DomainError("grid axis needs count >= 2");
    if (i <= 0)
        return lo;
    if (i >= count - 1)
        return hi;
    return lo + (hi - lo) * (static_cast<double>(i) / static_cast<double>(count - 1));
}

const char* to_string(RowStatus s) {
    switch (s) {
    case RowStatus::Ok: return "Ok";
    case RowStatus::Skipped: return "Skipped";
    case RowStatus::Failed: return "Failed";
    }
    return "Failed";
}

namespace {

SweepRow compute_row(const GridSpec& g, int i, int j, double tol, int max_n) {
    SweepRow row;
    row.mu = grid_value(g.mu_lo, g.mu_hi, g.mu_count, i);
    row.sigma = grid_value(g.sigma_lo, g.sigma_hi, g.sigma_count, j);
    Params p;
    p.a = g.a;
    p.c = g.c;
    p.mu = row.mu;
    p.sigma = row.sigma;
    row.region = classify_region(p);

    if (!(row.mu < 0.0) || !(row.mu + row.sigma < 0.0)) {
        row.status = RowStatus::Skipped;
        return row;
    }
    if (std::abs(row.sigma) < -row.mu) {
        // Delay-independent certification: bounds collapse with no iteration.
        row.m_inf = 0.0;
        row.n_inf = 0.0;
        row.residual = 0.0;
        row.iters = 0;
        row.gas = true;
        row.status = RowStatus::Ok;
        return row;
    }
    try {
        const detail::LimitOutcome out = detail::run_limit_iteration(g.k, p, tol, max_n);
        row.m_inf = out.pair.m;
        row.n_inf = out.pair.n;
        row.residual = out.residual;
        row.iters = out.iters;
        if (out.converged) {
            row.status = RowStatus::Ok;
            row.gas = std::max(std::abs(out.pair.m), out.pair.n) <= tol;
        } else {
            row.status = RowStatus::Failed;
        }
    } catch (const Error&) {
        row.status = RowStatus::Failed; // numeric fields stay empty
    }
    return row;
}

} // namespace

std::vector<SweepRow> sweep_limit_bounds(const GridSpec& spec, double tol, int threads,
                                         int max_n) {
    validate(spec);
    if (max_n < 1)
        throw DomainError("sweep: max_n must be >= 1");
    const std::size_t total =
        static_cast<std::size_t>(spec.mu_count) * static_cast<std::size_t>(spec.sigma_count);
    std::vector<SweepRow> rows(total);

    unsigned nt = threads > 0 ? static_cast<unsigned>(threads)
                              : std::max(1u, std::thread::hardware_concurrency());
    nt = static_cast<unsigned>(std::min<std::size_t>(nt, total));

    const auto worker = [&](unsigned w) {
        for (std::size_t idx = w; idx < total; idx += nt) {
            const int i = static_cast<int>(idx / spec.sigma_count);
            const int j = static_cast<int>(idx % spec.sigma_count);
            rows[idx] = compute_row(spec, i, j, tol, max_n);
        }
    };
    if (nt <= 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nt - 1);
        for (unsigned w = 1; w < nt; ++w)
            pool.emplace_back(worker, w);
        worker(0);
        for (auto& th : pool)
            th.join();
    }
    return rows;
}

std::vector<BoundaryPoint> gas_boundary(const std::vector<double>& mu_values, int k,
                                        double a, double c, double tol, double gas_tol) {
    if (k != 1 && k != 2)
        throw DomainError("gas_boundary: order k must be 1 or 2");
    if (!(a > 0.0) || !(c > 0.0))
        throw DomainError("gas_boundary: requires a > 0 and c > 0");
    if (!(tol > 0.0))
        throw DomainError("gas_boundary: tol must be positive");

    const auto certified = [&](double mu, double sigma) {
        Params p;
        p.a = a;
        p.c = c;
        p.mu = mu;
        p.sigma = sigma;
        try {
            return is_gas(p, k, gas_tol) != GasVerdict::NotCertified;
        } catch (const Error&) {
            return false; // slow convergence counts as not certified
        }
    };

    std::vector<BoundaryPoint> out;
    out.reserve(mu_values.size());
    for (const double mu : mu_values) {
        if (!(mu < 0.0))
            throw DomainError("gas_boundary: every mu must be negative");
        BoundaryPoint pt;
        pt.mu = mu;
        double lo = wedge_lower_sigma(mu, a);
        lo += 1e-9 * std::max(1.0, std::abs(lo)); // stay inside the open wedge
        double hi = mu;
        if (lo >= hi || !certified(mu, hi) || certified(mu, lo)) {
            out.push_back(pt); // no transition inside the wedge at this mu
            continue;
        }
        while (hi - lo > tol) {
            const double mid = 0.5 * (lo + hi);
            if (mid == lo || mid == hi)
                break;
            if (certified(mu, mid))
                hi = mid;
            else
                lo = mid;
        }
        pt.sigma = 0.5 * (lo + hi);
        out.push_back(pt);
    }
    return out;
}

std::vector<CompareRow> compare_bounds_vs_orbit(double mu,
                                                const std::vector<double>& sigma_values,
                                                double a, double c, double t_end,
                                                double step, double window) {
    if (!(a > 0.0) || !(c > 0.0))
        throw DomainError("compare: requires a > 0 and c > 0");
    if (!(t_end > 0.0))
        throw DomainError("compare: t_end must be positive");
    if (!(window > 0.0))
        throw DomainError("compare: window must be positive");

    std::vector<CompareRow> out;
    out.reserve(sigma_values.size());
    for (const double sigma : sigma_values) {
        CompareRow row;
        row.sigma = sigma;
        Params p;
        p.a = a;
        p.c = c;
        p.mu = mu;
        p.sigma = sigma;
        try {
            validate(p);
        } catch (const Error&) {
            row.status = RowStatus::Failed;
            out.push_back(row);
            continue;
        }

        if (std::abs(sigma) < -mu) {
            row.m1 = row.m2 = 0.0;
            row.n1 = row.n2 = 0.0;
        } else {
            try {
                const LimitResult l1 = limit_bounds(1, p);
                row.m1 = l1.pair.m;
                row.n1 = l1.pair.n;
            } catch (const Error&) {
            }
            try {
                const LimitResult l2 = limit_bounds(2, p);
                row.m2 = l2.pair.m;
                row.n2 = l2.pair.n;
            } catch (const Error&) {
            }
        }
        try {
            const double phi0 = 0.99 * a * std::abs(sigma) / (c * std::abs(mu));
            const Trajectory traj =
                integrate(p, HistoryFunction::constant(phi0), t_end, step);
            const auto [mn, mx] = tail_amplitude(traj, std::min(window, 0.5 * t_end));
            row.sim_min = mn;
            row.sim_max = mx;
        } catch (const Error&) {
        }
        const bool ok =
            row.m1 && row.n1 && row.m2 && row.n2 && row.sim_min && row.sim_max;
        row.status = ok ? RowStatus::Ok : RowStatus::Failed;
        out.push_back(row);
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string opt17(const std::optional<double>& v) { return v ? fmt17(*v) : std::string(); }

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (const char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError(std::string("CSV: bad ") + what + " value '" + s + "'");
    }
}

std::optional<double> parse_opt(const std::string& s, const char* what) {
    if (s.empty())
        return std::nullopt;
    return parse_double(s, what);
}

RegionLabel region_from_string(const std::string& s) {
    for (const RegionLabel r :
         {RegionLabel::Cone, RegionLabel::Wedge, RegionLabel::Cusp, RegionLabel::BoundaryLine,
          RegionLabel::BoundaryCurve, RegionLabel::Outside})
        if (s == to_string(r))
            return r;
    throw IoError("CSV: unknown region label '" + s + "'");
}

RowStatus status_from_string(const std::string& s) {
    for (const RowStatus st : {RowStatus::Ok, RowStatus::Skipped, RowStatus::Failed})
        if (s == to_string(st))
            return st;
    throw IoError("CSV: unknown row status '" + s + "'");
}

constexpr const char* kSweepHeader = "mu,sigma,m_inf,n_inf,iters,residual,gas,region,status";

} // namespace

std::string to_csv(const std::vector<SweepRow>& rows) {
    std::string out = kSweepHeader;
    out += '\n';
    out.reserve(out.size() + rows.size() * 96);
    for (const SweepRow& r : rows) {
        out += fmt17(r.mu);
        out += ',';
        out += fmt17(r.sigma);
        out += ',';
        out += opt17(r.m_inf);
        out += ',';
        out += opt17(r.n_inf);
        out += ',';
        out += std::to_string(r.iters);
        out += ',';
        out += opt17(r.residual);
        out += ',';
        out += r.gas ? "true" : "false";
        out += ',';
        out += to_string(r.region);
        out += ',';
        out += to_string(r.status);
        out += '\n';
    }
    return out;
}

std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kSweepHeader)
        throw IoError("CSV: missing or unexpected sweep header");
    std::vector<SweepRow> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const std::vector<std::string> f = split_fields(line);
        if (f.size() != 9)
            throw IoError("CSV: expected 9 fields, got " + std::to_string(f.size()));
        SweepRow r;
        r.mu = parse_double(f[0], "mu");
        r.sigma = parse_double(f[1], "sigma");
        r.m_inf = parse_opt(f[2], "m_inf");
        r.n_inf = parse_opt(f[3], "n_inf");
        r.iters = static_cast<int>(parse_double(f[4], "iters"));
        r.residual = parse_opt(f[5], "residual");
        if (f[6] == "true")
            r.gas = true;
        else if (f[6] == "false")
            r.gas = false;
        else
            throw IoError("CSV: bad gas flag '" + f[6] + "'");
        r.region = region_from_string(f[7]);
        r.status = status_from_string(f[8]);
        rows.push_back(r);
    }
    return rows;
}

std::string to_csv(const std::vector<CompareRow>& rows) {
    std::string out = "sigma,m1,n1,m2,n2,sim_min,sim_max\n";
    for (const CompareRow& r : rows) {
        out += fmt17(r.sigma);
        out += ',';
        out += opt17(r.m1);
        out += ',';
        out += opt17(r.n1);
        out += ',';
        out += opt17(r.m2);
        out += ',';
        out += opt17(r.n2);
        out += ',';
        out += opt17(r.sim_min);
        out += ',';
        out += opt17(r.sim_max);
        out += '\n';
    }
    return out;
}

std::string to_csv(const std::vector<BoundaryPoint>& pts) {
    std::string out = "mu,sigma_boundary\n";
    for (const BoundaryPoint& p : pts) {
        out += fmt17(p.mu);
        out += ',';
        out += opt17(p.sigma);
        out += '\n';
    }
    return out;
}

namespace {

void emit_nonempty(const std::string& csv, std::size_t rows, const std::string& path) {
    if (rows == 0)
        throw DomainError("emit_csv: refusing to write an empty table to " + path);
    write_file(path, csv);
}

} // namespace

void emit_csv(const std::vector<SweepRow>& rows, const std::string& path) {
    emit_nonempty(to_csv(rows), rows.size(), path);
}
void emit_csv(const std::vector<CompareRow>& rows, const std::string& path) {
    emit_nonempty(to_csv(rows), rows.size(), path);
}
void emit_csv(const std::vector<BoundaryPoint>& pts, const std::string& path) {
    emit_nonempty(to_csv(pts), pts.size(), path);
}

// ---------------------------------------------------------------------------
// SVG heatmap

namespace {

std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Rgb {
    double r, g, b;
};

// Perceptually ordered dark-violet -> yellow ramp (documented in the output).
constexpr Rgb kStops[5] = {{0x44, 0x01, 0x54},
                           {0x3b, 0x52, 0x8b},
                           {0x21, 0x91, 0x8c},
                           {0x5e, 0xc9, 0x62},
                           {0xfd, 0xe7, 0x25}};

std::string color_at(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const double pos = t * 4.0;
    const int i = std::min(3, static_cast<int>(pos));
    const double f = pos - i;
    const auto mix = [&](double a, double b) {
        return static_cast<int>(std::lround(a + (b - a) * f));
    };
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", mix(kStops[i].r, kStops[i + 1].r),
                  mix(kStops[i].g, kStops[i + 1].g), mix(kStops[i].b, kStops[i + 1].b));
    return buf;
}

} // namespace

void emit_heatmap_svg(const GridSpec& spec, const std::vector<SweepRow>& rows,
                      const std::string& field, const std::string& path) {
    validate(spec);
    const std::size_t total =
        static_cast<std::size_t>(spec.mu_count) * static_cast<std::size_t>(spec.sigma_count);
    if (rows.size() != total)
        throw DomainError("heatmap: row count does not match the grid");

    const double m0 = -spec.a / spec.c;
    const auto extract = [&](const SweepRow& r) -> std::optional<double> {
        if (field == "m_inf")
            return r.m_inf;
        if (field == "n_inf")
            return r.n_inf;
        if (field == "residual")
            return r.residual;
        if (field == "iters")
            return r.status == RowStatus::Skipped
                       ? std::nullopt
                       : std::optional<double>(static_cast<double>(r.iters));
        if (field == "gas") {
            if (r.status == RowStatus::Skipped)
                return std::nullopt;
            return r.gas ? 1.0 : 0.0;
        }
        if (field == "m_improve") {
            if (!r.m_inf)
                return std::nullopt;
            return 1.0 - *r.m_inf / m0;
        }
        if (field == "n_improve") {
            if (!r.n_inf)
                return std::nullopt;
            const double n0 = spec.a * r.sigma / (spec.c * r.mu);
            if (!(n0 > 1e-300))
                return 1.0; // ceiling already zero: bounds fully collapsed
            return 1.0 - *r.n_inf / n0;
        }
        throw DomainError("heatmap: unknown field '" + field + "'");
    };

    double vmin = std::numeric_limits<double>::infinity();
    double vmax = -vmin;
    for (const SweepRow& r : rows)
        if (const auto v = extract(r)) {
            vmin = std::min(vmin, *v);
            vmax = std::max(vmax, *v);
        }
    const bool any = vmin <= vmax;
    const double span = vmax - vmin;

    const double plot_w = 720.0, plot_h = 720.0;
    const double left = 90.0, top = 60.0, bottom = 70.0, cbar_gap = 30.0, cbar_w = 24.0,
                 right = cbar_gap + cbar_w + 90.0;
    const double width = left + plot_w + right, height = top + plot_h + bottom;
    const double cw = plot_w / spec.mu_count, ch = plot_h / spec.sigma_count;

    std::string svg;
    svg.reserve(rows.size() * 64 + 4096);
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<!-- heatmap of field '" + field + "'; linear color map #440154 -> #3b528b -> "
           "#21918c -> #5ec962 -> #fde725 over [" +
           (any ? fmt6(vmin) : std::string("n/a")) + ", " +
           (any ? fmt6(vmax) : std::string("n/a")) +
           "]; gray cells have no value (skipped or failed) -->\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt6(width) +
           "\" height=\"" + fmt6(height) + "\" viewBox=\"0 0 " + fmt6(width) + " " +
           fmt6(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + fmt6(left) + "\" y=\"34\" font-family=\"sans-serif\" "
           "font-size=\"22\">" + field + "</text>\n";

    for (int i = 0; i < spec.mu_count; ++i) {
        for (int j = 0; j < spec.sigma_count; ++j) {
            const SweepRow& r = rows[static_cast<std::size_t>(i) * spec.sigma_count + j];
            const auto v = extract(r);
            std::string color = "#808080";
            if (v && any)
                color = color_at(span > 0.0 ? (*v - vmin) / span : 0.5);
            const double x = left + i * cw;
            const double y = top + (spec.sigma_count - 1 - j) * ch;
            svg += "<rect x=\"" + fmt6(x) + "\" y=\"" + fmt6(y) + "\" width=\"" +
                   fmt6(cw + 0.5) + "\" height=\"" + fmt6(ch + 0.5) + "\" fill=\"" + color +
                   "\"/>\n";
        }
    }

    // Axis frame and labels.
    svg += "<rect x=\"" + fmt6(left) + "\" y=\"" + fmt6(top) + "\" width=\"" + fmt6(plot_w) +
           "\" height=\"" + fmt6(plot_h) + "\" fill=\"none\" stroke=\"black\"/>\n";
    const auto text = [&](double x, double y, const std::string& s, const char* anchor) {
        svg += "<text x=\"" + fmt6(x) + "\" y=\"" + fmt6(y) +
               "\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"" + anchor +
               "\">" + s + "</text>\n";
    };
    text(left + plot_w / 2, top + plot_h + 48, "mu", "middle");
    text(left, top + plot_h + 24, fmt6(spec.mu_lo), "middle");
    text(left + plot_w, top + plot_h + 24, fmt6(spec.mu_hi), "middle");
    svg += "<text x=\"28\" y=\"" + fmt6(top + plot_h / 2) +
           "\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\" "
           "transform=\"rotate(-90 28 " + fmt6(top + plot_h / 2) + ")\">sigma</text>\n";
    text(left - 10, top + plot_h, fmt6(spec.sigma_lo), "end");
    text(left - 10, top + 14, fmt6(spec.sigma_hi), "end");

    // Color bar.
    const double cx = left + plot_w + cbar_gap;
    const int strips = 64;
    for (int s = 0; s < strips; ++s) {
        const double frac = (s + 0.5) / strips;
        const double y = top + plot_h * (1.0 - static_cast<double>(s + 1) / strips);
        svg += "<rect x=\"" + fmt6(cx) + "\" y=\"" + fmt6(y) + "\" width=\"" + fmt6(cbar_w) +
               "\" height=\"" + fmt6(plot_h / strips + 0.5) + "\" fill=\"" + color_at(frac) +
               "\"/>\n";
    }
    svg += "<rect x=\"" + fmt6(cx) + "\" y=\"" + fmt6(top) + "\" width=\"" + fmt6(cbar_w) +
           "\" height=\"" + fmt6(plot_h) + "\" fill=\"none\" stroke=\"black\"/>\n";
    text(cx + cbar_w + 8, top + plot_h, any ? fmt6(vmin) : "n/a", "start");
    text(cx + cbar_w + 8, top + 14, any ? fmt6(vmax) : "n/a", "start");

    svg += "</svg>\n";
    write_file(path, svg);
}

} // namespace raz
