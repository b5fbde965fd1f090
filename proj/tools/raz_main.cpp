// Command-line surface for the delay-equation bound machinery: single-point
// queries, bound iterations, simulations, parameter-plane sweeps, and the
// self-check suites.  Exit codes: 0 success, 1 verification failure,
// 2 usage/validation/compute error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "raz/bounds.hpp"
#include "raz/errors.hpp"
#include "raz/model.hpp"
#include "raz/sdde.hpp"
#include "raz/sweep.hpp"
#include "raz/util.hpp"

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config resolution: command-line flags override JSON config values, which
// override built-in defaults.  JSON keys equal the long flag names without
// the leading dashes.

json load_config(const std::optional<std::string>& path) {
    if (!path)
        return json::object();
    const json j = json::parse(raz::read_file(*path));
    if (!j.is_object())
        throw raz::DomainError("config file must hold a JSON object: " + *path);
    return j;
}

template <typename T>
T resolve(const std::optional<T>& flag, const json& cfg, const std::string& key,
          std::optional<T> fallback = std::nullopt) {
    if (flag)
        return *flag;
    if (cfg.contains(key))
        return cfg.at(key).get<T>();
    if (fallback)
        return *fallback;
    throw raz::DomainError("missing required parameter --" + key +
                           " (provide the flag or a config entry)");
}

struct ParamFlags {
    std::optional<double> a, c, mu, sigma;
    std::optional<std::string> config;

    void attach(CLI::App* sub) {
        sub->add_option("--a", a, "delay offset a > 0 (default 1)");
        sub->add_option("--c", c, "delay slope c > 0 (default 1)");
        sub->add_option("--mu", mu, "instantaneous coefficient");
        sub->add_option("--sigma", sigma, "delayed coefficient");
        sub->add_option("--config", config, "JSON file supplying flag defaults");
    }

    raz::Params make(const json& cfg) const {
        raz::Params p;
        p.a = resolve(a, cfg, "a", {1.0});
        p.c = resolve(c, cfg, "c", {1.0});
        p.mu = resolve(mu, cfg, "mu");
        p.sigma = resolve(sigma, cfg, "sigma");
        return p;
    }
};

void kv(const std::string& key, const std::string& value) {
    std::cout << key << '=' << value << '\n';
}
void kv(const std::string& key, double value) { kv(key, raz::fmt17(value)); }
void kv(const std::string& key, int value) { kv(key, std::to_string(value)); }

int threads_from_env() {
    if (const char* env = std::getenv("RAZ_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0)
            return n;
    }
    return 0; // auto
}

// ---------------------------------------------------------------------------
// constants / region / q-eval

struct ConstantsCmd {
    ParamFlags pf;
    std::optional<double> n_override;

    void attach(CLI::App* sub) {
        pf.attach(sub);
        sub->add_option("--n-override", n_override,
                        "solution ceiling for sigma > 0 (no closed-form ceiling there)");
    }

    int run() const {
        const json cfg = load_config(pf.config);
        const raz::Params p = pf.make(cfg);
        std::optional<double> n_over = n_override;
        if (!n_over && cfg.contains("n-override"))
            n_over = cfg.at("n-override").get<double>();
        const raz::DerivedConstants d = raz::derived_constants(p, n_over);
        kv("m0", d.m0);
        kv("n0", d.n0);
        kv("tau0", d.tau0);
        kv("tau", d.tau);
        kv("region", raz::to_string(raz::classify_region(p)));
        return 0;
    }
};

struct RegionCmd {
    ParamFlags pf;

    int run() const {
        const json cfg = load_config(pf.config);
        const raz::Params p = pf.make(cfg);
        kv("region", raz::to_string(raz::classify_region(p)));
        if (p.mu <= 1.0 / p.a)
            kv("boundary_line_sigma", -p.mu);
        if (p.mu < 1.0 / p.a)
            kv("boundary_curve_sigma", raz::wedge_lower_sigma(p.mu, p.a));
        return 0;
    }
};

struct QEvalCmd {
    ParamFlags pf;
    std::optional<int> k, panels;
    std::optional<double> v, x, y;

    void attach(CLI::App* sub) {
        pf.attach(sub);
        sub->add_option("--k", k, "profile order 1 or 2 (default 2)");
        sub->add_option("--v", v, "trial extremum value");
        sub->add_option("--x", x, "far bound");
        sub->add_option("--y", y, "near bound");
        sub->add_option("--panels", panels, "quadrature panels per piece (default 8)");
    }

    int run() const {
        const json cfg = load_config(pf.config);
        const raz::Params p = pf.make(cfg);
        const int kk = resolve(k, cfg, "k", {2});
        const double vv = resolve(v, cfg, "v");
        const double xx = resolve(x, cfg, "x");
        const double yy = resolve(y, cfg, "y");
        const int pan = resolve(panels, cfg, "panels", {8});
        const double qc = raz::q_closed(kk, vv, xx, yy, p);
        const double qq = raz::q_quadrature(kk, vv, xx, yy, p, pan);
        kv("q_closed", qc);
        kv("q_quadrature", qq);
        kv("dq_dv", raz::dq_dv(kk, vv, xx, yy, p));
        kv("abs_diff", std::abs(qc - qq));
        return 0;
    }
};

// ---------------------------------------------------------------------------
// bounds

struct BoundsCmd {
    ParamFlags pf;
    std::optional<int> k, max_iter;
    std::optional<double> tol, gas_tol;
    std::optional<std::string> out;

    void attach(CLI::App* sub) {
        pf.attach(sub);
        sub->add_option("--k", k, "profile order 1 or 2 (default 2)");
        sub->add_option("--tol", tol, "fixed-point tolerance (default 1e-9)");
        sub->add_option("--gas-tol", gas_tol, "certification tolerance (default 1e-9)");
        sub->add_option("--max-iter", max_iter, "iteration cap (default 10000)");
        sub->add_option("--out", out, "write the iteration trace CSV here");
    }

    int run() const {
        const json cfg = load_config(pf.config);
        const raz::Params p = pf.make(cfg);
        raz::validate(p);
        const int kk = resolve(k, cfg, "k", {2});
        const double fp_tol = resolve(tol, cfg, "tol", {1e-9});
        const double g_tol = resolve(gas_tol, cfg, "gas-tol", {1e-9});
        const int cap = resolve(max_iter, cfg, "max-iter", {10000});
        std::optional<std::string> out_path = out;
        if (!out_path && cfg.contains("out"))
            out_path = cfg.at("out").get<std::string>();

        kv("k", kk);
        if (std::abs(p.sigma) < -p.mu) {
            // Delay-independent certification: no iteration needed.
            kv("iters", 0);
            kv("converged", "true");
            kv("m_inf", 0.0);
            kv("n_inf", 0.0);
            kv("residual", 0.0);
            kv("gas", raz::to_string(raz::GasVerdict::GasCone));
            if (out_path)
                raz::write_file(*out_path, "iter,m,n,settle_time\n0,0,0,0\n");
            return 0;
        }

        const raz::DerivedConstants d = raz::derived_constants(p);
        kv("m0", d.m0);
        kv("n0", d.n0);
        kv("tau0", d.tau0);
        const raz::IterationTrace trace = raz::iterate_bounds(kk, p, cap, fp_tol);
        if (out_path) {
            std::string csv = "iter,m,n,settle_time\n";
            for (std::size_t i = 0; i < trace.pairs.size(); ++i) {
                csv += std::to_string(i);
                csv += ',';
                csv += raz::fmt17(trace.pairs[i].m);
                csv += ',';
                csv += raz::fmt17(trace.pairs[i].n);
                csv += ',';
                csv += raz::fmt17(trace.settle_times[i]);
                csv += '\n';
            }
            raz::write_file(*out_path, csv);
            kv("out", *out_path);
        }
        kv("iters", static_cast<int>(trace.pairs.size()) - 1);
        kv("converged", trace.converged ? "true" : "false");
        const raz::BoundPair last = trace.pairs.back();
        kv("m_inf", last.m);
        kv("n_inf", last.n);
        kv("residual", trace.residual);
        if (!trace.converged)
            throw raz::ConvergenceError("bound iteration did not converge within " +
                                        std::to_string(cap) + " iterations");
        const bool certified = std::max(std::abs(last.m), last.n) <= g_tol;
        kv("gas", raz::to_string(certified ? raz::GasVerdict::GasFixedPoint
                                           : raz::GasVerdict::NotCertified));
        return 0;
    }
};

// ---------------------------------------------------------------------------
// simulate

struct SimulateCmd {
    ParamFlags pf;
    std::optional<double> phi, t_end, step, window, amp_floor;
    std::optional<std::string> phi_table, out;
    std::optional<int> out_stride;

    void attach(CLI::App* sub) {
        pf.attach(sub);
        sub->add_option("--phi", phi, "constant history value (default 0.99*a*|sigma|/(c*|mu|))");
        sub->add_option("--phi-table", phi_table,
                        "CSV file of history knots `t,u` ending at t = 0");
        sub->add_option("--t-end", t_end, "integration horizon (default 200)");
        sub->add_option("--step", step, "step size (default min(1e-3, a/100))");
        sub->add_option("--window", window, "classification window (default 50)");
        sub->add_option("--amp-floor", amp_floor,
                        "amplitude below which extrema count as settled (default 1e-8)");
        sub->add_option("--out", out, "write the trajectory CSV here");
        sub->add_option("--out-stride", out_stride, "write every n-th node (default 1)");
    }

    int run() const {
        const json cfg = load_config(pf.config);
        const raz::Params p = pf.make(cfg);
        raz::validate(p);
        const double te = resolve(t_end, cfg, "t-end", {200.0});
        const double h = resolve(step, cfg, "step", {0.0});
        const double win = resolve(window, cfg, "window", {50.0});
        const double floor = resolve(amp_floor, cfg, "amp-floor", {1e-8});
        std::optional<std::string> table_path = phi_table;
        if (!table_path && cfg.contains("phi-table"))
            table_path = cfg.at("phi-table").get<std::string>();

        raz::HistoryFunction hist = raz::HistoryFunction::constant(0.0);
        if (table_path) {
            std::vector<double> ts, us;
            std::istringstream in(raz::read_file(*table_path));
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty() || line[0] == '#' ||
                    std::isalpha(static_cast<unsigned char>(line[0])))
                    continue;
                const std::size_t comma = line.find(',');
                if (comma == std::string::npos)
                    throw raz::IoError("history table line lacks a comma: " + line);
                ts.push_back(std::stod(line.substr(0, comma)));
                us.push_back(std::stod(line.substr(comma + 1)));
            }
            hist = raz::HistoryFunction::table(std::move(ts), std::move(us));
        } else {
            const double fallback = 0.99 * p.a * std::abs(p.sigma) / (p.c * std::abs(p.mu));
            hist = raz::HistoryFunction::constant(resolve(phi, cfg, "phi", {fallback}));
        }

        const raz::Trajectory traj = raz::integrate(p, hist, te, h);
        std::optional<std::string> out_path = out;
        if (!out_path && cfg.contains("out"))
            out_path = cfg.at("out").get<std::string>();
        if (out_path) {
            raz::write_trajectory_csv(traj, *out_path, resolve(out_stride, cfg, "out-stride", {1}));
            kv("out", *out_path);
        }
        kv("t_end", traj.t_end());
        kv("step", traj.step);
        kv("steps", static_cast<int>(traj.ts.size()) - 1);
        kv("behaviour", raz::to_string(raz::classify_behaviour(traj, win, floor)));
        kv("extrema", static_cast<int>(traj.extrema.size()));
        const auto [mn, mx] = raz::tail_amplitude(traj, win);
        kv("tail_min", mn);
        kv("tail_max", mx);
        kv("u_end", traj.us.back());
        return 0;
    }
};

// ---------------------------------------------------------------------------
// sweep / gas-boundary / compare

struct SweepCmd {
    std::optional<double> mu_lo, mu_hi, sigma_lo, sigma_hi, a, c, tol;
    std::optional<int> mu_count, sigma_count, k, threads, max_iter;
    std::optional<std::string> out, svg, field, config;

    void attach(CLI::App* sub) {
        sub->add_option("--mu-lo", mu_lo, "mu axis start (default -3)");
        sub->add_option("--mu-hi", mu_hi, "mu axis end (default -0.05)");
        sub->add_option("--mu-count", mu_count, "mu axis points (default 200)");
        sub->add_option("--sigma-lo", sigma_lo, "sigma axis start (default -3.2)");
        sub->add_option("--sigma-hi", sigma_hi, "sigma axis end (default -0.05)");
        sub->add_option("--sigma-count", sigma_count, "sigma axis points (default 200)");
        sub->add_option("--a", a, "delay offset (default 1)");
        sub->add_option("--c", c, "delay slope (default 1)");
        sub->add_option("--k", k, "profile order (default 2)");
        sub->add_option("--tol", tol, "fixed-point tolerance (default 1e-9)");
        sub->add_option("--max-iter", max_iter, "per-point iteration cap (default 10000)");
        sub->add_option("--threads", threads, "worker threads (default RAZ_THREADS or auto)");
        sub->add_option("--out", out, "output CSV path (required)");
        sub->add_option("--svg", svg, "also render a heatmap SVG here");
        sub->add_option("--field", field, "heatmap field (default n_improve)");
        sub->add_option("--config", config, "JSON file supplying flag defaults");
    }

    int run() const {
        const json cfg = load_config(config);
        raz::GridSpec spec;
        spec.mu_lo = resolve(mu_lo, cfg, "mu-lo", {-3.0});
        spec.mu_hi = resolve(mu_hi, cfg, "mu-hi", {-0.05});
        spec.mu_count = resolve(mu_count, cfg, "mu-count", {200});
        spec.sigma_lo = resolve(sigma_lo, cfg, "sigma-lo", {-3.2});
        spec.sigma_hi = resolve(sigma_hi, cfg, "sigma-hi", {-0.05});
        spec.sigma_count = resolve(sigma_count, cfg, "sigma-count", {200});
        spec.a = resolve(a, cfg, "a", {1.0});
        spec.c = resolve(c, cfg, "c", {1.0});
        spec.k = resolve(k, cfg, "k", {2});
        const double fp_tol = resolve(tol, cfg, "tol", {1e-9});
        const int cap = resolve(max_iter, cfg, "max-iter", {10000});
        const int nt = resolve(threads, cfg, "threads", {threads_from_env()});
        const std::string out_path = resolve(out, cfg, "out");

        const std::vector<raz::SweepRow> rows =
            raz::sweep_limit_bounds(spec, fp_tol, nt, cap);
        raz::emit_csv(rows, out_path);
        int ok = 0, skipped = 0, failed = 0, gas = 0;
        for (const auto& r : rows) {
            ok += r.status == raz::RowStatus::Ok;
            skipped += r.status == raz::RowStatus::Skipped;
            failed += r.status == raz::RowStatus::Failed;
            gas += r.gas;
        }
        kv("rows", static_cast<int>(rows.size()));
        kv("ok", ok);
        kv("skipped", skipped);
        kv("failed", failed);
        kv("gas_certified", gas);
        kv("out", out_path);
        std::optional<std::string> svg_path = svg;
        if (!svg_path && cfg.contains("svg"))
            svg_path = cfg.at("svg").get<std::string>();
        if (svg_path) {
            raz::emit_heatmap_svg(spec, rows, resolve(field, cfg, "field", {std::string("n_improve")}),
                                  *svg_path);
            kv("svg", *svg_path);
        }
        return 0;
    }
};

struct GasBoundaryCmd {
    std::optional<double> mu_lo, mu_hi, a, c, tol, gas_tol;
    std::optional<int> mu_count, k;
    std::optional<std::string> out, config;

    void attach(CLI::App* sub) {
        sub->add_option("--mu-lo", mu_lo, "mu axis start");
        sub->add_option("--mu-hi", mu_hi, "mu axis end (must stay negative)");
        sub->add_option("--mu-count", mu_count, "mu sample count (default 20)");
        sub->add_option("--a", a, "delay offset (default 1)");
        sub->add_option("--c", c, "delay slope (default 1)");
        sub->add_option("--k", k, "profile order (default 2)");
        sub->add_option("--tol", tol, "sigma bisection tolerance (default 1e-6)");
        sub->add_option("--gas-tol", gas_tol, "certification tolerance (default 1e-9)");
        sub->add_option("--out", out, "output CSV path (stdout when omitted)");
        sub->add_option("--config", config, "JSON file supplying flag defaults");
    }

    int run() const {
        const json cfg = load_config(config);
        const double lo = resolve(mu_lo, cfg, "mu-lo");
        const double hi = resolve(mu_hi, cfg, "mu-hi");
        const int count = resolve(mu_count, cfg, "mu-count", {20});
        if (count < 2 || !(lo < hi))
            throw raz::DomainError("gas-boundary needs mu-lo < mu-hi and mu-count >= 2");
        std::vector<double> mus(count);
        for (int i = 0; i < count; ++i)
            mus[i] = raz::grid_value(lo, hi, count, i);
        const std::vector<raz::BoundaryPoint> pts = raz::gas_boundary(
            mus, resolve(k, cfg, "k", {2}), resolve(a, cfg, "a", {1.0}),
            resolve(c, cfg, "c", {1.0}), resolve(tol, cfg, "tol", {1e-6}),
            resolve(gas_tol, cfg, "gas-tol", {1e-9}));
        std::optional<std::string> out_path = out;
        if (!out_path && cfg.contains("out"))
            out_path = cfg.at("out").get<std::string>();
        if (out_path) {
            raz::emit_csv(pts, *out_path);
            kv("points", static_cast<int>(pts.size()));
            kv("out", *out_path);
        } else {
            std::cout << raz::to_csv(pts);
        }
        return 0;
    }
};

struct CompareCmd {
    std::optional<double> mu, sigma_lo, sigma_hi, a, c, t_end, step, window;
    std::optional<int> sigma_count;
    std::optional<std::string> out, config;

    void attach(CLI::App* sub) {
        sub->add_option("--mu", mu, "fixed mu for the sigma family");
        sub->add_option("--sigma-lo", sigma_lo, "sigma axis start");
        sub->add_option("--sigma-hi", sigma_hi, "sigma axis end");
        sub->add_option("--sigma-count", sigma_count, "sigma sample count (default 20)");
        sub->add_option("--a", a, "delay offset (default 1)");
        sub->add_option("--c", c, "delay slope (default 1)");
        sub->add_option("--t-end", t_end, "simulation horizon (default 200)");
        sub->add_option("--step", step, "simulation step (default auto)");
        sub->add_option("--window", window, "tail window (default 50)");
        sub->add_option("--out", out, "output CSV path (stdout when omitted)");
        sub->add_option("--config", config, "JSON file supplying flag defaults");
    }

    int run() const {
        const json cfg = load_config(config);
        const double m = resolve(mu, cfg, "mu");
        const double lo = resolve(sigma_lo, cfg, "sigma-lo");
        const double hi = resolve(sigma_hi, cfg, "sigma-hi");
        const int count = resolve(sigma_count, cfg, "sigma-count", {20});
        if (count < 2 || !(lo < hi))
            throw raz::DomainError("compare needs sigma-lo < sigma-hi and sigma-count >= 2");
        std::vector<double> sigmas(count);
        for (int i = 0; i < count; ++i)
            sigmas[i] = raz::grid_value(lo, hi, count, i);
        const std::vector<raz::CompareRow> rows = raz::compare_bounds_vs_orbit(
            m, sigmas, resolve(a, cfg, "a", {1.0}), resolve(c, cfg, "c", {1.0}),
            resolve(t_end, cfg, "t-end", {200.0}), resolve(step, cfg, "step", {0.0}),
            resolve(window, cfg, "window", {50.0}));
        std::optional<std::string> out_path = out;
        if (!out_path && cfg.contains("out"))
            out_path = cfg.at("out").get<std::string>();
        if (out_path) {
            raz::emit_csv(rows, *out_path);
            kv("rows", static_cast<int>(rows.size()));
            kv("out", *out_path);
        } else {
            std::cout << raz::to_csv(rows);
        }
        return 0;
    }
};

// ---------------------------------------------------------------------------
// verify

struct SuiteTally {
    int failures = 0;

    void report(const std::string& name, bool ok, const std::string& detail) {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name;
        if (!detail.empty())
            std::cout << " (" << detail << ')';
        std::cout << '\n';
        if (!ok)
            ++failures;
    }
};

struct DomainSample {
    raz::Params p;
    double v, x, y;
    bool min_case;
};

// Random tuple in the evaluation domain with a = c = 1 and sigma <= mu < 0.
DomainSample sample_domain(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    DomainSample s;
    s.p.a = 1.0;
    s.p.c = 1.0;
    s.p.mu = -(0.05 + 2.95 * unif(rng));
    s.p.sigma = s.p.mu - 2.5 * unif(rng);
    const raz::DerivedConstants d = raz::derived_constants(s.p);
    s.min_case = unif(rng) < 0.5;
    if (s.min_case) {
        s.x = d.n0 * unif(rng);
        s.y = d.m0 * unif(rng);
        s.v = d.m0 * unif(rng);
    } else {
        s.x = d.m0 * unif(rng);
        s.y = d.n0 * unif(rng);
        s.v = d.n0 * unif(rng);
    }
    return s;
}

void suite_oracle_q(SuiteTally& tally, std::uint64_t seed, int samples, double perturb) {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    int count = 0;
    for (const int k : {1, 2}) {
        for (int i = 0; i < samples; ++i) {
            const DomainSample s = sample_domain(rng);
            const double qc = raz::q_closed(k, s.v, s.x, s.y, s.p) + perturb;
            const double qq = raz::q_quadrature(k, s.v, s.x, s.y, s.p);
            worst = std::max(worst, std::abs(qc - qq) / (1.0 + std::abs(qc)));
            ++count;
        }
    }
    tally.report("oracle-q", worst <= 1e-8,
                 std::to_string(count) + " tuples, worst rel diff " + raz::fmt17(worst));
}

void suite_derivative(SuiteTally& tally, std::uint64_t seed, int samples) {
    std::mt19937_64 rng(seed + 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double h = 1e-6;
    double worst = 0.0;
    int checked = 0;
    while (checked < samples) {
        DomainSample s = sample_domain(rng);
        const raz::DerivedConstants d = raz::derived_constants(s.p);
        // Interior trial value, keeping v +/- h inside the domain.
        const double margin = 1e-3;
        const double lo = s.min_case ? d.m0 + margin : margin;
        const double hi = s.min_case ? -margin : d.n0 - margin;
        if (!(lo < hi))
            continue;
        s.v = lo + (hi - lo) * unif(rng);
        // Exclude kinks of the k = 2 piecewise form: the ramp-breakpoint exit
        // at v = -sigma*x/mu and the all-ramp switch locus.
        const double kink1 = -(s.p.sigma / s.p.mu) * s.x;
        if (std::abs(s.v - kink1) < 1e-4)
            continue;
        if (const auto sw = raz::detail::q2_switch_v(s.x, s.y, s.p))
            if (std::abs(s.v - *sw) < 1e-4)
                continue;
        for (const int k : {1, 2}) {
            const double analytic = raz::dq_dv(k, s.v, s.x, s.y, s.p);
            const double fd = (raz::q_closed(k, s.v + h, s.x, s.y, s.p) -
                               raz::q_closed(k, s.v - h, s.x, s.y, s.p)) /
                              (2.0 * h);
            worst = std::max(worst,
                             std::abs(analytic - fd) / std::max(1.0, std::abs(analytic)));
        }
        ++checked;
    }
    // Analytic continuity across the all-ramp switch locus.
    std::mt19937_64 rng2(seed + 2);
    double worst_gap = 0.0;
    int gaps = 0;
    while (gaps < 200) {
        const DomainSample s = sample_domain(rng2);
        if (const auto sw = raz::detail::q2_switch_v(s.x, s.y, s.p)) {
            worst_gap = std::max(worst_gap,
                                 std::abs(raz::detail::dq2_two_piece(*sw, s.x, s.y, s.p) -
                                          raz::detail::dq2_all_ramp(*sw, s.x, s.y, s.p)));
            ++gaps;
        }
    }
    tally.report("derivative", worst <= 1e-5 && worst_gap <= 1e-10,
                 std::to_string(checked) + " points, worst rel diff " + raz::fmt17(worst) +
                     "; switch gap " + raz::fmt17(worst_gap) + " on " +
                     std::to_string(gaps) + " loci");
}

void suite_lambert(SuiteTally& tally) {
    const double inv_e = std::exp(-1.0);
    double worst_resid = 0.0;
    bool branch_ok = true;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const double z = -inv_e + inv_e * (static_cast<double>(i) / n);
        const double w = raz::lambert_w_restricted(z);
        worst_resid = std::max(worst_resid, std::abs(w * std::exp(w) - z));
        branch_ok = branch_ok && w <= -1.0;
    }
    const double endpoint = std::abs(raz::lambert_w_restricted(-inv_e) + 1.0);
    tally.report("lambert", worst_resid <= 1e-12 && branch_ok && endpoint <= 1e-10,
                 std::to_string(n) + " points, worst residual " + raz::fmt17(worst_resid) +
                     ", endpoint gap " + raz::fmt17(endpoint));
}

void suite_lemma_roots(SuiteTally& tally) {
    const std::vector<std::pair<double, double>> pts = {
        {-2.0, -2.8}, {-0.25, -1.75}, {-1.0, -1.05}, {-5.0, -5.3}, {-0.3, -0.9}};
    bool ok = true;
    std::string why;
    for (const auto& [mu, sigma] : pts) {
        raz::Params p;
        p.mu = mu;
        p.sigma = sigma;
        const raz::DerivedConstants d = raz::derived_constants(p);
        for (const int k : {1, 2}) {
            double prev_m = 1.0, prev_n = 1.0;
            for (int i = 0; i < 100; ++i) {
                const double xm = d.n0 * (i + 1) / 100.0; // minimum-case far bound
                const double rm = raz::bound_root_m(k, xm, d.m0 / 2.0, p);
                const double lo_m = std::max(d.m0, -(sigma / mu) * xm);
                if (i > 0 && rm > prev_m + 1e-9) {
                    ok = false;
                    why = "bound_root_m not nonincreasing in x";
                }
                if (rm < lo_m - 1e-9 || rm > 1e-12) {
                    ok = false;
                    why = "bound_root_m outside its interval";
                }
                prev_m = rm;

                const double xn = d.m0 * (i + 1) / 100.0; // maximum-case far bound
                const double rn = raz::bound_root_n(k, xn, d.n0 / 2.0, p);
                // The grid walks x downward from near 0 to m0, so a root map
                // that is nonincreasing in x must be nondecreasing along it.
                if (i > 0 && rn < prev_n - 1e-9) {
                    ok = false;
                    why = "bound_root_n not nonincreasing in x";
                }
                if (rn < -1e-12 || rn > -(sigma / mu) * xn + 1e-9) {
                    ok = false;
                    why = "bound_root_n outside its interval";
                }
                prev_n = rn;
            }
            // Sign structure around a mid-grid root, 50 samples per side.
            {
                const double x = d.n0 / 2.0, y = d.m0 / 2.0;
                const double root = raz::bound_root_m(k, x, y, p);
                const double lo = std::max(d.m0, -(sigma / mu) * x);
                for (int i = 0; i < 50; ++i) {
                    const double below = lo + (root - 1e-7 - lo) * i / 49.0;
                    const double above = root + 1e-7 + (0.0 - root - 1e-7) * i / 49.0;
                    if (below > lo && raz::q_closed(k, below, x, y, p) >= 1e-12) {
                        ok = false;
                        why = "Q not negative below the minimum-case root";
                    }
                    if (above < 0.0 && raz::q_closed(k, above, x, y, p) <= -1e-12) {
                        ok = false;
                        why = "Q not positive above the minimum-case root";
                    }
                }
            }
            {
                const double x = d.m0 / 2.0, y = d.n0 / 2.0;
                const double root = raz::bound_root_n(k, x, y, p);
                const double hi = -(sigma / mu) * x;
                for (int i = 0; i < 50; ++i) {
                    const double below = (root - 1e-7) * i / 49.0;
                    const double above = root + 1e-7 + (hi - root - 1e-7) * i / 49.0;
                    if (below > 0.0 && raz::q_closed(k, below, x, y, p) >= 1e-12) {
                        ok = false;
                        why = "Q not negative below the maximum-case root";
                    }
                    if (above < hi && raz::q_closed(k, above, x, y, p) <= -1e-12) {
                        ok = false;
                        why = "Q not positive above the maximum-case root";
                    }
                }
            }
        }
    }
    tally.report("lemma-roots", ok,
                 ok ? "monotone in x, interval membership, sign structure" : why);
}

void suite_extremum_inequalities(SuiteTally& tally) {
    raz::Params p;
    p.mu = -0.25;
    p.sigma = -1.75;
    const raz::Trajectory traj =
        raz::integrate(p, raz::HistoryFunction::constant(0.99 * raz::derived_constants(p).n0),
                       120.0, 1e-3);
    bool ok = true;
    int checked = 0;
    double worst = 0.0;
    for (const int k : {1, 2}) {
        const raz::IterationTrace trace = raz::iterate_bounds(k, p, 500, 1e-10);
        for (const auto& e : traj.extrema) {
            // Find the tightest pair already valid at this extremum's time.
            std::size_t idx = trace.pairs.size();
            for (std::size_t i = 0; i < trace.settle_times.size(); ++i)
                if (trace.settle_times[i] <= e.t)
                    idx = i;
                else
                    break;
            if (idx >= trace.pairs.size())
                continue; // before the first settle time
            const raz::BoundPair b = trace.pairs[idx];
            double violation = 0.0;
            if (e.kind == raz::ExtremumKind::Max)
                violation = raz::q_closed(k, e.v, b.m, b.n, p); // must be <= 0
            else
                violation = -raz::q_closed(k, e.v, b.n, b.m, p); // must be >= 0
            worst = std::max(worst, violation);
            if (violation > 1e-4)
                ok = false;
            ++checked;
        }
    }
    tally.report("extremum-inequalities", ok && checked > 0,
                 std::to_string(checked) + " extremum checks, worst violation " +
                     raz::fmt17(worst));
}

struct VerifyCmd {
    std::optional<std::uint64_t> seed;
    std::optional<int> samples;
    std::optional<double> perturb_q;
    std::optional<std::string> config;

    void attach(CLI::App* sub) {
        sub->add_option("--seed", seed, "RNG seed (default 12345)");
        sub->add_option("--samples", samples, "tuples per oracle suite (default 1000)");
        sub->add_option("--perturb-q", perturb_q,
                        "negative control: offset added to q_closed inside the oracle suite");
        sub->add_option("--config", config, "JSON file supplying flag defaults");
    }

    int run() const {
        const json cfg = load_config(config);
        const std::uint64_t sd = resolve(seed, cfg, "seed", {std::uint64_t{12345}});
        const int n = resolve(samples, cfg, "samples", {1000});
        const double perturb = resolve(perturb_q, cfg, "perturb-q", {0.0});
        if (n < 1)
            throw raz::DomainError("verify: samples must be >= 1");
        SuiteTally tally;
        suite_oracle_q(tally, sd, n, perturb);
        suite_derivative(tally, sd, std::max(100, n / 2));
        suite_lambert(tally);
        suite_lemma_roots(tally);
        suite_extremum_inequalities(tally);
        kv("verdict", tally.failures == 0 ? "PASS" : "FAIL");
        return tally.failures == 0 ? 0 : 1;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bound machinery for the state-dependent-delay sawtooth equation"};
    app.require_subcommand(1);

    ConstantsCmd constants_cmd;
    constants_cmd.attach(app.add_subcommand(
        "constants", "derived constants and region label for one parameter point"));
    RegionCmd region_cmd;
    region_cmd.pf.attach(
        app.add_subcommand("region", "stability-region label and boundary ordinates"));
    QEvalCmd qeval_cmd;
    qeval_cmd.attach(app.add_subcommand(
        "q-eval", "evaluate the extremum functional, its oracle, and its derivative"));
    BoundsCmd bounds_cmd;
    bounds_cmd.attach(app.add_subcommand(
        "bounds", "run the recursive bound iteration and report the limit pair"));
    SimulateCmd simulate_cmd;
    simulate_cmd.attach(
        app.add_subcommand("simulate", "integrate the delay equation and classify the tail"));
    SweepCmd sweep_cmd;
    sweep_cmd.attach(app.add_subcommand(
        "sweep", "limit bounds over a (mu, sigma) grid, CSV and optional SVG"));
    GasBoundaryCmd gasb_cmd;
    gasb_cmd.attach(app.add_subcommand(
        "gas-boundary", "trace the certified-stability boundary sigma(mu)"));
    CompareCmd compare_cmd;
    compare_cmd.attach(app.add_subcommand(
        "compare", "limit bounds versus simulated orbit amplitude along a sigma family"));
    VerifyCmd verify_cmd;
    verify_cmd.attach(app.add_subcommand("verify", "run the oracle verification suites"));

    CLI::App* parsed = nullptr;
    try {
        app.parse(argc, argv);
        parsed = app.get_subcommands().at(0);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const std::string name = parsed->get_name();
        if (name == "constants")
            return constants_cmd.run();
        if (name == "region")
            return region_cmd.run();
        if (name == "q-eval")
            return qeval_cmd.run();
        if (name == "bounds")
            return bounds_cmd.run();
        if (name == "simulate")
            return simulate_cmd.run();
        if (name == "sweep")
            return sweep_cmd.run();
        if (name == "gas-boundary")
            return gasb_cmd.run();
        if (name == "compare")
            return compare_cmd.run();
        if (name == "verify")
            return verify_cmd.run();
    } catch (const raz::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
