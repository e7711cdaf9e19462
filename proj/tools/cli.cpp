#include "cli.hpp"

#include "focus3d/geometry/return_map.hpp"
#include "focus3d/geometry/table_io.hpp"
#include "focus3d/io/decimal.hpp"
#include "focus3d/stability.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace focus3d::cli {

namespace {

using nlohmann::ordered_json;
using io::format_decimal;
using geometry::BilliardTable;
using geometry::GrowthMode;
using geometry::GrowthRecord;

constexpr double kPi = std::numbers::pi;

/// Invalid flag values; reported as usage errors.
class usage_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A check that ran but did not pass.
class verification_failure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Config {
    std::optional<double> l;
    std::optional<double> l_max;
    std::optional<double> phi_deg;
    std::optional<double> phi_rad;
    std::string phi_deg_grid;
    std::string phi_rad_grid;
    std::string l_grid;
    int section = 3;
    std::string table;
    double eps = 1e-9;
    std::size_t periods = 1000;
    std::string mode = "both";
    std::string out;
    std::string format = "csv";
    std::uint64_t seed = geometry::kDefaultSeed;
    std::optional<double> tol;
};

double resolve_phi(const Config& c) {
    if (c.phi_deg.has_value() == c.phi_rad.has_value())
        throw usage_error("exactly one of --phi-deg and --phi-rad is required");
    const double phi = c.phi_deg ? *c.phi_deg * kPi / 180.0 : *c.phi_rad;
    if (!(phi > 0.0 && phi < kPi / 2)) throw usage_error("phi must lie strictly between 0 and 90 degrees");
    return phi;
}

double require_l(const Config& c, bool allow_zero) {
    if (!c.l) throw usage_error("--l is required");
    if (!(allow_zero ? *c.l >= 0.0 : *c.l > 0.0))
        throw usage_error(allow_zero ? "--l must be non-negative" : "--l must be positive");
    return *c.l;
}

double positive_tol(const Config& c, double fallback) {
    if (!c.tol) return fallback;
    if (!(*c.tol > 0.0)) throw usage_error("--tol must be positive");
    return *c.tol;
}

/// Writes to --out when given, otherwise to the supplied stream.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw usage_error("cannot open '" + path + "' for writing");
            os_ = file_.get();
        }
    }
    std::ostream& stream() { return *os_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* os_;
};

void emit_json(std::ostream& os, const ordered_json& j) { os << j.dump(2) << '\n'; }

// ---- trace ----

int cmd_trace(const Config& c, std::ostream& out) {
    const double phi = resolve_phi(c);
    const double l = require_l(c, true);
    const Classification cls = classify(l, phi);
    Sink sink(c.out, out);
    auto& os = sink.stream();
    if (c.format == "json") {
        ordered_json j;
        j["l"] = l;
        j["phi"] = phi;
        j["trace"] = cls.trace;
        j["class"] = std::string(to_string(cls.kind));
        j["eigenvalues"] = ordered_json::array();
        for (const auto& e : cls.eigenvalues) j["eigenvalues"].push_back({e.real(), e.imag()});
        emit_json(os, j);
    } else {
        os << "l,phi,trace,class,eig1_re,eig1_im,eig2_re,eig2_im\n";
        os << format_decimal(l) << ',' << format_decimal(phi) << ',' << format_decimal(cls.trace) << ','
           << to_string(cls.kind);
        for (const auto& e : cls.eigenvalues) os << ',' << format_decimal(e.real()) << ',' << format_decimal(e.imag());
        os << '\n';
    }
    return kOk;
}

// ---- intervals ----

int cmd_intervals(const Config& c, std::ostream& out) {
    const double phi = resolve_phi(c);
    if (!c.l_max) throw usage_error("--l-max is required");
    if (!(*c.l_max > 0.0)) throw usage_error("--l-max must be positive");
    ScanOptions opt;
    opt.root_tol = positive_tol(c, opt.root_tol);
    const StabilityReport rep = stability_intervals(phi, *c.l_max, opt);
    const TraceEvaluator ev(phi);

    Sink sink(c.out, out);
    auto& os = sink.stream();
    if (c.format == "json") {
        auto points = [](const std::vector<BoundaryPoint>& v) {
            ordered_json a = ordered_json::array();
            for (const auto& p : v) a.push_back({{"l", p.l}, {"trace", p.trace}, {"tangency", p.tangency}});
            return a;
        };
        ordered_json j;
        j["phi"] = rep.phi;
        j["l_max"] = rep.l_max;
        j["intervals"] = ordered_json::array();
        for (const auto& iv : rep.intervals)
            j["intervals"].push_back({{"lo", iv.lo}, {"hi", iv.hi}, {"hi_truncated", iv.hi_truncated}});
        j["endpoints"] = points(rep.endpoints);
        j["exception_points"] = points(rep.exception_points);
        j["other_tangencies"] = points(rep.other_tangencies);
        if (rep.window) {
            const double l0 = 1.0 / std::cos(phi);
            j["window"] = {{"start", l0}, {"start_trace", ev.value(l0)}, {"epsilon", *rep.window}};
        } else {
            j["window"] = nullptr;
        }
        emit_json(os, j);
        return kOk;
    }
    // One record per line: intervals carry lo/hi, points carry l/trace.
    os << "kind,l,l_hi,trace,flag\n";
    for (const auto& iv : rep.intervals)
        os << "interval," << format_decimal(iv.lo) << ',' << format_decimal(iv.hi) << ",," << iv.hi_truncated << '\n';
    auto rows = [&](const char* kind, const std::vector<BoundaryPoint>& v) {
        for (const auto& p : v)
            os << kind << ',' << format_decimal(p.l) << ",," << format_decimal(p.trace) << ',' << p.tangency << '\n';
    };
    rows("endpoint", rep.endpoints);
    rows("exception", rep.exception_points);
    rows("tangency", rep.other_tangencies);
    if (rep.window) {
        const double l0 = 1.0 / std::cos(phi);
        os << "window," << format_decimal(l0) << ',' << format_decimal(l0 + *rep.window) << ','
           << format_decimal(ev.value(l0)) << ",0\n";
    }
    return kOk;
}

// ---- scan ----

int cmd_scan(const Config& c, std::ostream& out) {
    if (c.phi_deg_grid.empty() == c.phi_rad_grid.empty())
        throw usage_error("exactly one of --phi-deg and --phi-rad is required");
    std::vector<double> phis = parse_grid(c.phi_deg_grid.empty() ? c.phi_rad_grid : c.phi_deg_grid);
    if (!c.phi_deg_grid.empty())
        for (double& p : phis) p *= kPi / 180.0;
    for (double p : phis)
        if (!(p > 0.0 && p < kPi / 2)) throw usage_error("phi grid values must lie strictly between 0 and 90 degrees");
    if (c.l_grid.empty()) throw usage_error("--l is required");
    const std::vector<double> ls = parse_grid(c.l_grid);
    for (double l : ls)
        if (!(l >= 0.0)) throw usage_error("l grid values must be non-negative");

    const auto rows = sweep(phis, ls);
    Sink sink(c.out, out);
    auto& os = sink.stream();
    if (c.format == "json") {
        ordered_json j = ordered_json::array();
        for (const auto& r : rows)
            j.push_back({{"phi", r.phi}, {"l", r.l}, {"trace", r.cls.trace}, {"class", std::string(to_string(r.cls.kind))}});
        emit_json(os, j);
    } else {
        write_sweep_csv(os, rows);
    }
    return kOk;
}

// ---- build-verify ----

struct Check {
    std::string name;
    double value;
    double tolerance;
    bool pass;
};

std::vector<Check> verification_checks(const BilliardTable& t, double closure_tol) {
    std::vector<Check> checks;
    auto add = [&](std::string name, double value, double tol) {
        checks.push_back({std::move(name), value, tol, std::isfinite(value) && value <= tol});
    };
    const double phi = t.params.phi, l = t.params.l;
    const auto rep = geometry::verify_table(t);
    add("closure_residual", rep.closure_residual, closure_tol);
    const double angle_tol = t.section == 3 ? 1e-12 : 1e-10;
    for (std::size_t k = 0; k < rep.hits.size(); ++k) {
        const auto& h = rep.hits[k];
        const double expected = h.sphere ? phi : 3 * kPi / 4 - phi;
        add("angle_error_hit" + std::to_string(k) + (h.sphere ? "_sphere" : "_flat"), std::abs(h.angle - expected),
            angle_tol);
        add("specular_residual_hit" + std::to_string(k), h.specular_residual, 1e-12);
    }
    if (t.section == 4) add("alternation_violations", rep.alternating ? 0.0 : 1.0, 0.0);
    for (std::size_t k = 0; k < rep.sphere_to_sphere.size(); ++k)
        add("sphere_distance_error" + std::to_string(k), std::abs(rep.sphere_to_sphere[k] - l), 1e-10);

    try {
        const auto est = geometry::numerical_monodromy(t, 1e-6);
        const double tr = std::abs(trace_value(l, phi));
        add("monodromy_det_error", std::abs(est.det - 1.0), 1e-6);
        add("monodromy_off_block_leakage", est.off_block_leakage, 1e-6);
        add("monodromy_trace_error_upper", std::abs(std::abs(est.trace_upper) - tr), 1e-3);
        add("monodromy_trace_error_lower", std::abs(std::abs(est.trace_lower) - tr), 1e-3);
        add("monodromy_richardson_residual", est.richardson_residual, 1e-4);
    } catch (const geometry::geometry_error& e) {
        add(std::string("monodromy_failed: ") + e.what(), std::numeric_limits<double>::infinity(), 0.0);
    }
    return checks;
}

int cmd_build_verify(const Config& c, std::ostream& out, std::ostream& err) {
    if (c.section != 3 && c.section != 4) throw usage_error("--section must be 3 or 4");
    const double l = require_l(c, false);
    if (c.out.empty()) throw usage_error("--out is required (path of the table document)");
    const double tol = positive_tol(c, 1e-10);
    BilliardTable table;
    if (c.section == 3) {
        if (c.phi_deg || c.phi_rad) {
            const double phi = resolve_phi(c);
            if (std::abs(phi - kPi / 4) > 1e-12) throw usage_error("section 3 has reflection angle 45 degrees");
        }
        table = geometry::build_section3(l);
    } else {
        table = geometry::build_section4(l, resolve_phi(c));
    }
    geometry::save_table(table, c.out);
    const auto checks = verification_checks(table, tol);
    const bool all = std::all_of(checks.begin(), checks.end(), [](const Check& k) { return k.pass; });

    if (c.format == "json") {
        ordered_json j;
        j["section"] = table.section;
        j["table"] = c.out;
        j["hits"] = table.hits_per_period();
        j["checks"] = ordered_json::array();
        for (const auto& k : checks)
            j["checks"].push_back({{"name", k.name}, {"value", k.value}, {"tolerance", k.tolerance}, {"pass", k.pass}});
        j["pass"] = all;
        emit_json(out, j);
    } else {
        out << "check,value,tolerance,pass\n";
        for (const auto& k : checks)
            out << k.name << ',' << format_decimal(k.value) << ',' << format_decimal(k.tolerance) << ','
                << (k.pass ? "pass" : "fail") << '\n';
    }
    if (!all) {
        err << "verification failed\n";
        return kVerification;
    }
    return kOk;
}

// ---- simulate ----

double late_slope(const std::vector<double>& amp) {
    if (amp.size() < 2) return std::nan("");
    const std::size_t a = amp.size() / 2 - 1, b = amp.size() - 1;
    return std::log(amp[b] / amp[a]) / static_cast<double>(b - a);
}

int cmd_simulate(const Config& c, std::ostream& out, std::ostream& err) {
    if (c.table.empty()) throw usage_error("--table is required");
    if (!(c.eps > 0.0)) throw usage_error("--eps must be positive");
    if (c.periods < 1) throw usage_error("--periods must be at least 1");
    if (c.mode != "linearized" && c.mode != "nonlinear" && c.mode != "both")
        throw usage_error("--mode must be linearized, nonlinear or both");
    const double tol = positive_tol(c, 1e-10);

    BilliardTable table;
    try {
        table = geometry::load_table(c.table);
    } catch (const geometry::geometry_error&) {
        throw;
    } catch (const std::runtime_error& e) {
        throw usage_error(e.what());
    }
    const double closure = geometry::verify_table(table).closure_residual;
    if (!(closure <= tol))
        throw verification_failure("table does not close: residual " + format_decimal(closure) + " > " +
                                   format_decimal(tol));

    std::vector<std::pair<std::string, GrowthRecord>> runs;
    if (c.mode != "nonlinear")
        runs.emplace_back("linearized", geometry::perturbation_growth(table, c.eps, c.periods, GrowthMode::linearized, c.seed));
    if (c.mode != "linearized")
        runs.emplace_back("nonlinear", geometry::perturbation_growth(table, c.eps, c.periods, GrowthMode::nonlinear, c.seed));

    Sink sink(c.out, out);
    auto& os = sink.stream();
    if (c.format == "json") {
        ordered_json j;
        j["table"] = c.table;
        j["eps"] = c.eps;
        j["periods"] = c.periods;
        j["seed"] = c.seed;
        for (const auto& [name, rec] : runs) {
            ordered_json r;
            r["amplification"] = rec.amplification;
            r["max_amplification"] = rec.max_amplification;
            r["mean_log_growth"] = rec.mean_log_growth;
            r["late_slope"] = late_slope(rec.amplification);
            r["escaped"] = rec.escaped;
            r["escape_period"] = rec.escape_period ? ordered_json(*rec.escape_period) : ordered_json(nullptr);
            j[name] = std::move(r);
        }
        emit_json(os, j);
    } else {
        os << "period";
        for (const auto& [name, rec] : runs) os << ',' << name << "_amplification," << name << "_status";
        os << '\n';
        for (std::size_t k = 0; k < c.periods; ++k) {
            os << k + 1;
            for (const auto& [name, rec] : runs) {
                if (k < rec.amplification.size())
                    os << ',' << format_decimal(rec.amplification[k]) << ",tracking";
                else
                    os << ",,escaped";
            }
            os << '\n';
        }
    }
    for (const auto& [name, rec] : runs) {
        err << name << ": max_amplification=" << format_decimal(rec.max_amplification)
            << " mean_log_growth=" << format_decimal(rec.mean_log_growth)
            << " late_slope=" << format_decimal(late_slope(rec.amplification));
        if (rec.escaped) err << " escaped_in_period=" << *rec.escape_period;
        err << '\n';
    }
    return kOk;
}

void add_phi_options(CLI::App* sub, Config& c) {
    auto* deg = sub->add_option("--phi-deg", c.phi_deg, "reflection angle in degrees");
    auto* rad = sub->add_option("--phi-rad", c.phi_rad, "reflection angle in radians");
    deg->excludes(rad);
}

void add_output_options(CLI::App* sub, Config& c) {
    sub->add_option("--out", c.out, "output path (default: standard output)");
    sub->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
}

}  // namespace

std::vector<double> parse_grid(const std::string& spec) {
    auto number = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw usage_error("bad number '" + s + "' in grid '" + spec + "'");
        }
        if (used != s.size() || !std::isfinite(v)) throw usage_error("bad number '" + s + "' in grid '" + spec + "'");
        return v;
    };
    std::vector<double> out;
    if (spec.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(spec);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw usage_error("range grid must be a:b:n, got '" + spec + "'");
        const double a = number(parts[0]), b = number(parts[1]);
        const double n_raw = number(parts[2]);
        if (n_raw < 0 || n_raw != std::floor(n_raw)) throw usage_error("range count must be a non-negative integer");
        const auto n = static_cast<std::size_t>(n_raw);
        for (std::size_t i = 0; i < n; ++i)
            out.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
        return out;
    }
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(number(p));
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Stability of periodic billiard orbits with focusing spherical mirrors", "focus3d"};
    app.require_subcommand(1);
    Config c;

    auto* trace = app.add_subcommand("trace", "monodromy trace, class and eigenvalues at one (l, phi)");
    trace->add_option("--l", c.l, "distance between consecutive reflections");
    add_phi_options(trace, c);
    add_output_options(trace, c);

    auto* intervals = app.add_subcommand("intervals", "stability intervals, exception points and window");
    intervals->add_option("--l-max", c.l_max, "upper end of the l range");
    intervals->add_option("--tol", c.tol, "root tolerance");
    add_phi_options(intervals, c);
    add_output_options(intervals, c);

    auto* scan = app.add_subcommand("scan", "classify a (phi, l) grid");
    auto* sdeg = scan->add_option("--phi-deg", c.phi_deg_grid, "phi grid in degrees: a:b:n or a,b,...");
    auto* srad = scan->add_option("--phi-rad", c.phi_rad_grid, "phi grid in radians");
    sdeg->excludes(srad);
    scan->add_option("--l", c.l_grid, "l grid: a:b:n or a,b,...");
    add_output_options(scan, c);

    auto* build = app.add_subcommand("build-verify", "build a table, write it and verify it");
    build->add_option("--section", c.section, "3: six spheres; 4: spheres and flats");
    build->add_option("--l", c.l, "sphere-to-sphere distance");
    build->add_option("--tol", c.tol, "closure tolerance");
    add_phi_options(build, c);
    build->add_option("--out", c.out, "path of the table document");
    build->add_option("--format", c.format, "report format: csv or json")->check(CLI::IsMember({"csv", "json"}));

    auto* sim = app.add_subcommand("simulate", "perturbation growth along the reference orbit");
    sim->add_option("--table", c.table, "table document from build-verify");
    sim->add_option("--eps", c.eps, "initial perturbation size");
    sim->add_option("--periods", c.periods, "number of periods");
    sim->add_option("--mode", c.mode, "linearized, nonlinear or both");
    sim->add_option("--seed", c.seed, "seed for the perturbation direction");
    sim->add_option("--tol", c.tol, "closure tolerance for the loaded table");
    add_output_options(sim, c);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (trace->parsed()) return cmd_trace(c, out);
        if (intervals->parsed()) return cmd_intervals(c, out);
        if (scan->parsed()) return cmd_scan(c, out);
        if (build->parsed()) return cmd_build_verify(c, out, err);
        if (sim->parsed()) return cmd_simulate(c, out, err);
    } catch (const usage_error& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const solver_error& e) {
        err << "solver failure: " << e.what() << '\n';
        return kSolver;
    } catch (const geometry::geometry_error& e) {
        err << "verification failure: " << e.what() << '\n';
        return kVerification;
    } catch (const verification_failure& e) {
        err << "verification failure: " << e.what() << '\n';
        return kVerification;
    } catch (const std::invalid_argument& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

}  // namespace focus3d::cli
