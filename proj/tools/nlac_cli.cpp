// Command-line front end: time-domain runs, limit sweeps, periodic-state
// solves, coefficient recovery, and a kernel self-test.
//
// Exit codes: 0 success, 2 configuration problem (unknown or malformed
// keys), 3 solver failure (reported as JSON on stderr), 1 anything else.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "nlac/asymptotics.hpp"
#include "nlac/fracderiv.hpp"
#include "nlac/inversion.hpp"
#include "nlac/io.hpp"
#include "nlac/multiharmonic.hpp"
#include "nlac/timedomain.hpp"

using Json = nlohmann::ordered_json;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

// ---------------------------------------------------------------------------
// strict JSON access
// ---------------------------------------------------------------------------

void check_keys(const Json& j, const std::string& ctx, const std::vector<std::string>& allowed) {
    if (!j.is_object()) fail(ctx + ": expected an object");
    for (const auto& item : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
            fail(ctx + ": unknown key '" + item.key() + "'");
    }
}

const Json& need(const Json& j, const std::string& ctx, const std::string& key) {
    auto it = j.find(key);
    if (it == j.end()) fail(ctx + ": missing key '" + key + "'");
    return *it;
}

double get_num(const Json& j, const std::string& ctx, const std::string& key) {
    const Json& v = need(j, ctx, key);
    if (!v.is_number()) fail(ctx + ": '" + key + "' must be a number");
    return v.get<double>();
}

double get_num_or(const Json& j, const std::string& ctx, const std::string& key, double dflt) {
    return j.contains(key) ? get_num(j, ctx, key) : dflt;
}

long long get_int(const Json& j, const std::string& ctx, const std::string& key) {
    const Json& v = need(j, ctx, key);
    if (!v.is_number_integer()) fail(ctx + ": '" + key + "' must be an integer");
    return v.get<long long>();
}

long long get_int_or(const Json& j, const std::string& ctx, const std::string& key,
                     long long dflt) {
    return j.contains(key) ? get_int(j, ctx, key) : dflt;
}

std::string get_str(const Json& j, const std::string& ctx, const std::string& key) {
    const Json& v = need(j, ctx, key);
    if (!v.is_string()) fail(ctx + ": '" + key + "' must be a string");
    return v.get<std::string>();
}

bool get_bool_or(const Json& j, const std::string& ctx, const std::string& key, bool dflt) {
    if (!j.contains(key)) return dflt;
    const Json& v = j.at(key);
    if (!v.is_boolean()) fail(ctx + ": '" + key + "' must be a boolean");
    return v.get<bool>();
}

std::vector<double> get_num_array(const Json& j, const std::string& ctx, const std::string& key) {
    const Json& v = need(j, ctx, key);
    if (!v.is_array()) fail(ctx + ": '" + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const Json& e : v) {
        if (!e.is_number()) fail(ctx + ": '" + key + "' must contain only numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

// ---------------------------------------------------------------------------
// config fragments -> library objects (each returns the resolved JSON too)
// ---------------------------------------------------------------------------

nlac::Medium parse_medium(const Json& j, Json& resolved) {
    const std::string ctx = "medium";
    check_keys(j, ctx,
               {"rho0_kg_m3", "c_m_per_s", "delta_m2_s", "b_over_a", "tau_s", "formulation"});
    const double rho0 = get_num(j, ctx, "rho0_kg_m3");
    const double c = get_num(j, ctx, "c_m_per_s");
    const double delta = get_num_or(j, ctx, "delta_m2_s", 0.0);
    const double b_over_a = get_num(j, ctx, "b_over_a");
    const double tau = get_num_or(j, ctx, "tau_s", 0.0);
    const std::string form = get_str(j, ctx, "formulation");
    nlac::Formulation f;
    if (form == "pressure")
        f = nlac::Formulation::Pressure;
    else if (form == "potential")
        f = nlac::Formulation::Potential;
    else
        fail(ctx + ": formulation must be 'pressure' or 'potential'");
    resolved = Json{{"rho0_kg_m3", rho0}, {"c_m_per_s", c},   {"delta_m2_s", delta},
                    {"b_over_a", b_over_a}, {"tau_s", tau},   {"formulation", form}};
    return nlac::Medium::make(rho0, c, delta, b_over_a, tau, f);
}

nlac::Grid1D parse_grid(const Json& j, Json& resolved) {
    const std::string ctx = "grid";
    check_keys(j, ctx, {"length_m", "n_nodes"});
    const double length = get_num(j, ctx, "length_m");
    const long long n = get_int(j, ctx, "n_nodes");
    if (n < 2) fail(ctx + ": n_nodes must be at least 2");
    resolved = Json{{"length_m", length}, {"n_nodes", n}};
    return nlac::Grid1D(length, static_cast<std::size_t>(n));
}

nlac::TimeAxis parse_time(const Json& j, Json& resolved) {
    const std::string ctx = "time";
    check_keys(j, ctx, {"t_final_s", "n_steps"});
    const double tf = get_num(j, ctx, "t_final_s");
    const long long n = get_int(j, ctx, "n_steps");
    if (n < 1) fail(ctx + ": n_steps must be positive");
    resolved = Json{{"t_final_s", tf}, {"n_steps", n}};
    return nlac::TimeAxis(tf, static_cast<std::size_t>(n));
}

nlac::BoundaryCondition parse_boundary_side(const Json& j, const std::string& ctx, double c,
                                            Json& resolved) {
    const std::string kind = get_str(j, ctx, "kind");
    if (kind == "dirichlet") {
        check_keys(j, ctx, {"kind"});
        resolved = Json{{"kind", "dirichlet"}};
        return nlac::BoundaryCondition::dirichlet0();
    }
    if (kind == "neumann") {
        check_keys(j, ctx, {"kind"});
        resolved = Json{{"kind", "neumann"}};
        return nlac::BoundaryCondition::neumann0();
    }
    if (kind == "absorbing") {
        check_keys(j, ctx, {"kind"});
        resolved = Json{{"kind", "absorbing"}};
        return nlac::BoundaryCondition::impedance(1.0 / c, 0.0);
    }
    if (kind == "impedance") {
        check_keys(j, ctx, {"kind", "beta_s_per_m", "gamma_per_m"});
        const double beta = get_num_or(j, ctx, "beta_s_per_m", 0.0);
        const double gamma = get_num_or(j, ctx, "gamma_per_m", 0.0);
        resolved = Json{{"kind", "impedance"}, {"beta_s_per_m", beta}, {"gamma_per_m", gamma}};
        return nlac::BoundaryCondition::impedance(beta, gamma);
    }
    fail(ctx + ": kind must be dirichlet, neumann, absorbing, or impedance");
}

nlac::BoundarySpec parse_boundary(const Json* j, double c, Json& resolved) {
    nlac::BoundarySpec bc = nlac::BoundarySpec::dirichlet0();
    Json left = Json{{"kind", "dirichlet"}}, right = Json{{"kind", "dirichlet"}};
    if (j) {
        check_keys(*j, "boundary", {"left", "right"});
        if (j->contains("left")) bc.left = parse_boundary_side(j->at("left"), "boundary.left", c, left);
        if (j->contains("right"))
            bc.right = parse_boundary_side(j->at("right"), "boundary.right", c, right);
    }
    resolved = Json{{"left", left}, {"right", right}};
    return bc;
}

std::vector<double> parse_field(const Json* j, const std::string& ctx, const nlac::Grid1D& grid,
                                Json& resolved) {
    if (!j) {
        resolved = Json{{"kind", "zero"}};
        return std::vector<double>(grid.n_nodes, 0.0);
    }
    const std::string kind = get_str(*j, ctx, "kind");
    if (kind == "zero") {
        check_keys(*j, ctx, {"kind"});
        resolved = Json{{"kind", "zero"}};
        return std::vector<double>(grid.n_nodes, 0.0);
    }
    if (kind == "gaussian") {
        check_keys(*j, ctx, {"kind", "amplitude", "center_m", "sigma_m"});
        const double amp = get_num(*j, ctx, "amplitude");
        const double center = get_num(*j, ctx, "center_m");
        const double sigma = get_num(*j, ctx, "sigma_m");
        resolved =
            Json{{"kind", "gaussian"}, {"amplitude", amp}, {"center_m", center}, {"sigma_m", sigma}};
        return nlac::gaussian_pulse(grid, amp, center, sigma);
    }
    fail(ctx + ": kind must be 'zero' or 'gaussian'");
}

nlac::Damping parse_damping(const Json* j, Json& resolved) {
    if (!j) {
        resolved = Json{{"kind", "from_medium"}};
        return nlac::Damping::from_medium();
    }
    const std::string ctx = "damping";
    const std::string kind = get_str(*j, ctx, "kind");
    if (kind == "from_medium") {
        check_keys(*j, ctx, {"kind"});
        resolved = Json{{"kind", "from_medium"}};
        return nlac::Damping::from_medium();
    }
    if (kind == "none") {
        check_keys(*j, ctx, {"kind"});
        resolved = Json{{"kind", "none"}};
        return nlac::Damping::none();
    }
    if (kind == "strong") {
        check_keys(*j, ctx, {"kind", "b_m2_s"});
        const double b = get_num(*j, ctx, "b_m2_s");
        resolved = Json{{"kind", "strong"}, {"b_m2_s", b}};
        return nlac::Damping::strong(b);
    }
    if (kind == "caputo_wismer") {
        check_keys(*j, ctx, {"kind", "coefficient", "order"});
        const double coeff = get_num(*j, ctx, "coefficient");
        const double order = get_num(*j, ctx, "order");
        resolved = Json{{"kind", "caputo_wismer"}, {"coefficient", coeff}, {"order", order}};
        return nlac::Damping::caputo_wismer(coeff, order);
    }
    fail(ctx + ": kind must be from_medium, none, strong, or caputo_wismer");
}

nlac::Equation parse_equation(const std::string& name) {
    if (name == "linear_wave") return nlac::Equation::LinearWave;
    if (name == "westervelt") return nlac::Equation::Westervelt;
    if (name == "kuznetsov") return nlac::Equation::Kuznetsov;
    if (name == "jmgt_westervelt") return nlac::Equation::JmgtWestervelt;
    if (name == "jmgt_kuznetsov") return nlac::Equation::JmgtKuznetsov;
    fail("equation: must be linear_wave, westervelt, kuznetsov, jmgt_westervelt, or "
         "jmgt_kuznetsov");
}

nlac::SourceFn parse_source(const Json* j, Json& resolved) {
    if (!j) {
        resolved = Json{{"kind", "none"}};
        return nullptr;
    }
    const std::string ctx = "source";
    const std::string kind = get_str(*j, ctx, "kind");
    if (kind == "none") {
        check_keys(*j, ctx, {"kind"});
        resolved = Json{{"kind", "none"}};
        return nullptr;
    }
    if (kind == "tone") {
        check_keys(*j, ctx, {"kind", "amplitude", "frequency_hz", "center_m", "sigma_m",
                             "ramp_periods"});
        const double amp = get_num(*j, ctx, "amplitude");
        const double freq = get_num(*j, ctx, "frequency_hz");
        const double center = get_num(*j, ctx, "center_m");
        const double sigma = get_num(*j, ctx, "sigma_m");
        const double ramp = get_num_or(*j, ctx, "ramp_periods", 2.0);
        if (!(freq > 0.0)) fail(ctx + ": frequency_hz must be positive");
        if (!(sigma > 0.0)) fail(ctx + ": sigma_m must be positive");
        if (!(ramp >= 0.0)) fail(ctx + ": ramp_periods must be nonnegative");
        resolved = Json{{"kind", "tone"},     {"amplitude", amp}, {"frequency_hz", freq},
                        {"center_m", center}, {"sigma_m", sigma}, {"ramp_periods", ramp}};
        const double omega = 2.0 * M_PI * freq;
        const double t_ramp = ramp / freq;
        return [amp, omega, center, sigma, t_ramp](double x, double t) {
            const double env = std::exp(-0.5 * std::pow((x - center) / sigma, 2.0));
            const double gate =
                (t_ramp <= 0.0 || t >= t_ramp) ? 1.0 : 0.5 * (1.0 - std::cos(M_PI * t / t_ramp));
            return amp * env * gate * std::sin(omega * t);
        };
    }
    fail(ctx + ": kind must be 'none' or 'tone'");
}

nlac::StepperConfig parse_stepper(const Json* j, Json& resolved) {
    nlac::StepperConfig cfg;
    std::string scheme = "auto";
    if (j) {
        const std::string ctx = "stepper";
        check_keys(*j, ctx, {"picard_tol", "picard_max_iter", "degeneracy_floor", "scheme"});
        cfg.picard_tol = get_num_or(*j, ctx, "picard_tol", cfg.picard_tol);
        cfg.picard_max_iter = static_cast<int>(
            get_int_or(*j, ctx, "picard_max_iter", cfg.picard_max_iter));
        cfg.degeneracy_floor = get_num_or(*j, ctx, "degeneracy_floor", cfg.degeneracy_floor);
        if (j->contains("scheme")) scheme = get_str(*j, ctx, "scheme");
    }
    if (scheme == "auto")
        cfg.scheme = nlac::Scheme::Auto;
    else if (scheme == "midpoint")
        cfg.scheme = nlac::Scheme::ImplicitMidpoint2nd;
    else if (scheme == "trapezoid3")
        cfg.scheme = nlac::Scheme::FirstOrderSystemTrapezoid3rd;
    else
        fail("stepper: scheme must be auto, midpoint, or trapezoid3");
    resolved = Json{{"picard_tol", cfg.picard_tol},
                    {"picard_max_iter", cfg.picard_max_iter},
                    {"degeneracy_floor", cfg.degeneracy_floor},
                    {"scheme", scheme}};
    return cfg;
}

struct SimulateConfig {
    nlac::SimulationSetup setup;
    std::vector<double> sensors_x;
    std::size_t frame_stride = 1;
    Json resolved;
};

SimulateConfig parse_simulate_config(const Json& j) {
    check_keys(j, "config",
               {"medium", "equation", "damping", "grid", "time", "boundary", "initial", "source",
                "stepper", "output"});
    SimulateConfig out;
    Json r_medium, r_grid, r_time, r_boundary, r_damping, r_source, r_stepper;
    out.setup.medium = parse_medium(need(j, "config", "medium"), r_medium);
    out.setup.grid = parse_grid(need(j, "config", "grid"), r_grid);
    out.setup.time = parse_time(need(j, "config", "time"), r_time);
    const std::string eq_name = get_str(j, "config", "equation");
    out.setup.model.equation = parse_equation(eq_name);
    out.setup.model.damping =
        parse_damping(j.contains("damping") ? &j.at("damping") : nullptr, r_damping);
    out.setup.bc = parse_boundary(j.contains("boundary") ? &j.at("boundary") : nullptr,
                                  out.setup.medium.c, r_boundary);
    out.setup.source = parse_source(j.contains("source") ? &j.at("source") : nullptr, r_source);
    out.setup.stepper =
        parse_stepper(j.contains("stepper") ? &j.at("stepper") : nullptr, r_stepper);

    Json r_u0, r_u1, r_u2;
    const Json* init = j.contains("initial") ? &j.at("initial") : nullptr;
    if (init) check_keys(*init, "initial", {"u0", "u1", "u2"});
    out.setup.init.u0 =
        parse_field(init && init->contains("u0") ? &init->at("u0") : nullptr, "initial.u0",
                    out.setup.grid, r_u0);
    out.setup.init.u1 =
        parse_field(init && init->contains("u1") ? &init->at("u1") : nullptr, "initial.u1",
                    out.setup.grid, r_u1);
    const bool third = out.setup.model.equation == nlac::Equation::JmgtWestervelt ||
                       out.setup.model.equation == nlac::Equation::JmgtKuznetsov;
    Json r_init = Json{{"u0", r_u0}, {"u1", r_u1}};
    if (init && init->contains("u2")) {
        out.setup.init.u2 = parse_field(&init->at("u2"), "initial.u2", out.setup.grid, r_u2);
        r_init["u2"] = r_u2;
    } else if (third) {
        out.setup.init.u2 = std::vector<double>(out.setup.grid.n_nodes, 0.0);
        r_init["u2"] = Json{{"kind", "zero"}};
    }

    const Json* output = j.contains("output") ? &j.at("output") : nullptr;
    if (output) check_keys(*output, "output", {"sensors_x_m", "frame_stride"});
    out.sensors_x = output && output->contains("sensors_x_m")
                        ? get_num_array(*output, "output", "sensors_x_m")
                        : std::vector<double>{0.5 * out.setup.grid.length};
    const long long stride = output ? get_int_or(*output, "output", "frame_stride", 1) : 1;
    if (stride < 1) fail("output: frame_stride must be positive");
    out.frame_stride = static_cast<std::size_t>(stride);

    out.resolved = Json{{"medium", r_medium},     {"equation", eq_name}, {"damping", r_damping},
                        {"grid", r_grid},         {"time", r_time},      {"boundary", r_boundary},
                        {"initial", r_init},      {"source", r_source},  {"stepper", r_stepper},
                        {"output", Json{{"sensors_x_m", out.sensors_x},
                                        {"frame_stride", out.frame_stride}}}};
    return out;
}

// ---------------------------------------------------------------------------
// periodic-state configs
// ---------------------------------------------------------------------------

struct HarmonicConfig {
    nlac::HarmonicProblem problem;
    nlac::FixedPointOptions fp;
    std::vector<double> sensors_x;
    Json resolved;
};

std::vector<nlac::Cplx> drive_envelope(const Json& j, const nlac::Grid1D& grid, Json& resolved) {
    const std::string ctx = "drive";
    check_keys(j, ctx, {"frequency_hz", "amplitude", "center_m", "sigma_m"});
    const double freq = get_num(j, ctx, "frequency_hz");
    const double amp = get_num(j, ctx, "amplitude");
    const double center = get_num(j, ctx, "center_m");
    const double sigma = get_num(j, ctx, "sigma_m");
    if (!(freq > 0.0)) fail(ctx + ": frequency_hz must be positive");
    if (!(sigma > 0.0)) fail(ctx + ": sigma_m must be positive");
    resolved = Json{{"frequency_hz", freq}, {"amplitude", amp}, {"center_m", center},
                    {"sigma_m", sigma}};
    std::vector<nlac::Cplx> r(grid.n_nodes);
    for (std::size_t i = 0; i < grid.n_nodes; ++i)
        r[i] = amp * std::exp(-0.5 * std::pow((grid.x(i) - center) / sigma, 2.0));
    return r;
}

nlac::KappaProfile parse_profile(const Json& j, const std::string& ctx, Json& resolved) {
    check_keys(j, ctx, {"breakpoints_m", "values"});
    nlac::KappaProfile p;
    p.breakpoints = j.contains("breakpoints_m") ? get_num_array(j, ctx, "breakpoints_m")
                                                : std::vector<double>{};
    p.values = get_num_array(j, ctx, "values");
    resolved = Json{{"breakpoints_m", p.breakpoints}, {"values", p.values}};
    return p;
}

HarmonicConfig parse_harmonic_config(const Json& j, bool allow_fixed_point) {
    std::vector<std::string> keys{"medium", "grid",          "boundary", "drive",
                                  "n_harmonics", "kappa_profile", "output"};
    if (allow_fixed_point) keys.push_back("fixed_point");
    check_keys(j, "config", keys);

    HarmonicConfig out;
    Json r_medium, r_grid, r_boundary, r_drive;
    out.problem.medium = parse_medium(need(j, "config", "medium"), r_medium);
    out.problem.grid = parse_grid(need(j, "config", "grid"), r_grid);
    out.problem.bc = parse_boundary(j.contains("boundary") ? &j.at("boundary") : nullptr,
                                    out.problem.medium.c, r_boundary);
    const Json& drive = need(j, "config", "drive");
    out.problem.r_hat = drive_envelope(drive, out.problem.grid, r_drive);
    out.problem.omega = 2.0 * M_PI * get_num(drive, "drive", "frequency_hz");
    const long long m = get_int_or(j, "config", "n_harmonics", 2);
    if (m < 1) fail("config: n_harmonics must be positive");
    out.problem.n_harmonics = static_cast<std::size_t>(m);

    Json r_profile;
    if (j.contains("kappa_profile")) {
        const nlac::KappaProfile p = parse_profile(j.at("kappa_profile"), "kappa_profile", r_profile);
        out.problem.kappa = p.render(out.problem.grid);
    }

    Json r_fp;
    if (allow_fixed_point) {
        if (j.contains("fixed_point")) {
            const Json& f = j.at("fixed_point");
            const std::string ctx = "fixed_point";
            check_keys(f, ctx, {"mode", "theta", "tol", "max_iter"});
            const std::string mode =
                f.contains("mode") ? get_str(f, ctx, "mode") : std::string("full");
            if (mode == "full")
                out.fp.mode = nlac::BmMode::Full;
            else if (mode == "truncated")
                out.fp.mode = nlac::BmMode::Truncated;
            else
                fail(ctx + ": mode must be 'full' or 'truncated'");
            out.fp.theta = get_num_or(f, ctx, "theta", out.fp.theta);
            out.fp.tol = get_num_or(f, ctx, "tol", out.fp.tol);
            out.fp.max_iter = static_cast<int>(get_int_or(f, ctx, "max_iter", out.fp.max_iter));
        }
        r_fp = Json{{"mode", out.fp.mode == nlac::BmMode::Full ? "full" : "truncated"},
                    {"theta", out.fp.theta},
                    {"tol", out.fp.tol},
                    {"max_iter", out.fp.max_iter}};
    }

    const Json* output = j.contains("output") ? &j.at("output") : nullptr;
    if (output) check_keys(*output, "output", {"sensors_x_m"});
    out.sensors_x = output && output->contains("sensors_x_m")
                        ? get_num_array(*output, "output", "sensors_x_m")
                        : std::vector<double>{0.75 * out.problem.grid.length};

    out.resolved = Json{{"medium", r_medium},
                        {"grid", r_grid},
                        {"boundary", r_boundary},
                        {"drive", r_drive},
                        {"n_harmonics", out.problem.n_harmonics}};
    if (j.contains("kappa_profile")) out.resolved["kappa_profile"] = r_profile;
    if (allow_fixed_point) out.resolved["fixed_point"] = r_fp;
    out.resolved["output"] = Json{{"sensors_x_m", out.sensors_x}};
    return out;
}

// ---------------------------------------------------------------------------
// output writers
// ---------------------------------------------------------------------------

void write_metadata(const std::string& outdir, const std::string& command, const Json& resolved,
                    const Json& derived) {
    Json m;
    m["tool"] = "nlac";
    m["version"] = nlac::io::version_string();
    m["command"] = command;
    if (!derived.is_null()) m["derived"] = derived;
    m["resolved_config"] = resolved;
    nlac::io::write_file(outdir + "/metadata.json", m.dump(2) + "\n");
}

std::string prepare_outdir(const std::string& dir) {
    std::filesystem::create_directories(dir);
    return dir;
}

Json load_config(const std::string& path) {
    const std::string text = nlac::io::read_file(path);
    Json j = Json::parse(text, nullptr, false);
    if (j.is_discarded()) fail("config: '" + path + "' is not valid JSON");
    return j;
}

// ---------------------------------------------------------------------------
// subcommand bodies
// ---------------------------------------------------------------------------

int run_simulate(const std::string& config_path, const std::string& outdir) {
    const SimulateConfig cfg = parse_simulate_config(load_config(config_path));
    const nlac::FieldHistory h = nlac::simulate(cfg.setup);

    std::vector<std::size_t> nodes;
    for (double x : cfg.sensors_x) nodes.push_back(cfg.setup.grid.nearest_node(x));

    std::vector<std::string> header{"t_s"};
    std::vector<std::vector<double>> cols(1 + 2 * nodes.size());
    for (std::size_t s = 0; s < nodes.size(); ++s) {
        header.push_back("u_s" + std::to_string(s));
        header.push_back("ut_s" + std::to_string(s));
    }
    for (std::size_t n = 0; n < h.n_frames(); n += cfg.frame_stride) {
        cols[0].push_back(h.t(n));
        for (std::size_t s = 0; s < nodes.size(); ++s) {
            cols[1 + 2 * s].push_back(h.u(n)[nodes[s]]);
            cols[2 + 2 * s].push_back(h.ut(n)[nodes[s]]);
        }
    }
    nlac::io::write_csv(outdir + "/sensors.csv", header, cols);

    const std::size_t last = h.n_frames() - 1;
    std::vector<double> xs(cfg.setup.grid.n_nodes);
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = cfg.setup.grid.x(i);
    nlac::io::write_csv(outdir + "/field_final.csv", {"x_m", "u", "ut", "utt"},
                        {xs, h.u(last), h.ut(last), h.utt(last)});

    Json derived{{"kappa", cfg.setup.medium.kappa},
                 {"dx_m", cfg.setup.grid.dx()},
                 {"dt_s", cfg.setup.time.dt()},
                 {"n_frames", h.n_frames()},
                 {"sensor_nodes", nodes},
                 {"outputs", Json::array({"sensors.csv", "field_final.csv"})}};
    write_metadata(outdir, "simulate", cfg.resolved, derived);
    return 0;
}

int run_sweep(const std::string& config_path, const std::string& outdir,
              nlac::SweepParameter which) {
    const Json j = load_config(config_path);
    check_keys(j, "config", {"base", "values", "horizon_backoff", "max_horizon_retries"});
    const SimulateConfig base = parse_simulate_config(need(j, "config", "base"));

    nlac::SweepConfig cfg;
    cfg.parameter = which;
    cfg.base = base.setup;
    cfg.values = get_num_array(j, "config", "values");
    cfg.horizon_backoff = get_num_or(j, "config", "horizon_backoff", cfg.horizon_backoff);
    cfg.max_horizon_retries = static_cast<int>(
        get_int_or(j, "config", "max_horizon_retries", cfg.max_horizon_retries));

    const nlac::SweepResult res = nlac::run_sweep(cfg);

    std::vector<double> vals, ch1, xb;
    for (const nlac::SweepRow& r : res.rows) {
        vals.push_back(r.value);
        ch1.push_back(r.rel_c_h1);
        xb.push_back(r.rel_xbar_w);
    }
    nlac::io::write_csv(outdir + "/sweep.csv", {"value", "rel_c_h1", "rel_xbar_w"},
                        {vals, ch1, xb});

    const std::string command =
        which == nlac::SweepParameter::Tau ? "sweep-tau" : "sweep-delta";
    const Json resolved{{"base", base.resolved},
                        {"values", cfg.values},
                        {"horizon_backoff", cfg.horizon_backoff},
                        {"max_horizon_retries", cfg.max_horizon_retries}};
    const Json derived{{"achieved_horizon_s", res.achieved_horizon},
                       {"monotone_c_h1", res.monotone_c_h1},
                       {"outputs", Json::array({"sweep.csv"})}};
    write_metadata(outdir, command, resolved, derived);
    return 0;
}

void write_harmonic_outputs(const std::string& outdir, const nlac::HarmonicStack& stack,
                            const std::vector<double>& sensors_x) {
    const std::size_t nn = stack.grid.n_nodes;
    const std::size_t M = stack.n_harmonics();
    std::vector<std::string> header{"x_m"};
    std::vector<std::vector<double>> cols;
    std::vector<double> xs(nn);
    for (std::size_t i = 0; i < nn; ++i) xs[i] = stack.grid.x(i);
    cols.push_back(xs);
    for (std::size_t m = 1; m <= M; ++m) {
        header.push_back("re_u" + std::to_string(m));
        header.push_back("im_u" + std::to_string(m));
        header.push_back("abs_u" + std::to_string(m));
        std::vector<double> re(nn), im(nn), ab(nn);
        for (std::size_t i = 0; i < nn; ++i) {
            re[i] = stack.harmonic(m)[i].real();
            im[i] = stack.harmonic(m)[i].imag();
            ab[i] = std::abs(stack.harmonic(m)[i]);
        }
        cols.push_back(re);
        cols.push_back(im);
        cols.push_back(ab);
    }
    nlac::io::write_csv(outdir + "/field_harmonics.csv", header, cols);

    std::vector<double> sx, hm, re, im, ab;
    for (double x : sensors_x) {
        const std::size_t node = stack.grid.nearest_node(x);
        for (std::size_t m = 1; m <= M; ++m) {
            sx.push_back(stack.grid.x(node));
            hm.push_back(static_cast<double>(m));
            re.push_back(stack.harmonic(m)[node].real());
            im.push_back(stack.harmonic(m)[node].imag());
            ab.push_back(std::abs(stack.harmonic(m)[node]));
        }
    }
    nlac::io::write_csv(outdir + "/sensors.csv", {"sensor_x_m", "harmonic", "re", "im", "abs"},
                        {sx, hm, re, im, ab});
}

int run_harmonics(const std::string& config_path, const std::string& outdir, bool fixed_point) {
    const HarmonicConfig cfg = parse_harmonic_config(load_config(config_path), fixed_point);
    Json derived;
    nlac::HarmonicStack stack;
    if (fixed_point) {
        nlac::FixedPointReport rep;
        stack = nlac::solve_fixed_point(cfg.problem, cfg.fp, &rep);
        derived = Json{{"iterations", rep.iterations}, {"final_update", rep.final_update}};
    } else {
        stack = nlac::solve_cascade(cfg.problem);
        derived = Json::object();
    }
    write_harmonic_outputs(outdir, stack, cfg.sensors_x);
    derived["outputs"] = Json::array({"field_harmonics.csv", "sensors.csv"});
    write_metadata(outdir, fixed_point ? "harmonics" : "cascade", cfg.resolved, derived);
    return 0;
}

// observation file format: harmonic, sensor_index, sensor_x_m, re, im
void write_observations(const std::string& path, const nlac::ObservationSet& obs,
                        const nlac::Grid1D& grid) {
    std::vector<double> hm, si, sx, re, im;
    for (std::size_t m = 0; m < obs.n_harmonics; ++m)
        for (std::size_t k = 0; k < obs.sensor_nodes.size(); ++k) {
            hm.push_back(static_cast<double>(m + 1));
            si.push_back(static_cast<double>(k));
            sx.push_back(grid.x(obs.sensor_nodes[k]));
            re.push_back(obs.values[m][k].real());
            im.push_back(obs.values[m][k].imag());
        }
    nlac::io::write_csv(path, {"harmonic", "sensor_index", "sensor_x_m", "re", "im"},
                        {hm, si, sx, re, im});
}

nlac::ObservationSet read_observations(const std::string& path, std::size_t n_harmonics,
                                       const std::vector<std::size_t>& sensor_nodes) {
    const std::string text = nlac::io::read_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) fail("observations: '" + path + "' is empty");
    nlac::ObservationSet obs;
    obs.n_harmonics = n_harmonics;
    obs.sensor_nodes = sensor_nodes;
    obs.values.assign(n_harmonics, std::vector<nlac::Cplx>(sensor_nodes.size()));
    std::vector<std::vector<bool>> seen(n_harmonics,
                                        std::vector<bool>(sensor_nodes.size(), false));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<double> nums;
        while (std::getline(row, cell, ',')) nums.push_back(std::stod(cell));
        if (nums.size() != 5) fail("observations: each row needs 5 columns");
        const long long m = static_cast<long long>(nums[0]);
        const long long k = static_cast<long long>(nums[1]);
        if (m < 1 || m > static_cast<long long>(n_harmonics) || k < 0 ||
            k >= static_cast<long long>(sensor_nodes.size()))
            fail("observations: row indexes outside the experiment layout");
        obs.values[static_cast<std::size_t>(m - 1)][static_cast<std::size_t>(k)] =
            nlac::Cplx{nums[3], nums[4]};
        seen[static_cast<std::size_t>(m - 1)][static_cast<std::size_t>(k)] = true;
    }
    for (const auto& row : seen)
        for (bool s : row)
            if (!s) fail("observations: file does not cover every harmonic/sensor pair");
    return obs;
}

int run_invert(const std::string& config_path, const std::string& outdir) {
    const Json j = load_config(config_path);
    check_keys(j, "config", {"experiment", "data", "recover"});

    // experiment
    const Json& ej = need(j, "config", "experiment");
    check_keys(ej, "experiment",
               {"medium", "grid", "boundary", "drive", "n_harmonics", "sensors_x_m",
                "use_fixed_point"});
    nlac::ExperimentSetup setup;
    Json r_medium, r_grid, r_boundary, r_drive;
    setup.medium = parse_medium(need(ej, "experiment", "medium"), r_medium);
    setup.grid = parse_grid(need(ej, "experiment", "grid"), r_grid);
    setup.bc = parse_boundary(ej.contains("boundary") ? &ej.at("boundary") : nullptr,
                              setup.medium.c, r_boundary);
    const Json& drive = need(ej, "experiment", "drive");
    setup.r_hat = drive_envelope(drive, setup.grid, r_drive);
    setup.omega = 2.0 * M_PI * get_num(drive, "drive", "frequency_hz");
    const long long m = get_int_or(ej, "experiment", "n_harmonics", 2);
    if (m < 1) fail("experiment: n_harmonics must be positive");
    setup.n_harmonics = static_cast<std::size_t>(m);
    const std::vector<double> sensors_x = get_num_array(ej, "experiment", "sensors_x_m");
    for (double x : sensors_x) setup.sensor_nodes.push_back(setup.grid.nearest_node(x));
    setup.use_fixed_point = get_bool_or(ej, "experiment", "use_fixed_point", false);

    // data
    const Json& dj = need(j, "config", "data");
    const std::string data_kind = get_str(dj, "data", "kind");
    nlac::ObservationSet data;
    Json r_data;
    double default_noise_norm = 0.0;
    if (data_kind == "synthetic") {
        check_keys(dj, "data", {"kind", "truth", "noise_level", "seed"});
        Json r_truth;
        const nlac::KappaProfile truth =
            parse_profile(need(dj, "data", "truth"), "data.truth", r_truth);
        const double noise = get_num_or(dj, "data", "noise_level", 0.0);
        const long long seed = get_int_or(dj, "data", "seed", 0);
        if (seed < 0) fail("data: seed must be nonnegative");
        data = nlac::synthesize_observations(setup, truth, noise,
                                             static_cast<unsigned>(seed));
        if (noise > 0.0) {
            const std::vector<double> clean =
                nlac::stack_observations(nlac::predict_observations(setup, truth));
            double acc = 0.0;
            for (double v : clean) acc += v * v;
            default_noise_norm = noise * std::sqrt(acc);
        }
        write_observations(outdir + "/observations.csv", data, setup.grid);
        r_data = Json{{"kind", "synthetic"}, {"truth", r_truth}, {"noise_level", noise},
                      {"seed", seed}};
    } else if (data_kind == "file") {
        check_keys(dj, "data", {"kind", "path"});
        const std::string path = get_str(dj, "data", "path");
        data = read_observations(path, setup.n_harmonics, setup.sensor_nodes);
        r_data = Json{{"kind", "file"}, {"path", path}};
    } else {
        fail("data: kind must be 'synthetic' or 'file'");
    }

    // recovery controls
    const Json& rj = need(j, "config", "recover");
    check_keys(rj, "recover",
               {"breakpoints_m", "init_values", "jacobian", "reg_lambda_scale", "fd_step",
                "max_outer", "tol_update", "discrepancy_tau", "noise_norm"});
    const std::vector<double> breakpoints =
        rj.contains("breakpoints_m") ? get_num_array(rj, "recover", "breakpoints_m")
                                     : std::vector<double>{};
    const std::vector<double> init = get_num_array(rj, "recover", "init_values");
    nlac::GaussNewtonOptions opt;
    const std::string jac = rj.contains("jacobian") ? get_str(rj, "recover", "jacobian")
                                                    : std::string("linearized");
    if (jac == "linearized")
        opt.jacobian = nlac::JacobianMode::LinearizedCascade;
    else if (jac == "finite_difference")
        opt.jacobian = nlac::JacobianMode::FiniteDifference;
    else
        fail("recover: jacobian must be 'linearized' or 'finite_difference'");
    opt.reg_lambda_scale = get_num_or(rj, "recover", "reg_lambda_scale", opt.reg_lambda_scale);
    opt.fd_step = get_num_or(rj, "recover", "fd_step", opt.fd_step);
    opt.max_outer = static_cast<int>(get_int_or(rj, "recover", "max_outer", opt.max_outer));
    opt.tol_update = get_num_or(rj, "recover", "tol_update", opt.tol_update);
    opt.discrepancy_tau = get_num_or(rj, "recover", "discrepancy_tau", opt.discrepancy_tau);
    opt.noise_norm = get_num_or(rj, "recover", "noise_norm", default_noise_norm);

    const nlac::InversionResult res = nlac::recover_kappa(setup, data, breakpoints, init, opt);

    std::vector<double> it, rn, lm, sn;
    for (const nlac::GaussNewtonTraceRow& row : res.trace) {
        it.push_back(static_cast<double>(row.iter));
        rn.push_back(row.residual_norm);
        lm.push_back(row.lambda);
        sn.push_back(row.step_norm);
    }
    nlac::io::write_csv(outdir + "/trace.csv", {"iter", "residual_norm", "lambda", "step_norm"},
                        {it, rn, lm, sn});

    const char* status = res.status == nlac::GnStatus::DiscrepancyReached ? "discrepancy_reached"
                         : res.status == nlac::GnStatus::SmallUpdate     ? "small_update"
                                                                         : "max_iterations";
    Json result{{"recovered_values", res.kappa},
                {"status", status},
                {"final_residual", res.final_residual},
                {"outer_iterations", res.trace.size()}};
    nlac::io::write_file(outdir + "/result.json", result.dump(2) + "\n");

    const Json resolved{{"experiment", Json{{"medium", r_medium},
                                            {"grid", r_grid},
                                            {"boundary", r_boundary},
                                            {"drive", r_drive},
                                            {"n_harmonics", setup.n_harmonics},
                                            {"sensors_x_m", sensors_x},
                                            {"use_fixed_point", setup.use_fixed_point}}},
                        {"data", r_data},
                        {"recover", Json{{"breakpoints_m", breakpoints},
                                         {"init_values", init},
                                         {"jacobian", jac},
                                         {"reg_lambda_scale", opt.reg_lambda_scale},
                                         {"fd_step", opt.fd_step},
                                         {"max_outer", opt.max_outer},
                                         {"tol_update", opt.tol_update},
                                         {"discrepancy_tau", opt.discrepancy_tau},
                                         {"noise_norm", opt.noise_norm}}}};
    Json derived{{"status", status},
                 {"outputs", data_kind == "synthetic"
                                 ? Json::array({"observations.csv", "trace.csv", "result.json"})
                                 : Json::array({"trace.csv", "result.json"})}};
    write_metadata(outdir, "invert", resolved, derived);
    return 0;
}

// quick interior consistency checks of the memory kernels; prints one line
// per check and fails the process if any of them breaks
int run_frac_selftest() {
    bool ok = true;
    auto report = [&ok](const std::string& name, bool pass, double detail) {
        std::cout << (pass ? "[PASS] " : "[FAIL] ") << name << " (" << detail << ")\n";
        if (!pass) ok = false;
    };

    // first power: the discrete rule lands on the closed form at every node
    for (double alpha : {0.25, 0.5, 0.75}) {
        const double dt = 1.0 / 64.0;
        const std::size_t n = 64;
        std::vector<double> series(n + 1);
        for (std::size_t i = 0; i <= n; ++i) series[i] = dt * static_cast<double>(i);
        const std::vector<double> d = nlac::caputo_l1(series, alpha, dt);
        double worst = 0.0;
        for (std::size_t i = 1; i <= n; ++i) {
            const double t = dt * static_cast<double>(i);
            const double want = std::pow(t, 1.0 - alpha) / std::tgamma(2.0 - alpha);
            worst = std::max(worst, std::abs(d[i] - want));
        }
        report("first-power identity, order " + nlac::io::format_double(alpha), worst <= 1e-12,
               worst);
    }

    // second power: convergence order approaches 2 - alpha
    for (double alpha : {0.25, 0.5, 0.75}) {
        auto err = [alpha](std::size_t n) {
            const double dt = 1.0 / static_cast<double>(n);
            std::vector<double> series(n + 1);
            for (std::size_t i = 0; i <= n; ++i) {
                const double t = dt * static_cast<double>(i);
                series[i] = t * t;
            }
            const std::vector<double> d = nlac::caputo_l1(series, alpha, dt);
            const double want = 2.0 / std::tgamma(3.0 - alpha);
            return std::abs(d[n] - want);
        };
        const double rate = std::log2(err(64) / err(128));
        report("second-power rate, order " + nlac::io::format_double(alpha),
               rate >= 2.0 - alpha - 0.1, rate);
    }

    // sign structure of the discrete rule against products and squares
    std::mt19937 rng(1234);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    double worst_margin = 0.0, worst_coercivity = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const double alpha = 0.1 + 0.8 * (trial % 9) / 8.0;
        const double dt = 0.01;
        std::vector<double> w(65);
        for (double& v : w) v = U(rng);
        const nlac::ChainRuleReport c = nlac::check_chain_rule_inequality(w, alpha, dt);
        worst_margin = std::min(worst_margin, c.min_margin / (c.max_abs_sq + 1e-300));
        const nlac::CoercivityReport k = nlac::check_abel_coercivity(w, alpha, dt);
        worst_coercivity = std::min(worst_coercivity, k.value / (k.series_norm_sq + 1e-300));
    }
    report("product rule one-sidedness", worst_margin >= -1e-12, worst_margin);
    report("memory form nonnegativity", worst_coercivity >= -1e-12, worst_coercivity);

    return ok ? 0 : 1;
}

const char* error_kind(const nlac::Error& e) {
    if (dynamic_cast<const nlac::DegeneracyError*>(&e)) return "degeneracy";
    if (dynamic_cast<const nlac::PicardDivergence*>(&e)) return "picard_divergence";
    if (dynamic_cast<const nlac::NonContraction*>(&e)) return "non_contraction";
    if (dynamic_cast<const nlac::IllConditioned*>(&e)) return "ill_conditioned";
    if (dynamic_cast<const nlac::SingularOperator*>(&e)) return "singular_operator";
    if (dynamic_cast<const nlac::InvalidParameter*>(&e)) return "invalid_parameter";
    if (dynamic_cast<const nlac::NumericalError*>(&e)) return "numerical_error";
    return "error";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"1-D nonlinear acoustics toolkit"};
    app.set_version_flag("--version", nlac::io::version_string());
    app.require_subcommand(1);

    std::string config_path, outdir;
    auto add_io = [&](CLI::App* cmd) {
        cmd->add_option("config", config_path, "JSON configuration file")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("-o,--output", outdir, "output directory")->required();
    };

    CLI::App* simulate = app.add_subcommand("simulate", "time-domain run of one model");
    add_io(simulate);
    CLI::App* sweep_tau =
        app.add_subcommand("sweep-tau", "relaxation-time limit study of a third-order model");
    add_io(sweep_tau);
    CLI::App* sweep_delta =
        app.add_subcommand("sweep-delta", "diffusivity limit study of a damped model");
    add_io(sweep_delta);
    CLI::App* harmonics =
        app.add_subcommand("harmonics", "periodic state via the self-consistent iteration");
    add_io(harmonics);
    CLI::App* cascade =
        app.add_subcommand("cascade", "periodic state via one sequential harmonic sweep");
    add_io(cascade);
    CLI::App* invert = app.add_subcommand("invert", "recover a piecewise coefficient profile");
    add_io(invert);
    app.add_subcommand("frac-selftest", "consistency checks of the memory kernels");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("frac-selftest")) return run_frac_selftest();
        prepare_outdir(outdir);
        if (app.got_subcommand("simulate")) return run_simulate(config_path, outdir);
        if (app.got_subcommand("sweep-tau"))
            return run_sweep(config_path, outdir, nlac::SweepParameter::Tau);
        if (app.got_subcommand("sweep-delta"))
            return run_sweep(config_path, outdir, nlac::SweepParameter::Delta);
        if (app.got_subcommand("harmonics")) return run_harmonics(config_path, outdir, true);
        if (app.got_subcommand("cascade")) return run_harmonics(config_path, outdir, false);
        if (app.got_subcommand("invert")) return run_invert(config_path, outdir);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const nlac::Error& e) {
        Json err{{"error", Json{{"type", error_kind(e)}, {"message", e.what()}}}};
        std::cerr << err.dump() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
