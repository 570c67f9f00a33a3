#include "nlac/field_history.hpp"
#include "nlac/types.hpp"

#include <algorithm>
#include <cmath>

namespace nlac {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw InvalidParameter(msg);
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

// ---------------------------------------------------------------------------
// Medium
// ---------------------------------------------------------------------------

Medium Medium::make(double rho0, double c, double delta, double b_over_a,
                    double tau, Formulation formulation) {
    require(finite(rho0) && rho0 > 0.0, "medium: rho0 must be positive and finite");
    require(finite(c) && c > 0.0, "medium: c must be positive and finite");
    require(finite(delta) && delta >= 0.0, "medium: delta must be nonnegative and finite");
    require(finite(b_over_a), "medium: b_over_a must be finite");
    require(finite(tau) && tau >= 0.0, "medium: tau must be nonnegative and finite");
    Medium m;
    m.rho0 = rho0;
    m.c = c;
    m.delta = delta;
    m.b_over_a = b_over_a;
    m.tau = tau;
    m.formulation = formulation;
    m.kappa = derive_kappa(m, formulation);
    return m;
}

Medium Medium::water(Formulation formulation, double tau) {
    return make(1000.0, 1500.0, 6e-9, 5.0, tau, formulation);
}

double derive_kappa(const Medium& medium, Formulation formulation) {
    require(finite(medium.c) && medium.c > 0.0, "derive_kappa: medium.c must be positive");
    const double c2 = medium.c * medium.c;
    if (formulation == Formulation::Pressure) {
        require(finite(medium.rho0) && medium.rho0 > 0.0,
                "derive_kappa: medium.rho0 must be positive");
        return (1.0 + 0.5 * medium.b_over_a) / (medium.rho0 * c2);
    }
    return 0.5 * medium.b_over_a / c2;
}

// ---------------------------------------------------------------------------
// Grid and time axis
// ---------------------------------------------------------------------------

Grid1D::Grid1D(double length_, std::size_t n_nodes_)
    : length(length_), n_nodes(n_nodes_) {
    require(finite(length) && length > 0.0, "grid: length must be positive and finite");
    require(n_nodes >= 3, "grid: need at least 3 nodes");
}

std::vector<double> Grid1D::nodes() const {
    std::vector<double> xs(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) xs[i] = x(i);
    return xs;
}

std::size_t Grid1D::nearest_node(double p) const {
    const double r = p / dx();
    double j = std::floor(r + 0.5);
    // half-integer r sits between nodes; floor(r+0.5) picks the right one,
    // shift back to honor the resolve-left contract
    if (r + 0.5 == j) j -= 1.0;
    j = std::clamp(j, 0.0, static_cast<double>(n_nodes - 1));
    return static_cast<std::size_t>(j);
}

TimeAxis::TimeAxis(double t_final_, std::size_t n_steps_)
    : t_final(t_final_), n_steps(n_steps_) {
    require(finite(t_final) && t_final > 0.0, "time: t_final must be positive and finite");
    require(n_steps >= 1, "time: need at least one step");
}

// ---------------------------------------------------------------------------
// Boundary conditions
// ---------------------------------------------------------------------------

BoundaryCondition BoundaryCondition::impedance(double beta, double gamma) {
    if (!(std::isfinite(beta) && std::isfinite(gamma)) || beta < 0.0 || gamma < 0.0)
        throw InvalidParameter("boundary: impedance weights must be nonnegative and finite");
    if (beta == 0.0 && gamma == 0.0)
        throw InvalidParameter("boundary: impedance with beta=gamma=0 is a zero-flux end; use neumann0()");
    return {BoundaryKind::Impedance, beta, gamma};
}

BoundarySpec BoundarySpec::absorbing(double c) {
    if (!(std::isfinite(c) && c > 0.0))
        throw InvalidParameter("boundary: absorbing() needs a positive wave speed");
    return {BoundaryCondition::impedance(1.0 / c, 0.0),
            BoundaryCondition::impedance(1.0 / c, 0.0)};
}

std::vector<double> gaussian_pulse(const Grid1D& grid, double amplitude,
                                   double center, double sigma) {
    require(finite(amplitude), "gaussian_pulse: amplitude must be finite");
    require(finite(center), "gaussian_pulse: center must be finite");
    require(finite(sigma) && sigma > 0.0, "gaussian_pulse: sigma must be positive");
    std::vector<double> f(grid.n_nodes);
    for (std::size_t i = 0; i < grid.n_nodes; ++i) {
        const double d = (grid.x(i) - center) / sigma;
        f[i] = amplitude * std::exp(-0.5 * d * d);
    }
    return f;
}

// ---------------------------------------------------------------------------
// FieldHistory
// ---------------------------------------------------------------------------

FieldHistory::FieldHistory(Grid1D grid, TimeAxis time, std::string model_tag)
    : grid_(grid), time_(time), model_tag_(std::move(model_tag)) {}

void FieldHistory::reserve(std::size_t n_frames) {
    times_.reserve(n_frames);
    u_.reserve(n_frames);
    ut_.reserve(n_frames);
    utt_.reserve(n_frames);
}

void FieldHistory::push_frame(double t, std::vector<double> u, std::vector<double> ut,
                              std::vector<double> utt) {
    if (u.size() != grid_.n_nodes || ut.size() != grid_.n_nodes || utt.size() != grid_.n_nodes)
        throw InvalidParameter("history: frame size does not match grid");
    times_.push_back(t);
    u_.push_back(std::move(u));
    ut_.push_back(std::move(ut));
    utt_.push_back(std::move(utt));
}

FieldHistory subtract_histories(const FieldHistory& a, const FieldHistory& b) {
    if (a.n_frames() != b.n_frames() || a.grid().n_nodes != b.grid().n_nodes)
        throw InvalidParameter("subtract_histories: trajectories are not conformal");
    FieldHistory d(a.grid(), a.time_axis(), a.model_tag() + "-diff");
    d.reserve(a.n_frames());
    const std::size_t nn = a.grid().n_nodes;
    for (std::size_t n = 0; n < a.n_frames(); ++n) {
        std::vector<double> u(nn), ut(nn), utt(nn);
        for (std::size_t i = 0; i < nn; ++i) {
            u[i] = a.u(n)[i] - b.u(n)[i];
            ut[i] = a.ut(n)[i] - b.ut(n)[i];
            utt[i] = a.utt(n)[i] - b.utt(n)[i];
        }
        d.push_frame(a.t(n), std::move(u), std::move(ut), std::move(utt));
    }
    return d;
}

// ---------------------------------------------------------------------------
// Discrete norms
// ---------------------------------------------------------------------------

namespace {

double trapezoid_sq(const std::vector<double>& f, double h) {
    double s = 0.5 * (f.front() * f.front() + f.back() * f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i] * f[i];
    return s * h;
}

}  // namespace

std::vector<double> derivative_x(const std::vector<double>& f, const Grid1D& grid) {
    const std::size_t n = grid.n_nodes;
    if (f.size() != n) throw InvalidParameter("derivative_x: field size does not match grid");
    const double h = grid.dx();
    std::vector<double> g(n);
    g[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    for (std::size_t i = 1; i + 1 < n; ++i) g[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    g[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    return g;
}

std::vector<double> second_derivative_x(const std::vector<double>& f, const Grid1D& grid) {
    const std::size_t n = grid.n_nodes;
    if (f.size() != n) throw InvalidParameter("second_derivative_x: field size does not match grid");
    if (n < 4) throw InvalidParameter("second_derivative_x: need at least 4 nodes");
    const double h2 = grid.dx() * grid.dx();
    std::vector<double> g(n);
    g[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
    for (std::size_t i = 1; i + 1 < n; ++i) g[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
    g[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
    return g;
}

double discrete_l2_norm(const std::vector<double>& f, const Grid1D& grid) {
    if (f.size() != grid.n_nodes)
        throw InvalidParameter("discrete_l2_norm: field size does not match grid");
    return std::sqrt(trapezoid_sq(f, grid.dx()));
}

double discrete_h1_norm(const std::vector<double>& f, const Grid1D& grid) {
    if (f.size() != grid.n_nodes)
        throw InvalidParameter("discrete_h1_norm: field size does not match grid");
    const double h = grid.dx();
    return std::sqrt(trapezoid_sq(f, h) + trapezoid_sq(derivative_x(f, grid), h));
}

double discrete_h2_norm(const std::vector<double>& f, const Grid1D& grid) {
    if (f.size() != grid.n_nodes)
        throw InvalidParameter("discrete_h2_norm: field size does not match grid");
    const double h = grid.dx();
    return std::sqrt(trapezoid_sq(f, h) + trapezoid_sq(derivative_x(f, grid), h) +
                     trapezoid_sq(second_derivative_x(f, grid), h));
}

NormReport norm_report(const FieldHistory& history) {
    if (history.n_frames() == 0) throw InvalidParameter("norm_report: empty trajectory");
    const Grid1D& g = history.grid();
    NormReport r;
    std::vector<double> h1tt(history.n_frames());
    for (std::size_t n = 0; n < history.n_frames(); ++n) {
        r.linf_h1 = std::max(r.linf_h1, discrete_h1_norm(history.u(n), g));
        r.w1inf_h2 = std::max({r.w1inf_h2, discrete_h2_norm(history.u(n), g),
                               discrete_h2_norm(history.ut(n), g)});
        h1tt[n] = discrete_h1_norm(history.utt(n), g);
    }
    double acc = 0.0;
    for (std::size_t n = 0; n + 1 < history.n_frames(); ++n) {
        const double dt = history.t(n + 1) - history.t(n);
        acc += 0.5 * dt * (h1tt[n] * h1tt[n] + h1tt[n + 1] * h1tt[n + 1]);
    }
    r.l2_h1_tt = std::sqrt(acc);
    r.xbar_w = std::sqrt(r.l2_h1_tt * r.l2_h1_tt + r.w1inf_h2 * r.w1inf_h2);
    return r;
}

}  // namespace nlac
