#include "nlac/timedomain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlac/fracderiv.hpp"
#include "nlac/tridiag.hpp"

namespace nlac {

Formulation formulation_of(Equation eq) {
    return eq == Equation::Westervelt ? Formulation::Pressure : Formulation::Potential;
}

bool is_third_order(Equation eq) {
    return eq == Equation::JmgtWestervelt || eq == Equation::JmgtKuznetsov;
}

const char* equation_name(Equation eq) {
    switch (eq) {
        case Equation::LinearWave: return "linear_wave";
        case Equation::Westervelt: return "westervelt";
        case Equation::Kuznetsov: return "kuznetsov";
        case Equation::JmgtWestervelt: return "jmgt_westervelt";
        case Equation::JmgtKuznetsov: return "jmgt_kuznetsov";
    }
    return "unknown";
}

namespace {

// ---------------------------------------------------------------------------
// Resolved run parameters shared by the stepping kernels.
// ---------------------------------------------------------------------------

struct Plan {
    Equation eq = Equation::LinearWave;
    bool third_order = false;
    bool alpha_on_u = false;     // leading factor uses u (pressure) instead of u_t
    bool kappa_vsq_rhs = false;  // kappa (u_t)^2 forcing (pressure form)
    bool gradient_rhs = false;   // (|u_x|^2)_t forcing (Kuznetsov members)
    double kappa = 0.0;
    double su = 0.0;  // c^2
    double sv = 0.0;  // strong damping coefficient
    double tau = 0.0;
    bool frac = false;  // Caputo-type damping
    double sf = 0.0;    // fractional damping coefficient
    double frac_beta = 1.0;
};

void require(bool ok, const std::string& msg) {
    if (!ok) throw InvalidParameter(msg);
}

Plan make_plan(const SimulationSetup& s) {
    const Medium& med = s.medium;
    require(std::isfinite(med.rho0) && med.rho0 > 0.0, "simulate: medium.rho0 must be positive");
    require(std::isfinite(med.c) && med.c > 0.0, "simulate: medium.c must be positive");
    require(std::isfinite(med.delta) && med.delta >= 0.0,
            "simulate: medium.delta must be nonnegative");
    require(std::isfinite(med.tau) && med.tau >= 0.0, "simulate: medium.tau must be nonnegative");
    require(std::isfinite(med.kappa), "simulate: medium.kappa must be finite");
    require(s.grid.n_nodes >= 4 && s.grid.length > 0.0, "simulate: grid needs >= 4 nodes");
    require(s.time.n_steps >= 1 && s.time.t_final > 0.0, "simulate: empty time axis");

    Plan p;
    p.eq = s.model.equation;
    p.third_order = is_third_order(p.eq);
    p.su = med.c * med.c;
    p.tau = med.tau;

    if (p.eq != Equation::LinearWave)
        require(med.formulation == formulation_of(p.eq),
                std::string("simulate: medium formulation does not match ") + equation_name(p.eq));

    p.kappa = p.eq == Equation::LinearWave ? 0.0 : med.kappa;
    p.alpha_on_u = (p.eq == Equation::Westervelt || p.eq == Equation::LinearWave);
    p.kappa_vsq_rhs = p.alpha_on_u;
    p.gradient_rhs = (p.eq == Equation::Kuznetsov || p.eq == Equation::JmgtKuznetsov);

    const Damping& d = s.model.damping;
    if (p.third_order) {
        require(d.kind == Damping::Kind::Strong && d.b < 0.0,
                "simulate: third-order equations take Damping::from_medium(); the damping "
                "coefficient is delta + tau c^2");
        p.sv = med.delta + med.tau * p.su;
    } else {
        switch (d.kind) {
            case Damping::Kind::None:
                p.sv = 0.0;
                break;
            case Damping::Kind::Strong:
                p.sv = d.b < 0.0 ? med.delta : d.b;
                require(std::isfinite(p.sv), "simulate: damping coefficient must be finite");
                break;
            case Damping::Kind::CaputoWismer:
                p.frac = true;
                p.sf = d.b < 0.0 ? med.delta : d.b;
                p.frac_beta = d.beta;
                require(std::isfinite(p.sf) && p.sf >= 0.0,
                        "simulate: fractional damping coefficient must be nonnegative");
                require(d.beta > 0.0 && d.beta <= 1.0,
                        "simulate: fractional damping order must lie in (0,1]");
                require(s.bc.left.kind != BoundaryKind::Impedance &&
                            s.bc.right.kind != BoundaryKind::Impedance,
                        "simulate: Caputo-type damping does not support impedance ends");
                p.sv = 0.0;
                break;
        }
    }

    if (s.stepper.scheme != Scheme::Auto) {
        const bool want3 = s.stepper.scheme == Scheme::FirstOrderSystemTrapezoid3rd;
        require(want3 == p.third_order,
                "simulate: scheme does not match the equation's time order");
    }
    require(s.stepper.picard_tol > 0.0 && s.stepper.picard_max_iter >= 1,
            "simulate: invalid iteration controls");
    require(s.stepper.degeneracy_floor > 0.0 && s.stepper.degeneracy_floor < 1.0,
            "simulate: degeneracy floor must lie in (0,1)");

    require(s.init.u0.size() == s.grid.n_nodes && s.init.u1.size() == s.grid.n_nodes,
            "simulate: initial data size does not match grid");
    if (p.third_order)
        require(s.init.u2.has_value() && s.init.u2->size() == s.grid.n_nodes,
                "simulate: third-order equations need the second time derivative at t=0");
    else
        require(!s.init.u2.has_value(),
                "simulate: second-derivative initial data is only accepted for third-order "
                "equations");
    return p;
}

// ---------------------------------------------------------------------------
// Small field utilities
// ---------------------------------------------------------------------------

using Vec = std::vector<double>;

void check_finite(const Vec& f, double t) {
    for (double v : f)
        if (!std::isfinite(v))
            throw NumericalError("simulate: non-finite field value at t=" + std::to_string(t));
}

Vec eval_source(const SourceFn& src, const Grid1D& grid, double t) {
    Vec f(grid.n_nodes, 0.0);
    if (src)
        for (std::size_t i = 0; i < grid.n_nodes; ++i) f[i] = src(grid.x(i), t);
    return f;
}

// alpha = 1 - kappa * state; throws under the configured floor.
Vec alpha_field(const Vec& state, double kappa, double floor, double t) {
    Vec a(state.size());
    double amin = std::numeric_limits<double>::infinity();
    std::size_t imin = 0;
    for (std::size_t i = 0; i < state.size(); ++i) {
        a[i] = 1.0 - kappa * state[i];
        if (a[i] < amin) {
            amin = a[i];
            imin = i;
        }
    }
    if (amin < floor)
        throw DegeneracyError("simulate: leading factor 1-kappa*state fell to " +
                                  std::to_string(amin) + " at node " + std::to_string(imin) +
                                  ", t=" + std::to_string(t),
                              t, imin, amin);
    return a;
}

// Nonlinear right side at a given state (zero vector when the plan has none).
Vec nonlinear_rhs(const Plan& p, const Vec& u, const Vec& v, const Grid1D& grid) {
    Vec n(grid.n_nodes, 0.0);
    if (p.kappa_vsq_rhs) {
        for (std::size_t i = 0; i < n.size(); ++i) n[i] = p.kappa * v[i] * v[i];
    } else if (p.gradient_rhs) {
        const Vec ux = derivative_x(u, grid);
        const Vec vx = derivative_x(v, grid);
        for (std::size_t i = 0; i < n.size(); ++i) n[i] = 2.0 * ux[i] * vx[i];
    }
    return n;
}

// Laplacian of f under the boundary spec. g is the companion field one time
// order above f, entering through the impedance flux; it is ignored for the
// other boundary kinds. Zero-value ends get a zero entry (their rows are
// never part of an interior update).
Vec lap_with_bc(const Vec& f, const Vec& g, const BoundarySpec& bc, const Grid1D& grid) {
    const std::size_t n = grid.n_nodes;
    const double h2 = grid.dx() * grid.dx();
    Vec out(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (f[i - 1] - 2.0 * f[i] + f[i + 1]) / h2;
    auto end_value = [&](std::size_t e, std::size_t nb, const BoundaryCondition& c) {
        switch (c.kind) {
            case BoundaryKind::Dirichlet0: return 0.0;
            case BoundaryKind::Neumann0: return (2.0 * f[nb] - 2.0 * f[e]) / h2;
            case BoundaryKind::Impedance:
                return (2.0 * f[nb] - 2.0 * f[e] -
                        2.0 * grid.dx() * (c.beta * g[e] + c.gamma * f[e])) /
                       h2;
        }
        return 0.0;
    };
    out[0] = end_value(0, 1, bc.left);
    out[n - 1] = end_value(n - 1, n - 2, bc.right);
    return out;
}

// ---------------------------------------------------------------------------
// Fractional damping bookkeeping: cached Laplacian frames plus the two
// weighted history sums the implicit step needs.
// ---------------------------------------------------------------------------

struct FracState {
    CaputoL1Kernel kernel;
    std::vector<Vec> lap_frames;

    FracState(double beta, double dt) : kernel(beta, dt) {}

    // derivative of the cached Laplacian history at its last frame
    Vec derivative_at_end() const {
        const std::size_t n = lap_frames.size() - 1;
        Vec d(lap_frames.front().size(), 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const double w = kernel.weight(k) * kernel.scale();
            const Vec& a = lap_frames[n - k];
            const Vec& b = lap_frames[n - k - 1];
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += w * (a[i] - b[i]);
        }
        return d;
    }

    // known part of the derivative at the upcoming frame n+1 (everything
    // except kernel.scale() * lap^{n+1})
    Vec history_for_next() const {
        const std::size_t n = lap_frames.size() - 1;
        Vec g(lap_frames.front().size());
        const double s = kernel.scale();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = -s * lap_frames[n][i];
        for (std::size_t j = 0; j + 1 <= n; ++j) {
            const double w = kernel.weight(j + 1) * s;
            const Vec& a = lap_frames[n - j];
            const Vec& b = lap_frames[n - j - 1];
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += w * (a[i] - b[i]);
        }
        return g;
    }
};

// ---------------------------------------------------------------------------
// PDE-consistent acceleration for the second-order members (also serves the
// degenerate tau=0 path of the third-order family). frac_term holds
// sf * D^beta(lap u) when fractional damping is active.
// ---------------------------------------------------------------------------

Vec acceleration(const Plan& p, const Vec& u, const Vec& v, const Vec& f, const Vec& frac_term,
                 const BoundarySpec& bc, const Grid1D& grid, double floor, double t) {
    const std::size_t n = grid.n_nodes;
    const double h = grid.dx();
    const double h2 = h * h;
    const Vec alpha = alpha_field(p.alpha_on_u ? u : v, p.kappa, floor, t);
    const Vec nl = nonlinear_rhs(p, u, v, grid);
    const Vec lu = lap_with_bc(u, v, bc, grid);

    Vec a(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double lv = (v[i - 1] - 2.0 * v[i] + v[i + 1]) / h2;
        a[i] = (p.su * lu[i] + p.sv * lv + frac_term[i] + nl[i] + f[i]) / alpha[i];
    }
    auto end_accel = [&](std::size_t e, std::size_t nb, const BoundaryCondition& c) {
        switch (c.kind) {
            case BoundaryKind::Dirichlet0: return 0.0;
            case BoundaryKind::Neumann0: {
                const double lv = (2.0 * v[nb] - 2.0 * v[e]) / h2;
                return (p.su * lu[e] + p.sv * lv + frac_term[e] + nl[e] + f[e]) / alpha[e];
            }
            case BoundaryKind::Impedance: {
                // the v-flux couples to the acceleration itself; solve the
                // scalar relation directly
                const double known =
                    p.su * lu[e] +
                    p.sv * (2.0 * v[nb] - 2.0 * v[e] - 2.0 * h * c.gamma * v[e]) / h2 +
                    frac_term[e] + nl[e] + f[e];
                return known / (alpha[e] + 2.0 * p.sv * c.beta / h);
            }
        }
        return 0.0;
    };
    a[0] = end_accel(0, 1, bc.left);
    a[n - 1] = end_accel(n - 1, n - 2, bc.right);
    return a;
}

// ---------------------------------------------------------------------------
// Shared implicit assembly. Each flux channel contributes S * lap(base +
// slope*z) to the right side of the update equation; impedance ends replace
// the one-sided flux by the affine ghost relation g0 + g1 * z_e.
// ---------------------------------------------------------------------------

struct Channel {
    double coef = 0.0;      // S
    const Vec* base = nullptr;
    double slope = 0.0;
    // impedance ghost: d_x(field) at the end equals ghost0 + ghost1 * z_e
    double ghost0_left = 0.0, ghost1_left = 0.0;
    double ghost0_right = 0.0, ghost1_right = 0.0;
};

struct Assembled {
    Tridiag<double> mat;
    Vec rhs;
};

// row_coef * z - sum_j S_j lap(base_j + slope_j z) = rhs_base  (PDE rows)
Assembled assemble(const std::vector<Channel>& channels, const Vec& row_coef, const Vec& rhs_base,
                   const BoundarySpec& bc, const Grid1D& grid) {
    const std::size_t n = grid.n_nodes;
    const double h = grid.dx();
    const double h2 = h * h;
    Assembled sys;
    sys.mat.sub.assign(n, 0.0);
    sys.mat.diag.assign(n, 0.0);
    sys.mat.sup.assign(n, 0.0);
    sys.rhs = rhs_base;

    double cz = 0.0;  // combined z-Laplacian coefficient
    for (const Channel& ch : channels) cz += ch.coef * ch.slope;

    for (std::size_t i = 1; i + 1 < n; ++i) {
        sys.mat.diag[i] = row_coef[i] + 2.0 * cz / h2;
        sys.mat.sub[i] = -cz / h2;
        sys.mat.sup[i] = -cz / h2;
        for (const Channel& ch : channels) {
            const Vec& b = *ch.base;
            sys.rhs[i] += ch.coef * (b[i - 1] - 2.0 * b[i] + b[i + 1]) / h2;
        }
    }

    auto end_row = [&](std::size_t e, std::size_t nb, const BoundaryCondition& c, bool left) {
        if (c.kind == BoundaryKind::Dirichlet0) {
            sys.mat.diag[e] = 1.0;
            if (e == 0)
                sys.mat.sup[e] = 0.0;
            else
                sys.mat.sub[e] = 0.0;
            sys.rhs[e] = 0.0;
            return;
        }
        double diag = row_coef[e];
        double off = 0.0;
        double rhs = rhs_base[e];
        for (const Channel& ch : channels) {
            const Vec& b = *ch.base;
            const double g0 = left ? ch.ghost0_left : ch.ghost0_right;
            const double g1 = left ? ch.ghost1_left : ch.ghost1_right;
            off += -2.0 * ch.coef * ch.slope / h2;
            diag += ch.coef * (2.0 * ch.slope + 2.0 * h * g1) / h2;
            rhs += ch.coef * (2.0 * b[nb] - 2.0 * b[e] - 2.0 * h * g0) / h2;
        }
        sys.mat.diag[e] = diag;
        if (e == 0)
            sys.mat.sup[e] = off;
        else
            sys.mat.sub[e] = off;
        sys.rhs[e] = rhs;
    };
    end_row(0, 1, bc.left, true);
    end_row(n - 1, n - 2, bc.right, false);
    return sys;
}

void zero_dirichlet_ends(Vec& f, const BoundarySpec& bc) {
    if (bc.left.kind == BoundaryKind::Dirichlet0) f.front() = 0.0;
    if (bc.right.kind == BoundaryKind::Dirichlet0) f.back() = 0.0;
}

double max_abs(const Vec& f) {
    double m = 0.0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
}

// ---------------------------------------------------------------------------
// Second-order members: implicit midpoint on (u, v).
// ---------------------------------------------------------------------------

FieldHistory run_second_order(const SimulationSetup& s, const Plan& p) {
    const Grid1D& grid = s.grid;
    const std::size_t nn = grid.n_nodes;
    const double dt = s.time.dt();
    const double floor = s.stepper.degeneracy_floor;

    Vec u = s.init.u0;
    Vec v = s.init.u1;
    zero_dirichlet_ends(u, s.bc);
    zero_dirichlet_ends(v, s.bc);

    std::optional<FracState> frac;
    if (p.frac) {
        frac.emplace(p.frac_beta, dt);
        frac->lap_frames.push_back(lap_with_bc(u, v, s.bc, grid));
    }

    FieldHistory hist(grid, s.time, equation_name(p.eq));
    hist.reserve(s.time.n_steps + 1);
    {
        Vec f0 = eval_source(s.source, grid, 0.0);
        Vec frac_term(nn, 0.0);  // fractional derivative vanishes at t = 0
        Vec a0 = acceleration(p, u, v, f0, frac_term, s.bc, grid, floor, 0.0);
        hist.push_frame(0.0, u, v, a0);
    }

    for (std::size_t n = 0; n < s.time.n_steps; ++n) {
        const double t_mid = s.time.t(n) + 0.5 * dt;
        const double t_new = s.time.t(n + 1);
        const Vec f_mid = eval_source(s.source, grid, t_mid);

        // affine pieces of the midpoint states in the unknown z = v^{n+1}
        Vec p_base(nn), r_base(nn);
        for (std::size_t i = 0; i < nn; ++i) {
            p_base[i] = u[i] + 0.25 * dt * v[i];  // u_mid = p_base + (dt/4) z
            r_base[i] = 0.5 * v[i];               // v_mid = r_base + (1/2) z
        }

        Vec frac_known;  // sf/2 (D_n + G_hist), entering the right side
        Vec frac_base;   // u^{n+1} known part, whose Laplacian is implicit
        if (p.frac) {
            const Vec dn = frac->derivative_at_end();
            const Vec gh = frac->history_for_next();
            frac_known.resize(nn);
            frac_base.resize(nn);
            for (std::size_t i = 0; i < nn; ++i) {
                frac_known[i] = 0.5 * p.sf * (dn[i] + gh[i]);
                frac_base[i] = u[i] + 0.5 * dt * v[i];
            }
        }

        Vec z = v;  // predictor
        bool converged = false;
        for (int it = 0; it < s.stepper.picard_max_iter; ++it) {
            Vec u_mid(nn), v_mid(nn);
            for (std::size_t i = 0; i < nn; ++i) {
                u_mid[i] = p_base[i] + 0.25 * dt * z[i];
                v_mid[i] = r_base[i] + 0.5 * z[i];
            }
            const Vec alpha = alpha_field(p.alpha_on_u ? u_mid : v_mid, p.kappa, floor, t_mid);
            const Vec nl = nonlinear_rhs(p, u_mid, v_mid, grid);

            Vec row_coef(nn), rhs_base(nn);
            for (std::size_t i = 0; i < nn; ++i) {
                row_coef[i] = alpha[i] / dt;
                rhs_base[i] = alpha[i] * v[i] / dt + nl[i] + f_mid[i];
                if (p.frac) rhs_base[i] += frac_known[i];
            }

            std::vector<Channel> channels;
            {
                Channel cu;  // c^2 lap(u_mid)
                cu.coef = p.su;
                cu.base = &p_base;
                cu.slope = 0.25 * dt;
                cu.ghost0_left = s.bc.left.beta * r_base[0] + s.bc.left.gamma * p_base[0];
                cu.ghost1_left = s.bc.left.beta * 0.5 + s.bc.left.gamma * 0.25 * dt;
                cu.ghost0_right =
                    s.bc.right.beta * r_base[nn - 1] + s.bc.right.gamma * p_base[nn - 1];
                cu.ghost1_right = s.bc.right.beta * 0.5 + s.bc.right.gamma * 0.25 * dt;
                channels.push_back(cu);
            }
            if (p.sv != 0.0) {
                Channel cv;  // b lap(v_mid); the impedance flux couples to the
                             // midpoint acceleration (z - v^n)/dt
                cv.coef = p.sv;
                cv.base = &r_base;
                cv.slope = 0.5;
                cv.ghost0_left = -s.bc.left.beta * v[0] / dt + s.bc.left.gamma * r_base[0];
                cv.ghost1_left = s.bc.left.beta / dt + s.bc.left.gamma * 0.5;
                cv.ghost0_right =
                    -s.bc.right.beta * v[nn - 1] / dt + s.bc.right.gamma * r_base[nn - 1];
                cv.ghost1_right = s.bc.right.beta / dt + s.bc.right.gamma * 0.5;
                channels.push_back(cv);
            }
            if (p.frac) {
                Channel cf;  // sf/2 * kernel scale * lap(u^{n+1})
                cf.coef = 0.5 * p.sf * frac->kernel.scale();
                cf.base = &frac_base;
                cf.slope = 0.5 * dt;
                channels.push_back(cf);
            }

            Assembled sys = assemble(channels, row_coef, rhs_base, s.bc, grid);
            Vec z_new = sys.mat.solve(sys.rhs);
            double eta = 0.0;
            for (std::size_t i = 0; i < nn; ++i) eta = std::max(eta, std::abs(z_new[i] - z[i]));
            z = std::move(z_new);
            if (eta <= s.stepper.picard_tol * max_abs(z) + 1e-300) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw PicardDivergence(
                "simulate: frozen-coefficient iteration did not converge at t=" +
                    std::to_string(t_new),
                t_new);

        Vec u_new(nn);
        for (std::size_t i = 0; i < nn; ++i) u_new[i] = u[i] + 0.5 * dt * (v[i] + z[i]);
        zero_dirichlet_ends(u_new, s.bc);
        zero_dirichlet_ends(z, s.bc);
        u = std::move(u_new);
        v = z;
        check_finite(u, t_new);
        check_finite(v, t_new);
        // committed state must stay clear of the degeneracy floor as well
        alpha_field(p.alpha_on_u ? u : v, p.kappa, floor, t_new);

        Vec frac_term(nn, 0.0);
        if (p.frac) {
            frac->lap_frames.push_back(lap_with_bc(u, v, s.bc, grid));
            const Vec d = frac->derivative_at_end();
            for (std::size_t i = 0; i < nn; ++i) frac_term[i] = p.sf * d[i];
        }
        const Vec f_new = eval_source(s.source, grid, t_new);
        Vec a = acceleration(p, u, v, f_new, frac_term, s.bc, grid, floor, t_new);
        hist.push_frame(t_new, u, v, a);
    }
    return hist;
}

// ---------------------------------------------------------------------------
// Third-order members, tau > 0: trapezoid rule on (psi, v, w).
// ---------------------------------------------------------------------------

FieldHistory run_third_order(const SimulationSetup& s, const Plan& p) {
    const Grid1D& grid = s.grid;
    const std::size_t nn = grid.n_nodes;
    const double dt = s.time.dt();
    const double floor = s.stepper.degeneracy_floor;

    Vec psi = s.init.u0;
    Vec v = s.init.u1;
    Vec w = *s.init.u2;
    zero_dirichlet_ends(psi, s.bc);
    zero_dirichlet_ends(v, s.bc);
    zero_dirichlet_ends(w, s.bc);

    FieldHistory hist(grid, s.time, equation_name(p.eq));
    hist.reserve(s.time.n_steps + 1);
    alpha_field(v, p.kappa, floor, 0.0);
    hist.push_frame(0.0, psi, v, w);

    Vec f_old = eval_source(s.source, grid, 0.0);
    for (std::size_t n = 0; n < s.time.n_steps; ++n) {
        const double t_new = s.time.t(n + 1);
        const Vec f_new = eval_source(s.source, grid, t_new);

        // old-side slope of the first-order system
        const Vec lap_psi = lap_with_bc(psi, v, s.bc, grid);
        const Vec lap_v = lap_with_bc(v, w, s.bc, grid);
        const Vec alpha_old = alpha_field(v, p.kappa, floor, s.time.t(n));
        const Vec nl_old = nonlinear_rhs(p, psi, v, grid);

        Vec p_base(nn), r_base(nn), known(nn);
        for (std::size_t i = 0; i < nn; ++i) {
            p_base[i] = psi[i] + dt * v[i] + 0.25 * dt * dt * w[i];
            r_base[i] = v[i] + 0.5 * dt * w[i];
            const double f_slope = p.su * lap_psi[i] + p.sv * lap_v[i] - alpha_old[i] * w[i] +
                                   nl_old[i] + f_old[i];
            known[i] = p.tau * w[i] / dt + 0.5 * f_slope + 0.5 * f_new[i];
        }

        Vec z = w;  // predictor for w^{n+1}
        bool converged = false;
        for (int it = 0; it < s.stepper.picard_max_iter; ++it) {
            Vec psi_it(nn), v_it(nn);
            for (std::size_t i = 0; i < nn; ++i) {
                psi_it[i] = p_base[i] + 0.25 * dt * dt * z[i];
                v_it[i] = r_base[i] + 0.5 * dt * z[i];
            }
            const Vec alpha = alpha_field(v_it, p.kappa, floor, t_new);
            const Vec nl = nonlinear_rhs(p, psi_it, v_it, grid);

            Vec row_coef(nn), rhs_base(nn);
            for (std::size_t i = 0; i < nn; ++i) {
                row_coef[i] = p.tau / dt + 0.5 * alpha[i];
                rhs_base[i] = known[i] + 0.5 * nl[i];
            }

            std::vector<Channel> channels;
            {
                Channel cp;  // (c^2/2) lap(psi^{n+1})
                cp.coef = 0.5 * p.su;
                cp.base = &p_base;
                cp.slope = 0.25 * dt * dt;
                cp.ghost0_left = s.bc.left.beta * r_base[0] + s.bc.left.gamma * p_base[0];
                cp.ghost1_left = s.bc.left.beta * 0.5 * dt + s.bc.left.gamma * 0.25 * dt * dt;
                cp.ghost0_right =
                    s.bc.right.beta * r_base[nn - 1] + s.bc.right.gamma * p_base[nn - 1];
                cp.ghost1_right = s.bc.right.beta * 0.5 * dt + s.bc.right.gamma * 0.25 * dt * dt;
                channels.push_back(cp);
            }
            {
                Channel cv;  // (b/2) lap(v^{n+1}); flux couples to w^{n+1} = z
                cv.coef = 0.5 * p.sv;
                cv.base = &r_base;
                cv.slope = 0.5 * dt;
                cv.ghost0_left = s.bc.left.gamma * r_base[0];
                cv.ghost1_left = s.bc.left.beta + s.bc.left.gamma * 0.5 * dt;
                cv.ghost0_right = s.bc.right.gamma * r_base[nn - 1];
                cv.ghost1_right = s.bc.right.beta + s.bc.right.gamma * 0.5 * dt;
                channels.push_back(cv);
            }

            Assembled sys = assemble(channels, row_coef, rhs_base, s.bc, grid);
            Vec z_new = sys.mat.solve(sys.rhs);
            double eta = 0.0;
            for (std::size_t i = 0; i < nn; ++i) eta = std::max(eta, std::abs(z_new[i] - z[i]));
            z = std::move(z_new);
            if (eta <= s.stepper.picard_tol * max_abs(z) + 1e-300) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw PicardDivergence(
                "simulate: frozen-coefficient iteration did not converge at t=" +
                    std::to_string(t_new),
                t_new);

        Vec psi_new(nn), v_new(nn);
        for (std::size_t i = 0; i < nn; ++i) {
            psi_new[i] = p_base[i] + 0.25 * dt * dt * z[i];
            v_new[i] = r_base[i] + 0.5 * dt * z[i];
        }
        zero_dirichlet_ends(psi_new, s.bc);
        zero_dirichlet_ends(v_new, s.bc);
        zero_dirichlet_ends(z, s.bc);
        psi = std::move(psi_new);
        v = std::move(v_new);
        w = z;
        check_finite(psi, t_new);
        check_finite(v, t_new);
        check_finite(w, t_new);
        hist.push_frame(t_new, psi, v, w);
        f_old = f_new;
    }
    return hist;
}

// ---------------------------------------------------------------------------
// Third-order members with tau == 0: the system degenerates to second order;
// advance (psi, v) with the trapezoid rule.
// ---------------------------------------------------------------------------

FieldHistory run_third_order_degenerate(const SimulationSetup& s, const Plan& p) {
    const Grid1D& grid = s.grid;
    const std::size_t nn = grid.n_nodes;
    const double dt = s.time.dt();
    const double floor = s.stepper.degeneracy_floor;

    Vec psi = s.init.u0;
    Vec v = s.init.u1;
    zero_dirichlet_ends(psi, s.bc);
    zero_dirichlet_ends(v, s.bc);

    FieldHistory hist(grid, s.time, equation_name(p.eq));
    hist.reserve(s.time.n_steps + 1);
    Vec f_old = eval_source(s.source, grid, 0.0);
    const Vec no_frac(nn, 0.0);
    Vec a = acceleration(p, psi, v, f_old, no_frac, s.bc, grid, floor, 0.0);
    hist.push_frame(0.0, psi, v, a);

    for (std::size_t n = 0; n < s.time.n_steps; ++n) {
        const double t_new = s.time.t(n + 1);
        const Vec f_new = eval_source(s.source, grid, t_new);

        Vec p_base(nn);
        for (std::size_t i = 0; i < nn; ++i) p_base[i] = psi[i] + 0.5 * dt * v[i];
        const Vec zero(nn, 0.0);

        Vec z = v;  // predictor for v^{n+1}
        bool converged = false;
        for (int it = 0; it < s.stepper.picard_max_iter; ++it) {
            Vec psi_it(nn);
            for (std::size_t i = 0; i < nn; ++i) psi_it[i] = p_base[i] + 0.5 * dt * z[i];
            const Vec alpha = alpha_field(z, p.kappa, floor, t_new);
            const Vec nl = nonlinear_rhs(p, psi_it, z, grid);

            Vec row_coef(nn), rhs_base(nn);
            for (std::size_t i = 0; i < nn; ++i) {
                row_coef[i] = alpha[i];
                rhs_base[i] =
                    alpha[i] * (v[i] + 0.5 * dt * a[i]) + 0.5 * dt * (nl[i] + f_new[i]);
            }

            std::vector<Channel> channels;
            {
                Channel cp;  // (dt/2) c^2 lap(psi^{n+1})
                cp.coef = 0.5 * dt * p.su;
                cp.base = &p_base;
                cp.slope = 0.5 * dt;
                cp.ghost0_left = s.bc.left.gamma * p_base[0];
                cp.ghost1_left = s.bc.left.beta + s.bc.left.gamma * 0.5 * dt;
                cp.ghost0_right = s.bc.right.gamma * p_base[nn - 1];
                cp.ghost1_right = s.bc.right.beta + s.bc.right.gamma * 0.5 * dt;
                channels.push_back(cp);
            }
            if (p.sv != 0.0) {
                Channel cv;  // (dt/2) b lap(v^{n+1}); flux couples to the new
                             // acceleration (2/dt)(z - v^n) - a^n
                cv.coef = 0.5 * dt * p.sv;
                cv.base = &zero;
                cv.slope = 1.0;
                cv.ghost0_left = -s.bc.left.beta * (2.0 / dt * v[0] + a[0]);
                cv.ghost1_left = 2.0 * s.bc.left.beta / dt + s.bc.left.gamma;
                cv.ghost0_right = -s.bc.right.beta * (2.0 / dt * v[nn - 1] + a[nn - 1]);
                cv.ghost1_right = 2.0 * s.bc.right.beta / dt + s.bc.right.gamma;
                channels.push_back(cv);
            }

            Assembled sys = assemble(channels, row_coef, rhs_base, s.bc, grid);
            Vec z_new = sys.mat.solve(sys.rhs);
            double eta = 0.0;
            for (std::size_t i = 0; i < nn; ++i) eta = std::max(eta, std::abs(z_new[i] - z[i]));
            z = std::move(z_new);
            if (eta <= s.stepper.picard_tol * max_abs(z) + 1e-300) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw PicardDivergence(
                "simulate: frozen-coefficient iteration did not converge at t=" +
                    std::to_string(t_new),
                t_new);

        Vec psi_new(nn);
        for (std::size_t i = 0; i < nn; ++i) psi_new[i] = p_base[i] + 0.5 * dt * z[i];
        zero_dirichlet_ends(psi_new, s.bc);
        zero_dirichlet_ends(z, s.bc);
        psi = std::move(psi_new);
        v = z;
        check_finite(psi, t_new);
        check_finite(v, t_new);
        a = acceleration(p, psi, v, f_new, no_frac, s.bc, grid, floor, t_new);
        hist.push_frame(t_new, psi, v, a);
        f_old = f_new;
    }
    return hist;
}

}  // namespace

FieldHistory simulate(const SimulationSetup& setup) {
    const Plan plan = make_plan(setup);
    // reject runs that start past the degeneracy floor before any stepping
    alpha_field(plan.alpha_on_u ? setup.init.u0 : setup.init.u1, plan.kappa,
                setup.stepper.degeneracy_floor, 0.0);
    if (!plan.third_order) return run_second_order(setup, plan);
    if (plan.tau > 0.0) return run_third_order(setup, plan);
    return run_third_order_degenerate(setup, plan);
}

std::vector<double> effective_wave_speed(const std::vector<double>& state, const Medium& medium,
                                         double degeneracy_floor) {
    if (!(degeneracy_floor > 0.0 && degeneracy_floor < 1.0))
        throw InvalidParameter("effective_wave_speed: floor must lie in (0,1)");
    std::vector<double> cs(state.size());
    for (std::size_t i = 0; i < state.size(); ++i) {
        const double a = 1.0 - medium.kappa * state[i];
        if (a < degeneracy_floor)
            throw DegeneracyError("effective_wave_speed: 1-kappa*state fell to " +
                                      std::to_string(a) + " at node " + std::to_string(i),
                                  0.0, i, a);
        cs[i] = medium.c / std::sqrt(a);
    }
    return cs;
}

PressureHistory pressure_from_potential(const FieldHistory& history, const Medium& medium) {
    if (medium.formulation != Formulation::Potential)
        throw InvalidParameter("pressure_from_potential: medium must use the potential formulation");
    PressureHistory ph;
    ph.times = history.times();
    ph.p.resize(history.n_frames());
    ph.p_t.resize(history.n_frames());
    for (std::size_t n = 0; n < history.n_frames(); ++n) {
        const std::size_t nn = history.u(n).size();
        ph.p[n].resize(nn);
        ph.p_t[n].resize(nn);
        for (std::size_t i = 0; i < nn; ++i) {
            ph.p[n][i] = medium.rho0 * history.ut(n)[i];
            ph.p_t[n][i] = medium.rho0 * history.utt(n)[i];
        }
    }
    return ph;
}

double wave_energy(const std::vector<double>& u, const std::vector<double>& ut,
                   const Grid1D& grid, double c) {
    if (u.size() != grid.n_nodes || ut.size() != grid.n_nodes)
        throw InvalidParameter("wave_energy: field size does not match grid");
    const double h = grid.dx();
    double kinetic = 0.0;
    for (double v : ut) kinetic += v * v;
    double gradient = 0.0;
    for (std::size_t i = 0; i + 1 < u.size(); ++i) {
        const double d = (u[i + 1] - u[i]) / h;
        gradient += d * d;
    }
    return 0.5 * h * kinetic + 0.5 * c * c * h * gradient;
}

}  // namespace nlac
