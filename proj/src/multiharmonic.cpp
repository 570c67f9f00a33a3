#include "nlac/multiharmonic.hpp"

#include <algorithm>
#include <cmath>

namespace nlac {

namespace {

constexpr Cplx kImagUnit{0.0, 1.0};

void validate_problem(const HarmonicProblem& p) {
    if (!(std::isfinite(p.omega) && p.omega > 0.0))
        throw InvalidParameter("harmonics: omega must be positive");
    if (p.n_harmonics < 1) throw InvalidParameter("harmonics: need at least one harmonic");
    if (p.grid.n_nodes < 4) throw InvalidParameter("harmonics: grid needs >= 4 nodes");
    if (p.medium.formulation != Formulation::Pressure)
        throw InvalidParameter("harmonics: the periodic expansion acts on the pressure form");
    if (p.r_hat.size() != p.grid.n_nodes)
        throw InvalidParameter("harmonics: source envelope size does not match grid");
    if (!p.kappa.empty() && p.kappa.size() != p.grid.n_nodes)
        throw InvalidParameter("harmonics: nodal kappa size does not match grid");
}

std::vector<double> nodal_kappa(const HarmonicProblem& p) {
    if (!p.kappa.empty()) return p.kappa;
    return std::vector<double>(p.grid.n_nodes, p.medium.kappa);
}

double stack_max_abs(const std::vector<std::vector<Cplx>>& u) {
    double m = 0.0;
    for (const auto& h : u)
        for (Cplx v : h) m = std::max(m, std::abs(v));
    return m;
}

// One relaxed update sweep is shared by the cascade (theta = 1, Truncated,
// zero start) and the self-consistent iteration.
std::vector<std::vector<Cplx>> sweep_once(const HarmonicProblem& p,
                                          const std::vector<HelmholtzOp1D>& ops,
                                          const std::vector<double>& kap,
                                          const std::vector<std::vector<Cplx>>& current,
                                          BmMode mode) {
    const std::size_t nn = p.grid.n_nodes;
    std::vector<std::vector<Cplx>> next = current;
    for (std::size_t m = 1; m <= p.n_harmonics; ++m) {
        // In a sequential sweep the lower harmonics in `next` are already
        // refreshed, which is exactly what the cascade wants.
        const std::vector<Cplx> cm = bm_convolution(next, m, mode);
        std::vector<Cplx> rhs(nn, Cplx{0.0, 0.0});
        const double w2m2 = p.omega * p.omega * static_cast<double>(m * m);
        for (std::size_t i = 0; i < nn; ++i) {
            rhs[i] = -0.5 * kap[i] * w2m2 * cm[i];
            if (m == 1) rhs[i] += 0.5 * p.r_hat[i];
        }
        next[m - 1] = ops[m - 1].solve(rhs);
    }
    return next;
}

}  // namespace

// ---------------------------------------------------------------------------
// HelmholtzOp1D
// ---------------------------------------------------------------------------

HelmholtzOp1D::HelmholtzOp1D(const Grid1D& grid, const Medium& medium, double omega, int m,
                             const BoundarySpec& bc) {
    if (!(std::isfinite(omega) && omega > 0.0) || m < 1)
        throw InvalidParameter("helmholtz: need omega > 0 and harmonic index >= 1");
    if (grid.n_nodes < 4) throw InvalidParameter("helmholtz: grid needs >= 4 nodes");
    const std::size_t n = grid.n_nodes;
    const double h = grid.dx();
    const double h2 = h * h;
    const double wm = omega * static_cast<double>(m);
    const Cplx s = medium.c * medium.c + kImagUnit * wm * medium.delta;
    const Cplx mass = -wm * wm;

    mat_.sub.assign(n, Cplx{0.0, 0.0});
    mat_.diag.assign(n, Cplx{0.0, 0.0});
    mat_.sup.assign(n, Cplx{0.0, 0.0});
    for (std::size_t i = 1; i + 1 < n; ++i) {
        mat_.diag[i] = mass + 2.0 * s / h2;
        mat_.sub[i] = -s / h2;
        mat_.sup[i] = -s / h2;
    }
    auto end_row = [&](std::size_t e, bool left, const BoundaryCondition& c, bool& dir_flag) {
        if (c.kind == BoundaryKind::Dirichlet0) {
            mat_.diag[e] = 1.0;
            dir_flag = true;
            return;
        }
        const Cplx robin = kImagUnit * wm * c.beta + c.gamma;
        mat_.diag[e] = mass + 2.0 * s / h2 + 2.0 * s * robin / h;
        if (left)
            mat_.sup[e] = -2.0 * s / h2;
        else
            mat_.sub[e] = -2.0 * s / h2;
    };
    end_row(0, true, bc.left, left_dirichlet_);
    end_row(n - 1, false, bc.right, right_dirichlet_);
}

std::vector<Cplx> HelmholtzOp1D::solve(const std::vector<Cplx>& rhs) const {
    if (rhs.size() != mat_.diag.size())
        throw InvalidParameter("helmholtz: right side size does not match grid");
    std::vector<Cplx> b = rhs;
    if (left_dirichlet_) b.front() = Cplx{0.0, 0.0};
    if (right_dirichlet_) b.back() = Cplx{0.0, 0.0};
    return mat_.solve(b);
}

std::vector<Cplx> HelmholtzOp1D::apply(const std::vector<Cplx>& u) const { return mat_.apply(u); }

// ---------------------------------------------------------------------------
// Quadratic coupling coefficients
// ---------------------------------------------------------------------------

std::vector<Cplx> bm_convolution(const std::vector<std::vector<Cplx>>& u, std::size_t m,
                                 BmMode mode) {
    if (m < 1 || u.empty()) throw InvalidParameter("bm_convolution: bad harmonic index");
    const std::size_t M = u.size();
    const std::size_t nn = u.front().size();
    for (const auto& h : u)
        if (h.size() != nn) throw InvalidParameter("bm_convolution: ragged harmonic stack");
    std::vector<Cplx> c(nn, Cplx{0.0, 0.0});
    for (std::size_t l = 1; l + 1 <= m && l <= M; ++l) {
        const std::size_t r = m - l;
        if (r < 1 || r > M) continue;
        for (std::size_t i = 0; i < nn; ++i) c[i] += u[l - 1][i] * u[r - 1][i];
    }
    if (mode == BmMode::Full) {
        for (std::size_t j = 1; j + m <= M; ++j)
            for (std::size_t i = 0; i < nn; ++i)
                c[i] += 2.0 * std::conj(u[j - 1][i]) * u[j + m - 1][i];
    }
    return c;
}

// ---------------------------------------------------------------------------
// Solvers
// ---------------------------------------------------------------------------

HarmonicStack solve_cascade(const HarmonicProblem& p) {
    validate_problem(p);
    const std::vector<double> kap = nodal_kappa(p);
    std::vector<HelmholtzOp1D> ops;
    ops.reserve(p.n_harmonics);
    for (std::size_t m = 1; m <= p.n_harmonics; ++m)
        ops.emplace_back(p.grid, p.medium, p.omega, static_cast<int>(m), p.bc);

    std::vector<std::vector<Cplx>> zero(p.n_harmonics,
                                        std::vector<Cplx>(p.grid.n_nodes, Cplx{0.0, 0.0}));
    HarmonicStack stack;
    stack.omega = p.omega;
    stack.grid = p.grid;
    stack.u = sweep_once(p, ops, kap, zero, BmMode::Truncated);
    return stack;
}

HarmonicStack solve_fixed_point(const HarmonicProblem& p, const FixedPointOptions& opt,
                                FixedPointReport* report) {
    validate_problem(p);
    if (!(opt.theta > 0.0 && opt.theta <= 1.0))
        throw InvalidParameter("harmonics: relaxation weight must lie in (0,1]");
    if (!(opt.tol > 0.0) || opt.max_iter < 1)
        throw InvalidParameter("harmonics: invalid iteration controls");

    const std::vector<double> kap = nodal_kappa(p);
    std::vector<HelmholtzOp1D> ops;
    ops.reserve(p.n_harmonics);
    for (std::size_t m = 1; m <= p.n_harmonics; ++m)
        ops.emplace_back(p.grid, p.medium, p.omega, static_cast<int>(m), p.bc);

    HarmonicStack stack = solve_cascade(p);  // warm start
    const double scale0 = stack_max_abs(stack.u) + 1e-300;

    int it = 0;
    double diff = 0.0;
    for (it = 1; it <= opt.max_iter; ++it) {
        // Jacobi-style refresh (coupling evaluated at the current iterate)
        std::vector<std::vector<Cplx>> cand(p.n_harmonics);
        const std::size_t nn = p.grid.n_nodes;
        for (std::size_t m = 1; m <= p.n_harmonics; ++m) {
            const std::vector<Cplx> cm = bm_convolution(stack.u, m, opt.mode);
            std::vector<Cplx> rhs(nn, Cplx{0.0, 0.0});
            const double w2m2 = p.omega * p.omega * static_cast<double>(m * m);
            for (std::size_t i = 0; i < nn; ++i) {
                rhs[i] = -0.5 * kap[i] * w2m2 * cm[i];
                if (m == 1) rhs[i] += 0.5 * p.r_hat[i];
            }
            cand[m - 1] = ops[m - 1].solve(rhs);
        }

        diff = 0.0;
        double scale = 0.0;
        for (std::size_t m = 0; m < p.n_harmonics; ++m)
            for (std::size_t i = 0; i < p.grid.n_nodes; ++i) {
                diff = std::max(diff, std::abs(cand[m][i] - stack.u[m][i]));
                scale = std::max(scale, std::abs(cand[m][i]));
            }
        if (!std::isfinite(diff) || scale > 1e6 * scale0 + 1e6)
            throw NonContraction("harmonics: self-consistent iteration blew up at sweep " +
                                 std::to_string(it));

        for (std::size_t m = 0; m < p.n_harmonics; ++m)
            for (std::size_t i = 0; i < p.grid.n_nodes; ++i)
                stack.u[m][i] = (1.0 - opt.theta) * stack.u[m][i] + opt.theta * cand[m][i];

        if (diff <= opt.tol * (scale + 1e-300)) {
            if (report) {
                report->iterations = it;
                report->final_update = diff;
            }
            return stack;
        }
    }
    throw NonContraction("harmonics: self-consistent iteration did not settle in " +
                         std::to_string(opt.max_iter) + " sweeps (last update " +
                         std::to_string(diff) + ")");
}

// ---------------------------------------------------------------------------
// Time reconstruction and sampling
// ---------------------------------------------------------------------------

double reconstruct_time_signal(const HarmonicStack& stack, std::size_t node, double t) {
    if (stack.u.empty() || node >= stack.u.front().size())
        throw InvalidParameter("reconstruct_time_signal: node outside grid");
    double acc = 0.0;
    for (std::size_t m = 1; m <= stack.u.size(); ++m) {
        const Cplx phase =
            std::exp(kImagUnit * (stack.omega * static_cast<double>(m) * t));
        acc += 2.0 * std::real(stack.u[m - 1][node] * phase);
    }
    return acc;
}

Cplx dft_harmonic(const std::vector<double>& samples, const std::vector<double>& times,
                  double omega, int m) {
    if (samples.size() != times.size() || samples.empty())
        throw InvalidParameter("dft_harmonic: samples and times must match and be nonempty");
    if (m < 0) throw InvalidParameter("dft_harmonic: harmonic index must be nonnegative");
    Cplx acc{0.0, 0.0};
    for (std::size_t j = 0; j < samples.size(); ++j) {
        const Cplx phase =
            std::exp(-kImagUnit * (omega * static_cast<double>(m) * times[j]));
        acc += samples[j] * phase;
    }
    return 2.0 * acc / static_cast<double>(samples.size());
}

}  // namespace nlac
