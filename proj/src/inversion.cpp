#include "nlac/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

namespace nlac {

namespace {

void validate_profile(const KappaProfile& p) {
    if (p.values.size() != p.breakpoints.size() + 1)
        throw InvalidParameter("kappa profile: need one more region value than breakpoints");
    for (std::size_t j = 0; j + 1 < p.breakpoints.size(); ++j)
        if (!(p.breakpoints[j] < p.breakpoints[j + 1]))
            throw InvalidParameter("kappa profile: breakpoints must be strictly ascending");
    for (double b : p.breakpoints)
        if (!std::isfinite(b)) throw InvalidParameter("kappa profile: non-finite breakpoint");
    for (double v : p.values)
        if (!std::isfinite(v)) throw InvalidParameter("kappa profile: non-finite region value");
}

void validate_setup(const ExperimentSetup& s) {
    if (s.sensor_nodes.empty()) throw InvalidParameter("experiment: no sensor nodes");
    for (std::size_t n : s.sensor_nodes)
        if (n >= s.grid.n_nodes) throw InvalidParameter("experiment: sensor node outside grid");
    if (s.n_harmonics < 1) throw InvalidParameter("experiment: need at least one harmonic");
}

HarmonicProblem problem_for(const ExperimentSetup& s, const std::vector<double>& nodal_kappa) {
    HarmonicProblem p;
    p.medium = s.medium;
    p.grid = s.grid;
    p.bc = s.bc;
    p.omega = s.omega;
    p.n_harmonics = s.n_harmonics;
    p.r_hat = s.r_hat;
    p.kappa = nodal_kappa;
    return p;
}

ObservationSet observe_stack(const ExperimentSetup& s, const HarmonicStack& stack) {
    ObservationSet obs;
    obs.n_harmonics = s.n_harmonics;
    obs.sensor_nodes = s.sensor_nodes;
    obs.values.assign(s.n_harmonics, std::vector<Cplx>(s.sensor_nodes.size()));
    for (std::size_t m = 0; m < s.n_harmonics; ++m)
        for (std::size_t k = 0; k < s.sensor_nodes.size(); ++k)
            obs.values[m][k] = stack.u[m][s.sensor_nodes[k]];
    return obs;
}

ObservationSet forward(const ExperimentSetup& s, const std::vector<double>& nodal_kappa) {
    const HarmonicProblem p = problem_for(s, nodal_kappa);
    const HarmonicStack stack = s.use_fixed_point ? solve_fixed_point(p) : solve_cascade(p);
    return observe_stack(s, stack);
}

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

// ---------------------------------------------------------------------------
// KappaProfile
// ---------------------------------------------------------------------------

double KappaProfile::value_at(double x) const {
    validate_profile(*this);
    const std::size_t region =
        std::upper_bound(breakpoints.begin(), breakpoints.end(), x) - breakpoints.begin();
    return values[region];
}

std::vector<double> KappaProfile::render(const Grid1D& grid) const {
    validate_profile(*this);
    std::vector<double> out(grid.n_nodes);
    for (std::size_t i = 0; i < grid.n_nodes; ++i) {
        const double x = grid.x(i);
        const std::size_t region =
            std::upper_bound(breakpoints.begin(), breakpoints.end(), x) - breakpoints.begin();
        out[i] = values[region];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Observations
// ---------------------------------------------------------------------------

ObservationSet predict_observations(const ExperimentSetup& setup, const KappaProfile& profile) {
    validate_setup(setup);
    return forward(setup, profile.render(setup.grid));
}

ObservationSet synthesize_observations(const ExperimentSetup& setup, const KappaProfile& truth,
                                       double noise_level, unsigned seed) {
    if (!(std::isfinite(noise_level) && noise_level >= 0.0))
        throw InvalidParameter("synthesize_observations: noise level must be nonnegative");
    ObservationSet obs = predict_observations(setup, truth);
    obs.noise_level = noise_level;
    obs.seed = seed;
    if (noise_level == 0.0) return obs;

    std::mt19937 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (auto& harmonic : obs.values) {
        double ms = 0.0;
        for (Cplx v : harmonic) ms += std::norm(v);
        const double rms = std::sqrt(ms / static_cast<double>(harmonic.size()));
        const double sigma = noise_level * rms / std::sqrt(2.0);
        for (Cplx& v : harmonic) {
            // draws are ordered harmonic-major, sensor-minor, Re before Im
            const double re = unit(rng);
            const double im = unit(rng);
            v += Cplx{sigma * re, sigma * im};
        }
    }
    return obs;
}

std::vector<double> stack_observations(const ObservationSet& obs) {
    std::vector<double> out;
    out.reserve(2 * obs.n_harmonics * obs.sensor_nodes.size());
    for (std::size_t m = 0; m < obs.n_harmonics; ++m)
        for (std::size_t k = 0; k < obs.sensor_nodes.size(); ++k) {
            out.push_back(obs.values[m][k].real());
            out.push_back(obs.values[m][k].imag());
        }
    return out;
}

// ---------------------------------------------------------------------------
// Jacobian of the stacked prediction
// ---------------------------------------------------------------------------

std::vector<double> jacobian_matrix(const ExperimentSetup& setup,
                                    const std::vector<double>& breakpoints,
                                    const std::vector<double>& kappa_regions, JacobianMode mode,
                                    double fd_step) {
    validate_setup(setup);
    KappaProfile profile{breakpoints, kappa_regions};
    validate_profile(profile);
    const std::size_t n_regions = kappa_regions.size();
    const std::size_t n_rows = 2 * setup.n_harmonics * setup.sensor_nodes.size();
    std::vector<double> jac(n_rows * n_regions, 0.0);

    if (mode == JacobianMode::FiniteDifference) {
        if (!(fd_step > 0.0)) throw InvalidParameter("jacobian: fd_step must be positive");
        double scale = std::abs(setup.medium.kappa);
        for (double v : kappa_regions) scale = std::max(scale, std::abs(v));
        if (scale == 0.0) scale = 1.0;
        for (std::size_t j = 0; j < n_regions; ++j) {
            const double h = fd_step * (std::abs(kappa_regions[j]) + scale);
            KappaProfile plus = profile, minus = profile;
            plus.values[j] += h;
            minus.values[j] -= h;
            const std::vector<double> fp = stack_observations(forward(setup, plus.render(setup.grid)));
            const std::vector<double> fm =
                stack_observations(forward(setup, minus.render(setup.grid)));
            for (std::size_t r = 0; r < n_rows; ++r)
                jac[r * n_regions + j] = (fp[r] - fm[r]) / (2.0 * h);
        }
        return jac;
    }

    // Linearized sequential sweep: u_1 does not depend on kappa; each higher
    // harmonic picks up one explicit term (the region indicator against the
    // lower-harmonic coupling) plus the chain through the already linearized
    // lower harmonics.
    const std::vector<double> kap = profile.render(setup.grid);
    const HarmonicProblem base = problem_for(setup, kap);
    const HarmonicStack stack = solve_cascade(base);
    const std::size_t nn = setup.grid.n_nodes;

    std::vector<HelmholtzOp1D> ops;
    ops.reserve(setup.n_harmonics);
    for (std::size_t m = 1; m <= setup.n_harmonics; ++m)
        ops.emplace_back(setup.grid, setup.medium, setup.omega, static_cast<int>(m), setup.bc);

    for (std::size_t j = 0; j < n_regions; ++j) {
        std::vector<double> indicator(nn, 0.0);
        {
            KappaProfile probe = profile;
            for (double& v : probe.values) v = 0.0;
            probe.values[j] = 1.0;
            indicator = probe.render(setup.grid);
        }
        std::vector<std::vector<Cplx>> du(setup.n_harmonics,
                                          std::vector<Cplx>(nn, Cplx{0.0, 0.0}));
        for (std::size_t m = 2; m <= setup.n_harmonics; ++m) {
            const std::vector<Cplx> cm = bm_convolution(stack.u, m, BmMode::Truncated);
            // d(c_m) = 2 sum_{l<m} u_{m-l} du_l
            std::vector<Cplx> dcm(nn, Cplx{0.0, 0.0});
            for (std::size_t l = 1; l + 1 <= m; ++l)
                for (std::size_t i = 0; i < nn; ++i)
                    dcm[i] += 2.0 * stack.u[m - l - 1][i] * du[l - 1][i];
            const double w2m2 = setup.omega * setup.omega * static_cast<double>(m * m);
            std::vector<Cplx> rhs(nn);
            for (std::size_t i = 0; i < nn; ++i)
                rhs[i] = -0.5 * w2m2 * (indicator[i] * cm[i] + kap[i] * dcm[i]);
            du[m - 1] = ops[m - 1].solve(rhs);
        }
        for (std::size_t m = 0; m < setup.n_harmonics; ++m)
            for (std::size_t k = 0; k < setup.sensor_nodes.size(); ++k) {
                const Cplx d = du[m][setup.sensor_nodes[k]];
                const std::size_t row = 2 * (m * setup.sensor_nodes.size() + k);
                jac[row * n_regions + j] = d.real();
                jac[(row + 1) * n_regions + j] = d.imag();
            }
    }
    return jac;
}

// ---------------------------------------------------------------------------
// Regularized Gauss-Newton
// ---------------------------------------------------------------------------

InversionResult recover_kappa(const ExperimentSetup& setup, const ObservationSet& data,
                              const std::vector<double>& breakpoints,
                              const std::vector<double>& kappa_init,
                              const GaussNewtonOptions& opt) {
    validate_setup(setup);
    if (data.n_harmonics != setup.n_harmonics)
        throw InvalidParameter("recover_kappa: data harmonic count does not match the setup");
    if (data.sensor_nodes != setup.sensor_nodes)
        throw InvalidParameter("recover_kappa: data sensors do not match the setup");
    if (kappa_init.size() != breakpoints.size() + 1)
        throw InvalidParameter("recover_kappa: initial guess size does not match regions");
    if (!(opt.reg_lambda_scale >= 0.0) || opt.max_outer < 1 || !(opt.tol_update > 0.0) ||
        !(opt.armijo_c1 > 0.0 && opt.armijo_c1 < 1.0) || opt.max_line_search < 1 ||
        !(opt.discrepancy_tau >= 1.0) || !(opt.noise_norm >= 0.0))
        throw InvalidParameter("recover_kappa: invalid options");

    const std::size_t n_regions = kappa_init.size();
    const std::size_t n_rows = 2 * setup.n_harmonics * setup.sensor_nodes.size();
    const std::vector<double> y = stack_observations(data);

    auto predict_stacked = [&](const std::vector<double>& regions) {
        KappaProfile p{breakpoints, regions};
        return stack_observations(forward(setup, p.render(setup.grid)));
    };
    auto residual_of = [&](const std::vector<double>& pred) {
        Eigen::VectorXd r(n_rows);
        for (std::size_t i = 0; i < n_rows; ++i) r[i] = y[i] - pred[i];
        return r;
    };

    InversionResult result;
    result.kappa = kappa_init;
    std::vector<double> pred = predict_stacked(result.kappa);
    Eigen::VectorXd r = residual_of(pred);
    double resid = r.norm();
    const double target = opt.discrepancy_tau * opt.noise_norm;
    double lambda_scale = opt.reg_lambda_scale;

    for (int iter = 1; iter <= opt.max_outer; ++iter) {
        if (opt.noise_norm > 0.0 && resid <= target) {
            result.status = GnStatus::DiscrepancyReached;
            result.final_residual = resid;
            return result;
        }

        const std::vector<double> jac =
            jacobian_matrix(setup, breakpoints, result.kappa, opt.jacobian, opt.fd_step);
        Eigen::Map<const RowMajor> J(jac.data(), static_cast<Eigen::Index>(n_rows),
                                     static_cast<Eigen::Index>(n_regions));
        const Eigen::MatrixXd normal = J.transpose() * J;
        const Eigen::VectorXd g = J.transpose() * r;
        const double lambda =
            lambda_scale * normal.trace() / static_cast<double>(n_regions);
        Eigen::MatrixXd A = normal;
        A.diagonal().array() += lambda;
        Eigen::LLT<Eigen::MatrixXd> llt(A);
        if (llt.info() != Eigen::Success)
            throw IllConditioned(
                "recover_kappa: normal system is numerically singular; raise "
                "reg_lambda_scale or merge insensitive regions");
        const Eigen::VectorXd h = llt.solve(g);

        const double slope = g.dot(h);  // positive for an SPD system
        const double phi0 = 0.5 * resid * resid;
        double t = 1.0;
        bool accepted = false;
        std::vector<double> cand;
        std::vector<double> cand_pred;
        double cand_resid = resid;
        for (int ls = 0; ls < opt.max_line_search; ++ls) {
            cand = result.kappa;
            for (std::size_t j = 0; j < n_regions; ++j) cand[j] += t * h[static_cast<Eigen::Index>(j)];
            cand_pred = predict_stacked(cand);
            const double phi = 0.5 * residual_of(cand_pred).squaredNorm();
            if (phi <= phi0 - opt.armijo_c1 * t * slope) {
                accepted = true;
                cand_resid = std::sqrt(2.0 * phi);
                break;
            }
            t *= 0.5;
        }

        if (!accepted) {
            // no usable step along this direction; soften the regularization
            lambda_scale = std::max(lambda_scale * 0.5, 1e-16);
            result.trace.push_back({iter, resid, lambda, 0.0});
            continue;
        }

        const double step_norm = t * h.norm();
        const double prev_resid = resid;
        result.kappa = cand;
        pred = std::move(cand_pred);
        r = residual_of(pred);
        resid = cand_resid;
        result.trace.push_back({iter, resid, lambda, step_norm});

        double scale = 0.0;
        for (double v : result.kappa) scale = std::max(scale, std::abs(v));
        if (step_norm <= opt.tol_update * (scale + 1e-300)) {
            result.status = GnStatus::SmallUpdate;
            result.final_residual = resid;
            return result;
        }
        // slow progress above the noise floor: soften the regularization
        if (resid > target && resid > 0.99 * prev_resid)
            lambda_scale = std::max(lambda_scale * 0.5, 1e-16);
    }

    if (opt.noise_norm > 0.0 && resid <= target)
        result.status = GnStatus::DiscrepancyReached;
    else
        result.status = GnStatus::MaxIterations;
    result.final_residual = resid;
    return result;
}

}  // namespace nlac
