// Acceptance checks: end-to-end behavior of the toolkit with pinned
// tolerances. One line per criterion; the process exits nonzero when any
// criterion fails.

#include <chrono>
#include <cmath>
#include <complex>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nlac/asymptotics.hpp"
#include "nlac/fracderiv.hpp"
#include "nlac/inversion.hpp"
#include "nlac/multiharmonic.hpp"
#include "nlac/timedomain.hpp"

using namespace nlac;

namespace {

struct Criterion {
    bool ok = true;
    std::ostringstream detail;

    void expect(bool cond, const std::string& msg) {
        if (!cond) {
            ok = false;
            if (!failures.empty()) failures += "; ";
            failures += msg;
        }
    }
    std::string failures;
};

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(3) << std::scientific << v;
    return s.str();
}

double elapsed_s(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// shared forced-tone runs (criteria 4 and 5)
// ---------------------------------------------------------------------------

constexpr double kToneFreq = 37500.0;
constexpr double kToneAmp = 3e15;
constexpr std::size_t kStepsPerPeriod = 160;
constexpr std::size_t kPeriods = 16;
constexpr std::size_t kMeasurePeriods = 4;

struct ToneSpectrum {
    Cplx c1, c2;
};

ToneSpectrum run_tone(double b_over_a, double amp) {
    const Medium med = Medium::make(1000.0, 1500.0, 6e-9, b_over_a, 0.0, Formulation::Pressure);
    const Grid1D g(0.2, 801);
    const double omega = 2.0 * M_PI * kToneFreq;
    const std::size_t n_steps = kPeriods * kStepsPerPeriod;
    const TimeAxis ax(static_cast<double>(kPeriods) / kToneFreq, n_steps);

    SimulationSetup s;
    s.model.equation = Equation::Westervelt;
    s.model.damping = Damping::from_medium();
    s.medium = med;
    s.grid = g;
    s.time = ax;
    s.bc = BoundarySpec::absorbing(med.c);
    s.init.u0.assign(g.n_nodes, 0.0);
    s.init.u1.assign(g.n_nodes, 0.0);
    const double t_ramp = 2.0 / kToneFreq;
    s.source = [omega, amp, t_ramp](double x, double t) {
        const double env = std::exp(-0.5 * std::pow((x - 0.04) / 0.01, 2.0));
        const double gate = t >= t_ramp ? 1.0 : 0.5 * (1.0 - std::cos(M_PI * t / t_ramp));
        return amp * env * gate * std::sin(omega * t);
    };

    const FieldHistory h = simulate(s);
    const std::size_t sensor = g.nearest_node(0.12);
    const std::size_t start = n_steps - kMeasurePeriods * kStepsPerPeriod;
    std::vector<double> samples, times;
    for (std::size_t n = start; n < n_steps; ++n) {
        samples.push_back(h.u(n)[sensor]);
        times.push_back(h.t(n));
    }
    return {dft_harmonic(samples, times, omega, 1), dft_harmonic(samples, times, omega, 2)};
}

struct ToneCache {
    ToneSpectrum baseline;   // no quadratic coupling, drive amp
    ToneSpectrum nonlinear;  // water coupling, drive amp
    ToneSpectrum nonlinear4; // water coupling, 4x drive amp
};

const ToneCache& tone_cache() {
    static std::optional<ToneCache> cache;
    if (!cache) {
        ToneCache c;
        c.baseline = run_tone(-2.0, kToneAmp);  // B/2A = -1 cancels the coupling
        c.nonlinear = run_tone(5.0, kToneAmp);
        c.nonlinear4 = run_tone(5.0, 4.0 * kToneAmp);
        cache = c;
    }
    return *cache;
}

// shared measurement model (criteria 7 and 8); driven hard enough that the
// coupled lines carry real weight in the stacked data norm
constexpr double kInversionAmp = 2e18;

ExperimentSetup standard_experiment() {
    ExperimentSetup s;
    s.medium = Medium::water(Formulation::Pressure);
    s.grid = Grid1D(0.2, 401);
    s.bc = BoundarySpec::absorbing(s.medium.c);
    s.omega = 2.0 * M_PI * kToneFreq;
    s.n_harmonics = 3;
    s.r_hat.assign(s.grid.n_nodes, Cplx{0.0, 0.0});
    for (std::size_t i = 0; i < s.grid.n_nodes; ++i) {
        const double x = s.grid.x(i);
        s.r_hat[i] = kInversionAmp * std::exp(-0.5 * std::pow((x - 0.04) / 0.01, 2.0));
    }
    for (double xs : {0.12, 0.14, 0.16, 0.18}) s.sensor_nodes.push_back(s.grid.nearest_node(xs));
    return s;
}

double stack_norm(const ObservationSet& obs) {
    double acc = 0.0;
    for (double v : stack_observations(obs)) acc += v * v;
    return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

void criterion_relaxation_sweep(Criterion& c) {
    const auto t0 = std::chrono::steady_clock::now();
    SweepConfig cfg;
    cfg.parameter = SweepParameter::Tau;
    cfg.base.model.equation = Equation::JmgtWestervelt;
    cfg.base.medium = Medium::make(1.0, 1.0, 0.01, 1.0, 0.0, Formulation::Potential);
    cfg.base.grid = Grid1D(1.0, 101);
    cfg.base.time = TimeAxis(0.3, 300);
    cfg.base.init.u0.assign(cfg.base.grid.n_nodes, 0.0);
    cfg.base.init.u1 = gaussian_pulse(cfg.base.grid, 0.2, 0.5, 0.1);
    cfg.base.init.u2 = std::vector<double>(cfg.base.grid.n_nodes, 0.0);
    cfg.values = {4e-3, 2e-3, 1e-3, 5e-4};

    const SweepResult res = run_sweep(cfg);
    const double secs = elapsed_s(t0);

    c.expect(res.rows.size() == 4, "expected four sweep rows");
    c.expect(res.monotone_c_h1, "errors are not strictly decreasing");
    c.expect(res.rows.back().rel_c_h1 < 0.01,
             "smallest relaxation time misses the 1% target (" +
                 fmt(res.rows.back().rel_c_h1) + ")");
    c.expect(secs < 120.0, "sweep exceeded the two-minute budget");
    c.detail << "rel errors";
    for (const SweepRow& r : res.rows) c.detail << " " << fmt(r.rel_c_h1);
    c.detail << ", " << std::fixed << std::setprecision(1) << secs << " s";
}

void criterion_memory_kernel_rates(Criterion& c) {
    bool constants_zero = true;
    double worst_linear = 0.0;
    std::ostringstream rates;
    for (double alpha : {0.25, 0.5, 0.75}) {
        // constants map to exactly zero
        {
            const std::size_t n = 40;
            const std::vector<double> series(n + 1, 3.25);
            const std::vector<double> d = caputo_l1(series, alpha, 0.025);
            for (double v : d)
                if (v != 0.0) constants_zero = false;
        }
        // first power lands on the closed form at every node
        {
            const double dt = 1.0 / 64.0;
            std::vector<double> series(65);
            for (std::size_t i = 0; i < series.size(); ++i)
                series[i] = dt * static_cast<double>(i);
            const std::vector<double> d = caputo_l1(series, alpha, dt);
            for (std::size_t i = 1; i < series.size(); ++i) {
                const double t = dt * static_cast<double>(i);
                const double want = std::pow(t, 1.0 - alpha) / std::tgamma(2.0 - alpha);
                worst_linear = std::max(worst_linear, std::abs(d[i] - want));
            }
        }
        // second power converges at order 2 - alpha across four refinements;
        // the observed order approaches the target from below with a dt^alpha
        // deficit, so extrapolate that geometric tail out of the sequence
        std::vector<double> errs;
        for (std::size_t n : {1024, 2048, 4096, 8192}) {
            const double dt = 1.0 / static_cast<double>(n);
            std::vector<double> series(n + 1);
            for (std::size_t i = 0; i <= n; ++i) {
                const double t = dt * static_cast<double>(i);
                series[i] = t * t;
            }
            const std::vector<double> d = caputo_l1(series, alpha, dt);
            errs.push_back(std::abs(d[n] - 2.0 / std::tgamma(3.0 - alpha)));
        }
        std::vector<double> obs;
        for (std::size_t k = 0; k + 1 < errs.size(); ++k)
            obs.push_back(std::log2(errs[k] / errs[k + 1]));
        const double target = 2.0 - alpha;
        c.expect(obs[0] < obs[1] && obs[1] < obs[2],
                 "order " + fmt(alpha) + ": observed rates do not climb toward " +
                     fmt(target));
        c.expect(std::abs(obs.back() - target) <= 0.05,
                 "order " + fmt(alpha) + " finest observed rate " + fmt(obs.back()) +
                     " is not near " + fmt(target));
        const double rho = std::pow(2.0, -alpha);
        const double extrap = obs[2] + (obs[2] - obs[1]) * rho / (1.0 - rho);
        rates << " " << std::setprecision(4) << extrap << "(" << target << ")";
        c.expect(extrap >= target - 0.005,
                 "order " + fmt(alpha) + " extrapolates to rate " + fmt(extrap) +
                     ", below the target " + fmt(target));
    }
    c.expect(constants_zero, "constants do not map to exactly zero");
    c.expect(worst_linear <= 1e-12,
             "first-power identity off by " + fmt(worst_linear));
    c.detail << "linear id err " << fmt(worst_linear) << ", rates(target)" << rates.str();
}

void criterion_sign_structure(Criterion& c) {
    std::mt19937 rng(20260819);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    double worst_margin = 0.0, worst_coercivity = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const double alpha = 0.05 + 0.9 * static_cast<double>(trial % 19) / 18.0;
        const double dt = 0.02;
        std::vector<double> w(65);
        for (double& v : w) v = U(rng);
        const ChainRuleReport r = check_chain_rule_inequality(w, alpha, dt);
        c.expect(r.min_margin >= -1e-12 * r.max_abs_sq,
                 "product-rule margin " + fmt(r.min_margin) + " at trial " +
                     std::to_string(trial));
        worst_margin = std::min(worst_margin, r.min_margin / (r.max_abs_sq + 1e-300));
        const CoercivityReport k = check_abel_coercivity(w, alpha, dt);
        c.expect(k.value >= -1e-12 * k.series_norm_sq,
                 "memory form " + fmt(k.value) + " at trial " + std::to_string(trial));
        worst_coercivity = std::min(worst_coercivity, k.value / (k.series_norm_sq + 1e-300));
    }
    c.detail << "1000 series, worst margins " << fmt(worst_margin) << " / "
             << fmt(worst_coercivity);
}

void criterion_second_harmonic_generation(Criterion& c) {
    const ToneCache& t = tone_cache();
    const double base2 = std::abs(t.baseline.c2);
    const double nl2 = std::abs(t.nonlinear.c2);
    const double nl2_big = std::abs(t.nonlinear4.c2);

    c.expect(nl2 > 10.0 * base2,
             "doubled-frequency line only " + fmt(nl2) + " vs baseline " + fmt(base2));
    const double growth = nl2_big / nl2;
    c.expect(std::abs(growth - 16.0) <= 0.15 * 16.0,
             "factor-4 drive ramp grew the doubled line by " + fmt(growth) +
                 " instead of ~16");
    c.detail << "|2f0| " << fmt(nl2) << ", baseline " << fmt(base2) << ", ramp growth "
             << std::setprecision(4) << growth;
}

void criterion_frequency_time_consistency(Criterion& c) {
    const ToneCache& t = tone_cache();

    HarmonicProblem p;
    p.medium = Medium::make(1000.0, 1500.0, 6e-9, 5.0, 0.0, Formulation::Pressure);
    p.grid = Grid1D(0.2, 801);
    p.bc = BoundarySpec::absorbing(p.medium.c);
    p.omega = 2.0 * M_PI * kToneFreq;
    p.n_harmonics = 2;
    p.r_hat.assign(p.grid.n_nodes, Cplx{0.0, 0.0});
    for (std::size_t i = 0; i < p.grid.n_nodes; ++i) {
        const double x = p.grid.x(i);
        p.r_hat[i] = kToneAmp * std::exp(-0.5 * std::pow((x - 0.04) / 0.01, 2.0));
    }
    const HarmonicStack stack = solve_cascade(p);
    const std::size_t sensor = p.grid.nearest_node(0.12);

    // sampled spectra carry 2 u_m; compare magnitudes
    const double freq_u2 = std::abs(stack.harmonic(2)[sensor]);
    const double time_u2 = 0.5 * std::abs(t.nonlinear.c2);
    const double gap = std::abs(freq_u2 - time_u2) / freq_u2;
    c.expect(gap <= 0.10, "sweep vs time-sampled doubled line differ by " + fmt(gap));
    c.detail << "|u2| sweep " << fmt(freq_u2) << ", time " << fmt(time_u2) << ", gap "
             << fmt(gap);
}

void criterion_coupling_coefficients(Criterion& c) {
    const std::size_t M = 4, nn = 3, N = 32;
    const double omega = 2.0;
    std::mt19937 rng(90210);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    HarmonicStack stack;
    stack.omega = omega;
    stack.grid = Grid1D(1.0, nn);
    stack.u.assign(M, std::vector<Cplx>(nn));
    for (auto& h : stack.u)
        for (Cplx& v : h) v = Cplx{U(rng), U(rng)};

    std::vector<double> times(N);
    for (std::size_t j = 0; j < N; ++j)
        times[j] = 2.0 * M_PI / omega * static_cast<double>(j) / static_cast<double>(N);

    double scale = 0.0, worst = 0.0;
    for (std::size_t node = 0; node < nn; ++node) {
        std::vector<double> sq(N);
        for (std::size_t j = 0; j < N; ++j) {
            const double s = reconstruct_time_signal(stack, node, times[j]);
            sq[j] = s * s;
        }
        for (std::size_t m = 1; m <= 2 * M; ++m) {
            const Cplx spec = dft_harmonic(sq, times, omega, static_cast<int>(m));
            const Cplx conv = bm_convolution(stack.u, m, BmMode::Full)[node];
            scale = std::max(scale, std::abs(spec));
            worst = std::max(worst, std::abs(spec - 2.0 * conv));
        }
    }
    c.expect(worst <= 1e-10 * scale,
             "coupling coefficients off by " + fmt(worst) + " at scale " + fmt(scale));
    c.detail << "max gap " << fmt(worst) << " at scale " << fmt(scale);
}

void criterion_jacobian_agreement(Criterion& c) {
    const ExperimentSetup s = standard_experiment();
    const double kw = s.medium.kappa;
    const std::vector<double> bp{0.1};
    const std::vector<double> kap{1.1 * kw, 0.9 * kw};

    const std::vector<double> jfd = jacobian_matrix(s, bp, kap, JacobianMode::FiniteDifference);
    const std::vector<double> jlin =
        jacobian_matrix(s, bp, kap, JacobianMode::LinearizedCascade);
    double scale = 0.0, worst = 0.0;
    for (std::size_t i = 0; i < jlin.size(); ++i) scale = std::max(scale, std::abs(jlin[i]));
    for (std::size_t i = 0; i < jlin.size(); ++i)
        worst = std::max(worst, std::abs(jfd[i] - jlin[i]));
    c.expect(scale > 0.0, "degenerate derivative scale");
    c.expect(worst <= 1e-4 * scale,
             "derivative variants differ by " + fmt(worst / scale) + " relative");
    c.detail << "max relative gap " << fmt(worst / scale);
}

void criterion_recovery(Criterion& c) {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentSetup s = standard_experiment();
    const double kw = s.medium.kappa;
    const std::vector<double> bp{0.1};
    const KappaProfile truth{bp, {kw, 1.3 * kw}};
    const std::vector<double> init{0.8 * kw, 0.8 * kw};

    // noise-free closed loop
    const ObservationSet clean = predict_observations(s, truth);
    const InversionResult exact = recover_kappa(s, clean, bp, init);
    const double e0 = std::abs(exact.kappa[0] - truth.values[0]) / truth.values[0];
    const double e1 = std::abs(exact.kappa[1] - truth.values[1]) / truth.values[1];
    c.expect(e0 <= 1e-4 && e1 <= 1e-4,
             "noise-free recovery errors " + fmt(e0) + ", " + fmt(e1));

    // ten seeded noisy data sets at one percent
    const double noise_norm = 0.01 * stack_norm(clean);
    int good = 0, discrepancy_stops = 0;
    double worst_err = 0.0;
    for (unsigned seed = 1; seed <= 10; ++seed) {
        const ObservationSet data = synthesize_observations(s, truth, 0.01, seed);
        GaussNewtonOptions opt;
        opt.noise_norm = noise_norm;
        const InversionResult res = recover_kappa(s, data, bp, init, opt);
        const double r0 = std::abs(res.kappa[0] - truth.values[0]) / truth.values[0];
        const double r1 = std::abs(res.kappa[1] - truth.values[1]) / truth.values[1];
        worst_err = std::max(worst_err, std::max(r0, r1));
        if (r0 <= 0.05 && r1 <= 0.05) ++good;
        if (res.status == GnStatus::DiscrepancyReached) ++discrepancy_stops;
    }
    const double secs = elapsed_s(t0);
    c.expect(good >= 9, "only " + std::to_string(good) + "/10 noisy recoveries within 5%");
    c.expect(secs < 60.0, "recovery study exceeded the one-minute budget");
    c.detail << good << "/10 within 5% (worst " << fmt(worst_err) << "), "
             << discrepancy_stops << " discrepancy stops, noise-free errs " << fmt(e0) << "/"
             << fmt(e1) << ", " << std::fixed << std::setprecision(1) << secs << " s";
}

void criterion_degeneracy_guard(Criterion& c) {
    SimulationSetup s;
    s.model.equation = Equation::Westervelt;
    s.model.damping = Damping::strong(1e-3);
    s.medium = Medium::make(1.0, 1.0, 1e-3, 5.0, 0.0, Formulation::Pressure);  // coupling 3.5
    s.grid = Grid1D(1.0, 201);
    s.time = TimeAxis(0.6, 600);
    s.bc = BoundarySpec::neumann0();
    const double kap = s.medium.kappa;
    s.init.u0 = gaussian_pulse(s.grid, 0.8 / kap, 0.5, 0.25);
    s.init.u1 = gaussian_pulse(s.grid, 0.5 / kap, 0.5, 0.25);

    auto run_once = [&]() -> DegeneracyError {
        try {
            simulate(s);
        } catch (const DegeneracyError& e) {
            return e;
        } catch (const NumericalError& e) {
            throw std::runtime_error(std::string("non-finite state escaped: ") + e.what());
        }
        throw std::runtime_error("state never crossed the degeneracy floor");
    };

    const DegeneracyError a = run_once();
    const DegeneracyError b = run_once();
    c.expect(a.time > 0.0, "degeneracy reported at the initial instant");
    c.expect(std::isfinite(a.factor) && a.factor < 0.1,
             "reported leading factor " + fmt(a.factor) + " is not below the floor");
    c.expect(a.time == b.time && a.node == b.node && a.factor == b.factor,
             "two identical runs disagree on the failure point");
    c.detail << "raised at t " << fmt(a.time) << ", node " << a.node << ", factor "
             << fmt(a.factor) << ", bitwise repeatable";
}

}  // namespace

int main() {
    struct Entry {
        std::string title;
        std::function<void(Criterion&)> body;
    };
    const std::vector<Entry> entries{
        {"vanishing relaxation time converges monotonically", criterion_relaxation_sweep},
        {"memory kernel closed forms and refinement rates", criterion_memory_kernel_rates},
        {"discrete product rule and memory form signs", criterion_sign_structure},
        {"doubled-frequency line appears and scales quadratically",
         criterion_second_harmonic_generation},
        {"periodic sweep matches the sampled time run", criterion_frequency_time_consistency},
        {"coupling coefficients equal the sampled square's spectrum",
         criterion_coupling_coefficients},
        {"derivative variants of the measurement map agree", criterion_jacobian_agreement},
        {"two-region coefficient recovery under noise", criterion_recovery},
        {"degeneracy guard trips deterministically", criterion_degeneracy_guard},
    };

    int failures = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        Criterion c;
        try {
            entries[i].body(c);
        } catch (const std::exception& e) {
            c.ok = false;
            c.failures = std::string("exception: ") + e.what();
        }
        std::cout << (c.ok ? "[PASS] " : "[FAIL] ") << (i + 1) << ". " << entries[i].title;
        const std::string detail = c.ok ? c.detail.str() : c.failures;
        if (!detail.empty()) std::cout << " — " << detail;
        std::cout << "\n";
        if (!c.ok) ++failures;
    }
    std::cout << entries.size() << " criteria, " << failures << " failed\n";
    return failures == 0 ? 0 : 1;
}
