#include "nlac/asymptotics.hpp"

#include <algorithm>
#include <cmath>

#include "nlac/field_history.hpp"

namespace nlac {

namespace {

SimulationSetup member_setup(const SweepConfig& cfg, double value, const TimeAxis& axis) {
    SimulationSetup s = cfg.base;
    s.time = axis;
    if (cfg.parameter == SweepParameter::Tau)
        s.medium.tau = value;
    else
        s.medium.delta = value;
    return s;
}

double sup_h1(const FieldHistory& h) {
    double m = 0.0;
    for (std::size_t n = 0; n < h.n_frames(); ++n)
        m = std::max(m, discrete_h1_norm(h.u(n), h.grid()));
    return m;
}

}  // namespace

SweepResult run_sweep(const SweepConfig& cfg) {
    if (cfg.values.empty()) throw InvalidParameter("run_sweep: no parameter values given");
    for (double v : cfg.values)
        if (!(std::isfinite(v) && v >= 0.0))
            throw InvalidParameter("run_sweep: parameter values must be nonnegative");
    if (!(cfg.horizon_backoff > 0.0 && cfg.horizon_backoff < 1.0))
        throw InvalidParameter("run_sweep: horizon_backoff must lie in (0,1)");

    if (cfg.parameter == SweepParameter::Tau &&
        !is_third_order(cfg.base.model.equation))
        throw InvalidParameter("run_sweep: the relaxation sweep needs a third-order equation");

    SweepResult res;
    res.parameter = cfg.parameter;

    // Keep the step size of the requested axis; retries shorten the horizon
    // by dropping steps so all members stay frame-aligned.
    const double dt = cfg.base.time.dt();
    std::size_t n_steps = cfg.base.time.n_steps;

    for (int attempt = 0;; ++attempt) {
        const TimeAxis axis(dt * static_cast<double>(n_steps), n_steps);
        try {
            res.members.clear();
            res.limit = simulate(member_setup(cfg, 0.0, axis));
            for (double v : cfg.values) res.members.push_back(simulate(member_setup(cfg, v, axis)));
            res.achieved_horizon = axis.t_final;
            break;
        } catch (const PicardDivergence& e) {
            if (attempt + 1 >= cfg.max_horizon_retries)
                throw PicardDivergence(
                    "run_sweep: could not find a common horizon: " + std::string(e.what()),
                    e.time);
            const double target = cfg.horizon_backoff * e.time;
            std::size_t shrunk = static_cast<std::size_t>(std::floor(target / dt));
            if (shrunk >= n_steps) shrunk = n_steps - 1;
            if (shrunk < 2)
                throw PicardDivergence(
                    "run_sweep: horizon collapsed while backing off: " + std::string(e.what()),
                    e.time);
            n_steps = shrunk;
        }
    }

    const double ref_c_h1 = sup_h1(res.limit);
    const double ref_xbar = norm_report(res.limit).xbar_w;
    if (!(ref_c_h1 > 0.0) || !(ref_xbar > 0.0))
        throw NumericalError("run_sweep: limit trajectory is identically zero");

    for (std::size_t k = 0; k < cfg.values.size(); ++k) {
        const FieldHistory diff = subtract_histories(res.members[k], res.limit);
        SweepRow row;
        row.value = cfg.values[k];
        row.rel_c_h1 = sup_h1(diff) / ref_c_h1;
        row.rel_xbar_w = norm_report(diff).xbar_w / ref_xbar;
        res.rows.push_back(row);
    }

    res.monotone_c_h1 = true;
    for (std::size_t k = 0; k + 1 < res.rows.size(); ++k)
        if (!(res.rows[k + 1].rel_c_h1 < res.rows[k].rel_c_h1)) res.monotone_c_h1 = false;
    return res;
}

}  // namespace nlac
