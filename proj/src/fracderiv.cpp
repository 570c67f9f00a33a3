#include "nlac/fracderiv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nlac {

namespace {

void check_dt(double dt, const char* who) {
    if (!(std::isfinite(dt) && dt > 0.0))
        throw InvalidParameter(std::string(who) + ": dt must be positive and finite");
}

}  // namespace

// ---------------------------------------------------------------------------
// CaputoL1Kernel
// ---------------------------------------------------------------------------

CaputoL1Kernel::CaputoL1Kernel(double alpha, double dt) : alpha_(alpha), dt_(dt) {
    check_dt(dt, "caputo_l1");
    if (!(std::isfinite(alpha) && alpha > 0.0 && alpha <= 1.0))
        throw InvalidParameter("caputo_l1: alpha must lie in (0,1]");
    scale_ = backward_difference_limit()
                 ? 1.0 / dt_
                 : std::pow(dt_, -alpha_) / std::tgamma(2.0 - alpha_);
}

double CaputoL1Kernel::weight(std::size_t k) const {
    if (backward_difference_limit()) return k == 0 ? 1.0 : 0.0;
    const double e = 1.0 - alpha_;
    while (weights_.size() <= k) {
        const double j = static_cast<double>(weights_.size());
        weights_.push_back(std::pow(j + 1.0, e) - std::pow(j, e));
    }
    return weights_[k];
}

double CaputoL1Kernel::evaluate(const std::vector<double>& series, std::size_t n) const {
    if (n >= series.size())
        throw InvalidParameter("caputo_l1: sample index beyond series");
    if (n == 0) return 0.0;
    if (backward_difference_limit()) return (series[n] - series[n - 1]) / dt_;
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        acc += weight(k) * (series[n - k] - series[n - k - 1]);
    return scale_ * acc;
}

std::vector<double> caputo_l1(const std::vector<double>& series, double alpha, double dt) {
    CaputoL1Kernel kernel(alpha, dt);
    std::vector<double> out(series.size(), 0.0);
    for (std::size_t n = 1; n < series.size(); ++n) out[n] = kernel.evaluate(series, n);
    return out;
}

// ---------------------------------------------------------------------------
// AbelKernel
// ---------------------------------------------------------------------------

AbelKernel::AbelKernel(double gamma, double dt) : gamma_(gamma), dt_(dt) {
    check_dt(dt, "abel_integral");
    if (!(std::isfinite(gamma) && gamma > 0.0 && gamma < 1.0))
        throw InvalidParameter("abel_integral: gamma must lie in (0,1)");
}

double AbelKernel::weight(std::size_t k) const {
    const double norm = std::pow(dt_, gamma_) / std::tgamma(1.0 + gamma_);
    while (weights_.size() <= k) {
        const double j = static_cast<double>(weights_.size());
        weights_.push_back(norm * (std::pow(j + 1.0, gamma_) - std::pow(j, gamma_)));
    }
    return weights_[k];
}

double AbelKernel::evaluate(const std::vector<double>& series, std::size_t n) const {
    if (n >= series.size())
        throw InvalidParameter("abel_integral: sample index beyond series");
    double acc = 0.0;
    for (std::size_t j = 1; j <= n; ++j) acc += series[j] * weight(n - j);
    return acc;
}

std::vector<double> abel_integral(const std::vector<double>& series, double gamma, double dt) {
    AbelKernel kernel(gamma, dt);
    std::vector<double> out(series.size(), 0.0);
    for (std::size_t n = 1; n < series.size(); ++n) out[n] = kernel.evaluate(series, n);
    return out;
}

// ---------------------------------------------------------------------------
// Discrete inequality checks
// ---------------------------------------------------------------------------

ChainRuleReport check_chain_rule_inequality(const std::vector<double>& series,
                                            double alpha, double dt) {
    if (!(std::isfinite(alpha) && alpha > 0.0 && alpha < 1.0))
        throw InvalidParameter("chain_rule: alpha must lie in (0,1)");
    if (series.size() < 2)
        throw InvalidParameter("chain_rule: need at least two samples");
    CaputoL1Kernel kernel(alpha, dt);
    std::vector<double> sq(series.size());
    for (std::size_t n = 0; n < series.size(); ++n) sq[n] = series[n] * series[n];

    ChainRuleReport rep;
    rep.min_margin = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < series.size(); ++n)
        rep.max_abs_sq = std::max(rep.max_abs_sq, sq[n]);
    for (std::size_t n = 1; n < series.size(); ++n) {
        const double margin =
            series[n] * kernel.evaluate(series, n) - 0.5 * kernel.evaluate(sq, n);
        if (margin < rep.min_margin) {
            rep.min_margin = margin;
            rep.argmin = n;
        }
    }
    return rep;
}

CoercivityReport check_abel_coercivity(const std::vector<double>& series,
                                       double alpha, double dt) {
    if (!(std::isfinite(alpha) && alpha > 0.0 && alpha < 1.0))
        throw InvalidParameter("coercivity: alpha must lie in (0,1)");
    if (series.size() < 2)
        throw InvalidParameter("coercivity: need at least two samples");
    AbelKernel kernel(1.0 - alpha, dt);
    CoercivityReport rep;
    for (std::size_t n = 1; n < series.size(); ++n) {
        rep.value += dt * series[n] * kernel.evaluate(series, n);
        rep.series_norm_sq += dt * series[n] * series[n];
    }
    return rep;
}

}  // namespace nlac
