#pragma once

#include <cstddef>
#include <vector>

#include "nlac/types.hpp"

namespace nlac {

// Discrete Caputo-type derivative of order alpha in (0,1] on a uniform time
// grid. Values are first differences of the sample history weighted by
//   w_k = (k+1)^(1-alpha) - k^(1-alpha),
// scaled by dt^(-alpha)/Gamma(2-alpha). The scheme is exact on affine
// functions and maps constants to exactly zero. alpha == 1 selects a
// dedicated limit path that returns the plain backward difference.
class CaputoL1Kernel {
  public:
    CaputoL1Kernel(double alpha, double dt);

    double alpha() const { return alpha_; }
    double dt() const { return dt_; }
    bool backward_difference_limit() const { return alpha_ == 1.0; }
    double scale() const { return scale_; }
    double weight(std::size_t k) const;

    // Derivative at sample index n (0 for n == 0; needs series.size() > n).
    double evaluate(const std::vector<double>& series, std::size_t n) const;

  private:
    double alpha_ = 0.0;
    double dt_ = 0.0;
    double scale_ = 0.0;
    mutable std::vector<double> weights_;
};

// Derivative values at every sample index of the series.
std::vector<double> caputo_l1(const std::vector<double>& series, double alpha, double dt);

// Discrete fractional integral of order gamma in (0,1) on a uniform grid,
// by product integration with the integrand held constant per cell at its
// right endpoint:
//   I(t_n) = sum_{j=1..n} series[j] * c_{n-j},
//   c_k = dt^gamma ((k+1)^gamma - k^gamma) / Gamma(1+gamma).
// Exact on constants; the cell weights are positive, decreasing, and convex,
// which makes the induced quadratic form positive semidefinite.
class AbelKernel {
  public:
    AbelKernel(double gamma, double dt);

    double gamma() const { return gamma_; }
    double dt() const { return dt_; }
    double weight(std::size_t k) const;
    double evaluate(const std::vector<double>& series, std::size_t n) const;

  private:
    double gamma_ = 0.0;
    double dt_ = 0.0;
    mutable std::vector<double> weights_;
};

std::vector<double> abel_integral(const std::vector<double>& series, double gamma, double dt);

// Pointwise margin of the discrete product inequality
//   w(t_n) * D^alpha w(t_n) - 0.5 * D^alpha (w^2)(t_n) >= 0
// evaluated with the kernel above at every n >= 1.
struct ChainRuleReport {
    double min_margin = 0.0;
    std::size_t argmin = 0;
    double max_abs_sq = 0.0;  // max_n series[n]^2, the natural margin scale
};

ChainRuleReport check_chain_rule_inequality(const std::vector<double>& series,
                                            double alpha, double dt);

// Sign of the quadratic form  dt * sum_n I^(1-alpha) w(t_n) * w(t_n).
struct CoercivityReport {
    double value = 0.0;
    double series_norm_sq = 0.0;  // dt * sum_n series[n]^2
};

CoercivityReport check_abel_coercivity(const std::vector<double>& series,
                                       double alpha, double dt);

}  // namespace nlac
