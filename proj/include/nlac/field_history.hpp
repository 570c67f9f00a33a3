#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "nlac/types.hpp"

namespace nlac {

// Trajectory of a scalar field and its first two time derivatives on a fixed
// grid, sampled at every step of a run (index 0 holds the initial state).
class FieldHistory {
  public:
    FieldHistory() = default;
    FieldHistory(Grid1D grid, TimeAxis time, std::string model_tag);

    void reserve(std::size_t n_frames);
    void push_frame(double t, std::vector<double> u, std::vector<double> ut,
                    std::vector<double> utt);

    std::size_t n_frames() const { return times_.size(); }
    double t(std::size_t n) const { return times_[n]; }
    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& u(std::size_t n) const { return u_[n]; }
    const std::vector<double>& ut(std::size_t n) const { return ut_[n]; }
    const std::vector<double>& utt(std::size_t n) const { return utt_[n]; }

    const Grid1D& grid() const { return grid_; }
    const TimeAxis& time_axis() const { return time_; }
    const std::string& model_tag() const { return model_tag_; }

  private:
    Grid1D grid_;
    TimeAxis time_;
    std::string model_tag_;
    std::vector<double> times_;
    std::vector<std::vector<double>> u_, ut_, utt_;
};

// Frame-wise difference a - b; the inputs must share grid and frame times.
FieldHistory subtract_histories(const FieldHistory& a, const FieldHistory& b);

// ---------------------------------------------------------------------------
// Discrete spatial norms. Integrals use the composite trapezoid rule;
// derivatives use second-order central differences with one-sided
// second-order stencils at the ends.
// ---------------------------------------------------------------------------

std::vector<double> derivative_x(const std::vector<double>& f, const Grid1D& grid);
std::vector<double> second_derivative_x(const std::vector<double>& f, const Grid1D& grid);

double discrete_l2_norm(const std::vector<double>& f, const Grid1D& grid);
double discrete_h1_norm(const std::vector<double>& f, const Grid1D& grid);
double discrete_h2_norm(const std::vector<double>& f, const Grid1D& grid);

// Space-time norms of a trajectory:
//   linf_h1  = max_n H1(u(t_n))
//   l2_h1_tt = sqrt( trapezoid_t  H1(u_tt(t))^2 )
//   w1inf_h2 = max_n max( H2(u(t_n)), H2(u_t(t_n)) )
//   xbar_w   = sqrt( l2_h1_tt^2 + w1inf_h2^2 )
struct NormReport {
    double linf_h1 = 0.0;
    double l2_h1_tt = 0.0;
    double w1inf_h2 = 0.0;
    double xbar_w = 0.0;
};

NormReport norm_report(const FieldHistory& history);

}  // namespace nlac
