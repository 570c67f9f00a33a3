#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "nlac/tridiag.hpp"
#include "nlac/types.hpp"

namespace nlac {

using Cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// Periodic ansatz conventions (used consistently by every routine here):
//   u(x,t) = sum_{m=1..M} 2 Re( u_m(x) e^{i m omega t} ),
// i.e. u_m is the two-sided Fourier coefficient and u_{-m} = conj(u_m).
// Sources are given as envelopes r(x) with time trace Re( r(x) e^{i omega t} ),
// so their two-sided coefficient at m = 1 is r/2.
// ---------------------------------------------------------------------------

// Frequency-domain operator of harmonic m for the linearized damped wave
// equation: A_m u = -(omega m)^2 u - (c^2 + i omega m b) u_xx, b = delta.
// Ends: zero-value rows, or the ghost flux relation
// d_nu u + (i omega m beta + gamma) u = 0 (zero-flux ends are beta=gamma=0).
class HelmholtzOp1D {
  public:
    HelmholtzOp1D(const Grid1D& grid, const Medium& medium, double omega, int m,
                  const BoundarySpec& bc);

    // Solves A_m u = rhs; zero-value end entries of rhs are ignored.
    std::vector<Cplx> solve(const std::vector<Cplx>& rhs) const;
    std::vector<Cplx> apply(const std::vector<Cplx>& u) const;
    const Tridiag<Cplx>& matrix() const { return mat_; }

  private:
    Tridiag<Cplx> mat_;
    bool left_dirichlet_ = false, right_dirichlet_ = false;
};

// Quadratic coupling mode: Truncated keeps only products of lower harmonics
// (what a sequential sweep can see); Full adds the conjugate pairings with
// higher harmonics.
enum class BmMode { Truncated, Full };

// Two-sided coefficient of e^{i m omega t} in u(t)^2 for the ansatz above:
//   C_m = sum_{l=1}^{m-1} u_l u_{m-l}            (Truncated)
//       + 2 sum_{j>=1}    conj(u_j) u_{j+m}      (added by Full)
// u holds harmonics()[m-1] = u_m; the result is the nodal coefficient field.
std::vector<Cplx> bm_convolution(const std::vector<std::vector<Cplx>>& u, std::size_t m,
                                 BmMode mode);

struct HarmonicProblem {
    Medium medium;  // pressure-formulation medium
    Grid1D grid;
    BoundarySpec bc;
    double omega = 0.0;
    std::size_t n_harmonics = 2;  // M
    std::vector<Cplx> r_hat;      // source envelope on the grid
    // Nodal quadratic coefficient; empty means medium.kappa everywhere.
    std::vector<double> kappa;
};

struct HarmonicStack {
    double omega = 0.0;
    Grid1D grid;
    std::vector<std::vector<Cplx>> u;  // u[m-1] = harmonic m

    std::size_t n_harmonics() const { return u.size(); }
    const std::vector<Cplx>& harmonic(std::size_t m) const { return u[m - 1]; }
};

// Sequential sweep m = 1..M: each harmonic is driven by the already-computed
// lower ones (Truncated coupling by construction).
HarmonicStack solve_cascade(const HarmonicProblem& problem);

struct FixedPointOptions {
    BmMode mode = BmMode::Full;
    double theta = 0.5;  // relaxation weight on the new iterate
    double tol = 1e-10;  // relative update floor
    int max_iter = 200;
};

struct FixedPointReport {
    int iterations = 0;
    double final_update = 0.0;
};

// Relaxed self-consistent iteration over the full coupled system, warm
// started from the cascade solution. Throws NonContraction when the update
// fails to settle within max_iter or the iterates blow up.
HarmonicStack solve_fixed_point(const HarmonicProblem& problem,
                                const FixedPointOptions& options = {},
                                FixedPointReport* report = nullptr);

// Real time signal of the stack at one node.
double reconstruct_time_signal(const HarmonicStack& stack, std::size_t node, double t);

// One-sided DFT amplitude of a real signal sampled uniformly over an integer
// number of periods (endpoint excluded):
//   c_m = (2/N) sum_j samples[j] e^{-i m omega times[j]}.
// For the ansatz above this recovers 2 u_m.
Cplx dft_harmonic(const std::vector<double>& samples, const std::vector<double>& times,
                  double omega, int m);

}  // namespace nlac
