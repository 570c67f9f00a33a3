#pragma once

#include <cstddef>
#include <vector>

#include "nlac/multiharmonic.hpp"
#include "nlac/types.hpp"

namespace nlac {

// Piecewise-constant coefficient profile: values[j] holds on
// [breakpoints[j-1], breakpoints[j]) with the obvious end conventions
// (right-continuous at interior breakpoints).
struct KappaProfile {
    std::vector<double> breakpoints;  // strictly ascending, interior
    std::vector<double> values;       // breakpoints.size() + 1 region values

    double value_at(double x) const;
    std::vector<double> render(const Grid1D& grid) const;
};

// Forward measurement model: periodically forced medium, harmonic
// amplitudes recorded at fixed sensor nodes.
struct ExperimentSetup {
    Medium medium;  // pressure formulation; kappa is overridden pointwise
    Grid1D grid;
    BoundarySpec bc;
    double omega = 0.0;
    std::size_t n_harmonics = 2;
    std::vector<Cplx> r_hat;
    std::vector<std::size_t> sensor_nodes;
    bool use_fixed_point = false;  // forward solves via the relaxed iteration
};

struct ObservationSet {
    std::size_t n_harmonics = 0;
    std::vector<std::size_t> sensor_nodes;
    std::vector<std::vector<Cplx>> values;  // values[m-1][s]
    double noise_level = 0.0;
    unsigned seed = 0;
};

// Harmonic amplitudes at the sensors for a given coefficient profile.
ObservationSet predict_observations(const ExperimentSetup& setup, const KappaProfile& profile);

// Prediction plus complex Gaussian noise, scaled per harmonic so that the
// expected noise energy on harmonic m is (level * rms(values[m]))^2 per
// sensor. Deterministic in the seed.
ObservationSet synthesize_observations(const ExperimentSetup& setup, const KappaProfile& truth,
                                       double noise_level, unsigned seed);

// Real stacked vector of an observation set: harmonics major, sensors minor,
// (Re, Im) innermost. Length 2 * M * n_sensors.
std::vector<double> stack_observations(const ObservationSet& obs);

enum class JacobianMode { FiniteDifference, LinearizedCascade };

// Derivative of the stacked prediction with respect to the region values,
// row-major, rows = 2 * M * n_sensors, cols = n_regions. The linearized
// variant differentiates the cascade sweep exactly; the finite difference
// variant uses central differences with relative step fd_step.
std::vector<double> jacobian_matrix(const ExperimentSetup& setup,
                                    const std::vector<double>& breakpoints,
                                    const std::vector<double>& kappa_regions, JacobianMode mode,
                                    double fd_step = 1e-6);

struct GaussNewtonOptions {
    JacobianMode jacobian = JacobianMode::LinearizedCascade;
    double reg_lambda_scale = 1e-3;  // lambda = scale * mean diag(J^T J)
    double fd_step = 1e-6;
    int max_outer = 50;
    double tol_update = 1e-8;        // relative step floor
    double discrepancy_tau = 1.2;    // stop at residual <= tau * noise_norm
    double noise_norm = 0.0;         // expected noise magnitude in the stacked norm
    double armijo_c1 = 1e-4;
    int max_line_search = 20;
};

struct GaussNewtonTraceRow {
    int iter = 0;
    double residual_norm = 0.0;
    double lambda = 0.0;
    double step_norm = 0.0;
};

enum class GnStatus { DiscrepancyReached, SmallUpdate, MaxIterations };

struct InversionResult {
    std::vector<double> kappa;  // recovered region values
    GnStatus status = GnStatus::MaxIterations;
    double final_residual = 0.0;
    std::vector<GaussNewtonTraceRow> trace;
};

// Regularized Gauss-Newton with Armijo backtracking on the data misfit.
// Reaching max_outer is reported through the status, not an exception;
// a singular normal system raises IllConditioned.
InversionResult recover_kappa(const ExperimentSetup& setup, const ObservationSet& data,
                              const std::vector<double>& breakpoints,
                              const std::vector<double>& kappa_init,
                              const GaussNewtonOptions& options = {});

}  // namespace nlac
