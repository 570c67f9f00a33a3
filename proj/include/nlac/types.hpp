#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlac {

// ---------------------------------------------------------------------------
// Error taxonomy. Everything solver-facing derives from Error so callers can
// catch one base type; specific types carry diagnostic payloads.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidParameter : Error {
    using Error::Error;
};

// Raised when the multiplier (1 - kappa*state) in front of the leading time
// derivative drops below the configured floor at some node.
struct DegeneracyError : Error {
    double time;
    std::size_t node;
    double factor;
    DegeneracyError(const std::string& msg, double t, std::size_t i, double a)
        : Error(msg), time(t), node(i), factor(a) {}
};

struct PicardDivergence : Error {
    double time;
    PicardDivergence(const std::string& msg, double t) : Error(msg), time(t) {}
};

// A non-finite value appeared in a solver state.
struct NumericalError : Error {
    using Error::Error;
};

struct SingularOperator : Error {
    using Error::Error;
};

struct NonContraction : Error {
    using Error::Error;
};

struct IllConditioned : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Material and discretization descriptors.
// ---------------------------------------------------------------------------

// Which field the quadratic coupling acts on: acoustic pressure or velocity
// potential. The derived coefficient kappa differs between the two.
enum class Formulation { Pressure, Potential };

struct Medium {
    double rho0 = 0.0;      // ambient density [kg/m^3]
    double c = 0.0;         // small-signal sound speed [m/s]
    double delta = 0.0;     // sound diffusivity [m^2/s]
    double b_over_a = 0.0;  // nonlinearity ratio B/A [-]
    double tau = 0.0;       // relaxation time [s]
    Formulation formulation = Formulation::Pressure;
    double kappa = 0.0;     // quadratic coupling coefficient, set by make()

    static Medium make(double rho0, double c, double delta, double b_over_a,
                       double tau, Formulation formulation);

    // Fresh water at room temperature.
    static Medium water(Formulation formulation, double tau = 0.0);
};

// Quadratic coupling coefficient for the requested formulation:
//   pressure:  (1/(rho0 c^2)) (1 + B/(2A))   [1/Pa]
//   potential: B / (2 A c^2)                 [s^2/m^2]
double derive_kappa(const Medium& medium, Formulation formulation);

struct Grid1D {
    double length = 0.0;
    std::size_t n_nodes = 0;

    Grid1D() = default;
    Grid1D(double length_, std::size_t n_nodes_);

    double dx() const { return length / static_cast<double>(n_nodes - 1); }
    double x(std::size_t i) const { return dx() * static_cast<double>(i); }
    std::vector<double> nodes() const;
    // Index of the node closest to position p (ties resolve to the left).
    std::size_t nearest_node(double p) const;
};

struct TimeAxis {
    double t_final = 0.0;
    std::size_t n_steps = 0;

    TimeAxis() = default;
    TimeAxis(double t_final_, std::size_t n_steps_);

    double dt() const { return t_final / static_cast<double>(n_steps); }
    double t(std::size_t n) const { return dt() * static_cast<double>(n); }
};

enum class BoundaryKind { Dirichlet0, Neumann0, Impedance };

struct BoundaryCondition {
    BoundaryKind kind = BoundaryKind::Dirichlet0;
    double beta = 0.0;   // weight on the time derivative
    double gamma = 0.0;  // weight on the trace

    static BoundaryCondition dirichlet0() { return {BoundaryKind::Dirichlet0, 0.0, 0.0}; }
    static BoundaryCondition neumann0() { return {BoundaryKind::Neumann0, 0.0, 0.0}; }
    static BoundaryCondition impedance(double beta, double gamma);
};

struct BoundarySpec {
    BoundaryCondition left;
    BoundaryCondition right;

    static BoundarySpec dirichlet0() { return {BoundaryCondition::dirichlet0(), BoundaryCondition::dirichlet0()}; }
    static BoundarySpec neumann0() { return {BoundaryCondition::neumann0(), BoundaryCondition::neumann0()}; }
    // Matched absorbing ends for wave speed c: beta = 1/c, gamma = 0.
    static BoundarySpec absorbing(double c);
};

// Gaussian bump amplitude*exp(-(x-center)^2/(2 sigma^2)) sampled on the grid.
std::vector<double> gaussian_pulse(const Grid1D& grid, double amplitude,
                                   double center, double sigma);

}  // namespace nlac
