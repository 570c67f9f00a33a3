#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nlac/field_history.hpp"
#include "nlac/types.hpp"

namespace nlac {

// Equation family. The first three are second order in time and advance
// (u, u_t) with the one-step implicit midpoint rule; the last two carry a
// relaxation term tau * u_ttt and advance (u, u_t, u_tt) with the trapezoid
// rule on the first-order system. With tau == 0 the third equation of that
// system degenerates and the stepper falls back to the trapezoid rule on the
// reduced second-order system.
//
//   LinearWave:      u_tt - c^2 u_xx - [damping] = f
//   Westervelt:      (1 - kappa u) u_tt - c^2 u_xx - b u_xxt = kappa (u_t)^2 + f
//   Kuznetsov:       (1 - kappa u_t) u_tt - c^2 u_xx - b u_xxt = (|u_x|^2)_t + f
//   JmgtWestervelt:  tau u_ttt + (1 - kappa u_t) u_tt - c^2 u_xx - b u_xxt = f,
//                    b = delta + tau c^2
//   JmgtKuznetsov:   same plus (|u_x|^2)_t on the right
//
// Westervelt acts on pressure, the others on the velocity potential; kappa is
// the medium's coefficient for the matching formulation.
enum class Equation { LinearWave, Westervelt, Kuznetsov, JmgtWestervelt, JmgtKuznetsov };

Formulation formulation_of(Equation eq);
bool is_third_order(Equation eq);
const char* equation_name(Equation eq);

struct Damping {
    enum class Kind { None, Strong, CaputoWismer };
    Kind kind = Kind::Strong;
    double b = -1.0;    // damping coefficient; < 0 selects the medium value
    double beta = 1.0;  // fractional order for CaputoWismer, in (0,1]

    // -b u_xxt with b = medium.delta (plus tau c^2 for the third-order family)
    static Damping from_medium() { return {Kind::Strong, -1.0, 1.0}; }
    static Damping none() { return {Kind::None, 0.0, 1.0}; }
    static Damping strong(double b) { return {Kind::Strong, b, 1.0}; }
    // -b d_t^beta u_xx, discretized with the first-difference kernel
    static Damping caputo_wismer(double b, double beta) { return {Kind::CaputoWismer, b, beta}; }
};

struct ModelSpec {
    Equation equation = Equation::LinearWave;
    Damping damping = Damping::from_medium();
};

enum class Scheme { Auto, ImplicitMidpoint2nd, FirstOrderSystemTrapezoid3rd };

struct StepperConfig {
    double picard_tol = 1e-10;     // relative update floor for the frozen-coefficient loop
    int picard_max_iter = 50;
    double degeneracy_floor = 0.1;  // minimum admissible (1 - kappa * state)
    Scheme scheme = Scheme::Auto;
};

struct InitialState {
    std::vector<double> u0;                 // field at t = 0
    std::vector<double> u1;                 // first time derivative at t = 0
    std::optional<std::vector<double>> u2;  // second derivative; third-order equations only
};

using SourceFn = std::function<double(double x, double t)>;

struct SimulationSetup {
    ModelSpec model;
    Medium medium;
    Grid1D grid;
    TimeAxis time;
    BoundarySpec bc = BoundarySpec::dirichlet0();
    InitialState init;
    SourceFn source;  // optional; empty means no forcing
    StepperConfig stepper;
};

FieldHistory simulate(const SimulationSetup& setup);

// Node-wise c / sqrt(1 - kappa * state). The state is the field the medium's
// formulation couples to (pressure, or the potential's time derivative).
std::vector<double> effective_wave_speed(const std::vector<double>& state,
                                         const Medium& medium,
                                         double degeneracy_floor = 0.1);

struct PressureHistory {
    std::vector<double> times;
    std::vector<std::vector<double>> p;    // rho0 * u_t
    std::vector<std::vector<double>> p_t;  // rho0 * u_tt
};

PressureHistory pressure_from_potential(const FieldHistory& history, const Medium& medium);

// Discrete wave energy 0.5 ||u_t||^2 + 0.5 c^2 ||u_x||^2 with the
// forward-difference gradient; exact monotone decay holds for the linear
// damped equation with zero-value ends under the midpoint stepper.
double wave_energy(const std::vector<double>& u, const std::vector<double>& ut,
                   const Grid1D& grid, double c);

}  // namespace nlac
