// Python bindings for the 1-D nonlinear acoustics toolkit.

#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nlac/asymptotics.hpp"
#include "nlac/fracderiv.hpp"
#include "nlac/inversion.hpp"
#include "nlac/multiharmonic.hpp"
#include "nlac/timedomain.hpp"
#include "nlac/types.hpp"

namespace py = pybind11;
using namespace nlac;

PYBIND11_MODULE(_core, m) {
    m.doc() = "1-D nonlinear acoustics: time-domain solvers, fractional damping "
              "kernels, limit sweeps, harmonic balance, and coefficient recovery";
    m.attr("__version__") = "0.1.0";

    // ---- error taxonomy -----------------------------------------------------
    static py::exception<Error> exc_base(m, "NlacError");
    static py::exception<InvalidParameter> exc_invalid(m, "InvalidParameter", exc_base);
    static py::exception<DegeneracyError> exc_degen(m, "DegeneracyError", exc_base);
    static py::exception<PicardDivergence> exc_picard(m, "PicardDivergence", exc_base);
    static py::exception<NumericalError> exc_numeric(m, "NumericalError", exc_base);
    static py::exception<SingularOperator> exc_singular(m, "SingularOperator", exc_base);
    static py::exception<NonContraction> exc_noncontr(m, "NonContraction", exc_base);
    static py::exception<IllConditioned> exc_illcond(m, "IllConditioned", exc_base);
    py::register_exception_translator([](std::exception_ptr p) {
        if (!p) return;
        try {
            std::rethrow_exception(p);
        } catch (const InvalidParameter& e) {
            exc_invalid(e.what());
        } catch (const DegeneracyError& e) {
            exc_degen(e.what());
        } catch (const PicardDivergence& e) {
            exc_picard(e.what());
        } catch (const NumericalError& e) {
            exc_numeric(e.what());
        } catch (const SingularOperator& e) {
            exc_singular(e.what());
        } catch (const NonContraction& e) {
            exc_noncontr(e.what());
        } catch (const IllConditioned& e) {
            exc_illcond(e.what());
        } catch (const Error& e) {
            exc_base(e.what());
        }
    });

    // ---- core types ---------------------------------------------------------
    py::enum_<Formulation>(m, "Formulation")
        .value("Pressure", Formulation::Pressure)
        .value("Potential", Formulation::Potential);

    py::class_<Medium>(m, "Medium")
        .def_static("make", &Medium::make, py::arg("rho0"), py::arg("c"), py::arg("delta"),
                    py::arg("b_over_a"), py::arg("tau"), py::arg("formulation"))
        .def_static("water", &Medium::water, py::arg("formulation"), py::arg("tau") = 0.0)
        .def_readonly("rho0", &Medium::rho0)
        .def_readonly("c", &Medium::c)
        .def_readonly("delta", &Medium::delta)
        .def_readonly("b_over_a", &Medium::b_over_a)
        .def_readwrite("tau", &Medium::tau)
        .def_readonly("formulation", &Medium::formulation)
        .def_readonly("kappa", &Medium::kappa);

    py::class_<Grid1D>(m, "Grid1D")
        .def(py::init<double, std::size_t>(), py::arg("length"), py::arg("n_nodes"))
        .def_readonly("length", &Grid1D::length)
        .def_readonly("n_nodes", &Grid1D::n_nodes)
        .def("dx", &Grid1D::dx)
        .def("x", &Grid1D::x, py::arg("i"))
        .def("nodes", &Grid1D::nodes)
        .def("nearest_node", &Grid1D::nearest_node, py::arg("p"));

    py::class_<TimeAxis>(m, "TimeAxis")
        .def(py::init<double, std::size_t>(), py::arg("t_final"), py::arg("n_steps"))
        .def_readonly("t_final", &TimeAxis::t_final)
        .def_readonly("n_steps", &TimeAxis::n_steps)
        .def("dt", &TimeAxis::dt)
        .def("t", &TimeAxis::t, py::arg("n"));

    py::class_<BoundaryCondition>(m, "BoundaryCondition")
        .def_static("dirichlet0", &BoundaryCondition::dirichlet0)
        .def_static("neumann0", &BoundaryCondition::neumann0)
        .def_static("impedance", &BoundaryCondition::impedance, py::arg("beta"),
                    py::arg("gamma"));

    py::class_<BoundarySpec>(m, "BoundarySpec")
        .def(py::init<>())
        .def_static("dirichlet0", &BoundarySpec::dirichlet0)
        .def_static("neumann0", &BoundarySpec::neumann0)
        .def_static("absorbing", &BoundarySpec::absorbing, py::arg("c"))
        .def_readwrite("left", &BoundarySpec::left)
        .def_readwrite("right", &BoundarySpec::right);

    m.def("gaussian_pulse", &gaussian_pulse, py::arg("grid"), py::arg("amplitude"),
          py::arg("center"), py::arg("sigma"));

    // ---- fractional memory kernels -------------------------------------------
    m.def("caputo_l1", &caputo_l1, py::arg("series"), py::arg("alpha"), py::arg("dt"),
          "Order-alpha Caputo derivative of a sampled series (L1 rule)");
    m.def("abel_integral", &abel_integral, py::arg("series"), py::arg("gamma"), py::arg("dt"),
          "Order-gamma fractional integral of a sampled series");

    py::class_<ChainRuleReport>(m, "ChainRuleReport")
        .def_readonly("min_margin", &ChainRuleReport::min_margin)
        .def_readonly("argmin", &ChainRuleReport::argmin)
        .def_readonly("max_abs_sq", &ChainRuleReport::max_abs_sq);
    m.def("check_chain_rule_inequality", &check_chain_rule_inequality, py::arg("series"),
          py::arg("alpha"), py::arg("dt"));

    py::class_<CoercivityReport>(m, "CoercivityReport")
        .def_readonly("value", &CoercivityReport::value)
        .def_readonly("series_norm_sq", &CoercivityReport::series_norm_sq);
    m.def("check_abel_coercivity", &check_abel_coercivity, py::arg("series"), py::arg("alpha"),
          py::arg("dt"));

    // ---- time domain ----------------------------------------------------------
    py::enum_<Equation>(m, "Equation")
        .value("LinearWave", Equation::LinearWave)
        .value("Westervelt", Equation::Westervelt)
        .value("Kuznetsov", Equation::Kuznetsov)
        .value("JmgtWestervelt", Equation::JmgtWestervelt)
        .value("JmgtKuznetsov", Equation::JmgtKuznetsov);

    py::class_<Damping>(m, "Damping")
        .def_static("from_medium", &Damping::from_medium)
        .def_static("none", &Damping::none)
        .def_static("strong", &Damping::strong, py::arg("b"))
        .def_static("caputo_wismer", &Damping::caputo_wismer, py::arg("b"), py::arg("beta"));

    py::class_<ModelSpec>(m, "ModelSpec")
        .def(py::init<>())
        .def_readwrite("equation", &ModelSpec::equation)
        .def_readwrite("damping", &ModelSpec::damping);

    py::enum_<Scheme>(m, "Scheme")
        .value("Auto", Scheme::Auto)
        .value("ImplicitMidpoint2nd", Scheme::ImplicitMidpoint2nd)
        .value("FirstOrderSystemTrapezoid3rd", Scheme::FirstOrderSystemTrapezoid3rd);

    py::class_<StepperConfig>(m, "StepperConfig")
        .def(py::init<>())
        .def_readwrite("picard_tol", &StepperConfig::picard_tol)
        .def_readwrite("picard_max_iter", &StepperConfig::picard_max_iter)
        .def_readwrite("degeneracy_floor", &StepperConfig::degeneracy_floor)
        .def_readwrite("scheme", &StepperConfig::scheme);

    py::class_<InitialState>(m, "InitialState")
        .def(py::init<>())
        .def_readwrite("u0", &InitialState::u0)
        .def_readwrite("u1", &InitialState::u1)
        .def_readwrite("u2", &InitialState::u2);

    py::class_<SimulationSetup>(m, "SimulationSetup")
        .def(py::init<>())
        .def_readwrite("model", &SimulationSetup::model)
        .def_readwrite("medium", &SimulationSetup::medium)
        .def_readwrite("grid", &SimulationSetup::grid)
        .def_readwrite("time", &SimulationSetup::time)
        .def_readwrite("bc", &SimulationSetup::bc)
        .def_readwrite("init", &SimulationSetup::init)
        .def_readwrite("source", &SimulationSetup::source)
        .def_readwrite("stepper", &SimulationSetup::stepper);

    py::class_<FieldHistory>(m, "FieldHistory")
        .def("n_frames", &FieldHistory::n_frames)
        .def("t", &FieldHistory::t, py::arg("n"))
        .def("times", &FieldHistory::times)
        .def("u", &FieldHistory::u, py::arg("n"), py::return_value_policy::copy)
        .def("ut", &FieldHistory::ut, py::arg("n"), py::return_value_policy::copy)
        .def("utt", &FieldHistory::utt, py::arg("n"), py::return_value_policy::copy);

    m.def("simulate", &simulate, py::arg("setup"),
          "Integrate the configured model and return the frame history");
    m.def("wave_energy", &wave_energy, py::arg("u"), py::arg("ut"), py::arg("grid"),
          py::arg("c"));
    m.def("effective_wave_speed", &effective_wave_speed, py::arg("state"), py::arg("medium"),
          py::arg("degeneracy_floor") = 0.1);

    py::class_<PressureHistory>(m, "PressureHistory")
        .def_readonly("times", &PressureHistory::times)
        .def_readonly("p", &PressureHistory::p)
        .def_readonly("p_t", &PressureHistory::p_t);
    m.def("pressure_from_potential", &pressure_from_potential, py::arg("history"),
          py::arg("medium"));

    // ---- limit sweeps -----------------------------------------------------------
    py::enum_<SweepParameter>(m, "SweepParameter")
        .value("Tau", SweepParameter::Tau)
        .value("Delta", SweepParameter::Delta);

    py::class_<SweepConfig>(m, "SweepConfig")
        .def(py::init<>())
        .def_readwrite("parameter", &SweepConfig::parameter)
        .def_readwrite("values", &SweepConfig::values)
        .def_readwrite("base", &SweepConfig::base)
        .def_readwrite("horizon_backoff", &SweepConfig::horizon_backoff)
        .def_readwrite("max_horizon_retries", &SweepConfig::max_horizon_retries);

    py::class_<SweepRow>(m, "SweepRow")
        .def_readonly("value", &SweepRow::value)
        .def_readonly("rel_c_h1", &SweepRow::rel_c_h1)
        .def_readonly("rel_xbar_w", &SweepRow::rel_xbar_w);

    py::class_<SweepResult>(m, "SweepResult")
        .def_readonly("parameter", &SweepResult::parameter)
        .def_readonly("rows", &SweepResult::rows)
        .def_readonly("monotone_c_h1", &SweepResult::monotone_c_h1)
        .def_readonly("achieved_horizon", &SweepResult::achieved_horizon)
        .def_readonly("limit", &SweepResult::limit)
        .def_readonly("members", &SweepResult::members);

    m.def("run_sweep", &run_sweep, py::arg("config"),
          "Run the family at each parameter value plus the zero limit and "
          "report trajectory distances");

    // ---- harmonic balance ----------------------------------------------------
    py::enum_<BmMode>(m, "BmMode")
        .value("Truncated", BmMode::Truncated)
        .value("Full", BmMode::Full);

    py::class_<HarmonicProblem>(m, "HarmonicProblem")
        .def(py::init<>())
        .def_readwrite("medium", &HarmonicProblem::medium)
        .def_readwrite("grid", &HarmonicProblem::grid)
        .def_readwrite("bc", &HarmonicProblem::bc)
        .def_readwrite("omega", &HarmonicProblem::omega)
        .def_readwrite("n_harmonics", &HarmonicProblem::n_harmonics)
        .def_readwrite("r_hat", &HarmonicProblem::r_hat)
        .def_readwrite("kappa", &HarmonicProblem::kappa);

    py::class_<HarmonicStack>(m, "HarmonicStack")
        .def_readonly("omega", &HarmonicStack::omega)
        .def_readonly("grid", &HarmonicStack::grid)
        .def_readonly("u", &HarmonicStack::u)
        .def("n_harmonics", &HarmonicStack::n_harmonics)
        .def("harmonic", &HarmonicStack::harmonic, py::arg("m"),
             py::return_value_policy::copy);

    py::class_<FixedPointOptions>(m, "FixedPointOptions")
        .def(py::init<>())
        .def_readwrite("mode", &FixedPointOptions::mode)
        .def_readwrite("theta", &FixedPointOptions::theta)
        .def_readwrite("tol", &FixedPointOptions::tol)
        .def_readwrite("max_iter", &FixedPointOptions::max_iter);

    py::class_<FixedPointReport>(m, "FixedPointReport")
        .def_readonly("iterations", &FixedPointReport::iterations)
        .def_readonly("final_update", &FixedPointReport::final_update);

    m.def("solve_cascade", &solve_cascade, py::arg("problem"),
          "One sequential sweep: each harmonic driven by the lower ones");
    m.def(
        "solve_fixed_point",
        [](const HarmonicProblem& p, const FixedPointOptions& opt) {
            FixedPointReport rep;
            HarmonicStack s = solve_fixed_point(p, opt, &rep);
            return py::make_tuple(s, rep);
        },
        py::arg("problem"), py::arg("options") = FixedPointOptions{},
        "Relaxed self-consistent iteration; returns (stack, report)");
    m.def("bm_convolution", &bm_convolution, py::arg("u"), py::arg("m"), py::arg("mode"));
    m.def("reconstruct_time_signal", &reconstruct_time_signal, py::arg("stack"),
          py::arg("node"), py::arg("t"));
    m.def("dft_harmonic", &dft_harmonic, py::arg("samples"), py::arg("times"),
          py::arg("omega"), py::arg("m"));

    // ---- coefficient recovery ---------------------------------------------------
    py::class_<KappaProfile>(m, "KappaProfile")
        .def(py::init<>())
        .def(py::init([](std::vector<double> bp, std::vector<double> vals) {
                 return KappaProfile{std::move(bp), std::move(vals)};
             }),
             py::arg("breakpoints"), py::arg("values"))
        .def_readwrite("breakpoints", &KappaProfile::breakpoints)
        .def_readwrite("values", &KappaProfile::values)
        .def("value_at", &KappaProfile::value_at, py::arg("x"))
        .def("render", &KappaProfile::render, py::arg("grid"));

    py::class_<ExperimentSetup>(m, "ExperimentSetup")
        .def(py::init<>())
        .def_readwrite("medium", &ExperimentSetup::medium)
        .def_readwrite("grid", &ExperimentSetup::grid)
        .def_readwrite("bc", &ExperimentSetup::bc)
        .def_readwrite("omega", &ExperimentSetup::omega)
        .def_readwrite("n_harmonics", &ExperimentSetup::n_harmonics)
        .def_readwrite("r_hat", &ExperimentSetup::r_hat)
        .def_readwrite("sensor_nodes", &ExperimentSetup::sensor_nodes)
        .def_readwrite("use_fixed_point", &ExperimentSetup::use_fixed_point);

    py::class_<ObservationSet>(m, "ObservationSet")
        .def(py::init<>())
        .def_readwrite("n_harmonics", &ObservationSet::n_harmonics)
        .def_readwrite("sensor_nodes", &ObservationSet::sensor_nodes)
        .def_readwrite("values", &ObservationSet::values)
        .def_readwrite("noise_level", &ObservationSet::noise_level)
        .def_readwrite("seed", &ObservationSet::seed);

    m.def("predict_observations", &predict_observations, py::arg("setup"), py::arg("profile"));
    m.def("synthesize_observations", &synthesize_observations, py::arg("setup"),
          py::arg("truth"), py::arg("noise_level"), py::arg("seed"));
    m.def("stack_observations", &stack_observations, py::arg("obs"));

    py::enum_<JacobianMode>(m, "JacobianMode")
        .value("FiniteDifference", JacobianMode::FiniteDifference)
        .value("LinearizedCascade", JacobianMode::LinearizedCascade);
    m.def("jacobian_matrix", &jacobian_matrix, py::arg("setup"), py::arg("breakpoints"),
          py::arg("kappa_regions"), py::arg("mode"), py::arg("fd_step") = 1e-6,
          "Row-major derivative of the stacked prediction w.r.t. region values");

    py::enum_<GnStatus>(m, "GnStatus")
        .value("DiscrepancyReached", GnStatus::DiscrepancyReached)
        .value("SmallUpdate", GnStatus::SmallUpdate)
        .value("MaxIterations", GnStatus::MaxIterations);

    py::class_<GaussNewtonOptions>(m, "GaussNewtonOptions")
        .def(py::init<>())
        .def_readwrite("jacobian", &GaussNewtonOptions::jacobian)
        .def_readwrite("reg_lambda_scale", &GaussNewtonOptions::reg_lambda_scale)
        .def_readwrite("fd_step", &GaussNewtonOptions::fd_step)
        .def_readwrite("max_outer", &GaussNewtonOptions::max_outer)
        .def_readwrite("tol_update", &GaussNewtonOptions::tol_update)
        .def_readwrite("discrepancy_tau", &GaussNewtonOptions::discrepancy_tau)
        .def_readwrite("noise_norm", &GaussNewtonOptions::noise_norm)
        .def_readwrite("armijo_c1", &GaussNewtonOptions::armijo_c1)
        .def_readwrite("max_line_search", &GaussNewtonOptions::max_line_search);

    py::class_<GaussNewtonTraceRow>(m, "GaussNewtonTraceRow")
        .def_readonly("iter", &GaussNewtonTraceRow::iter)
        .def_readonly("residual_norm", &GaussNewtonTraceRow::residual_norm)
        .def_readonly("lambda_", &GaussNewtonTraceRow::lambda)
        .def_readonly("step_norm", &GaussNewtonTraceRow::step_norm);

    py::class_<InversionResult>(m, "InversionResult")
        .def_readonly("kappa", &InversionResult::kappa)
        .def_readonly("status", &InversionResult::status)
        .def_readonly("final_residual", &InversionResult::final_residual)
        .def_readonly("trace", &InversionResult::trace);

    m.def("recover_kappa", &recover_kappa, py::arg("setup"), py::arg("data"),
          py::arg("breakpoints"), py::arg("kappa_init"),
          py::arg("options") = GaussNewtonOptions{},
          "Regularized Gauss-Newton recovery of piecewise-constant region values");
}
