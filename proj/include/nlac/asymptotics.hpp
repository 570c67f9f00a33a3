#pragma once

#include <vector>

#include "nlac/timedomain.hpp"

namespace nlac {

// Which medium parameter the sweep drives to zero.
enum class SweepParameter { Tau, Delta };

// Runs the configured model at each parameter value plus once at the zero
// limit, then reports trajectory distances against the limit run. `base`
// carries everything else (equation, grid, time axis, boundary, initial
// data, source); the swept medium parameter is overridden per member.
struct SweepConfig {
    SweepParameter parameter = SweepParameter::Tau;
    std::vector<double> values;  // typically decreasing toward zero
    SimulationSetup base;
    // When a run stops early (non-contractive iteration at large parameter
    // values), the whole family is re-run on this fraction of the failing
    // horizon so all members stay comparable.
    double horizon_backoff = 0.9;
    int max_horizon_retries = 8;
};

struct SweepRow {
    double value = 0.0;       // parameter value of this member
    double rel_c_h1 = 0.0;    // sup_t H1(member - limit) / sup_t H1(limit)
    double rel_xbar_w = 0.0;  // energy-norm distance, same normalization
};

struct SweepResult {
    SweepParameter parameter = SweepParameter::Tau;
    std::vector<SweepRow> rows;  // one per requested value, in input order
    // strict decrease of rel_c_h1 along the rows as given
    bool monotone_c_h1 = false;
    double achieved_horizon = 0.0;  // final time actually compared
    FieldHistory limit;
    std::vector<FieldHistory> members;
};

SweepResult run_sweep(const SweepConfig& config);

}  // namespace nlac
