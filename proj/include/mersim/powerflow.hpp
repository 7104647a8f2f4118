#pragma once

#include <array>
#include <string>
#include <vector>

#include "mersim/feeder.hpp"

namespace mersim {

struct PowerFlowOptions {
    double tolerance_pu = 1e-8;  // max per-phase voltage change between sweeps
    int max_iterations = 100;
    double v_low_pu = 0.9;
    double v_high_pu = 1.1;
};

struct PowerFlowCase {
    const Feeder* feeder = nullptr;
    std::vector<std::string> closed_set;  // must be radial on its energized island
    long hour = 0;                        // selects the profile multiplier (mod 8760)
};

struct PowerFlowSolution {
    bool converged = false;
    int iterations = 0;
    double max_mismatch_pu = 0.0;

    std::vector<std::array<cplx, 3>> v_pu;    // per bus; zeros when de-energized
    std::vector<bool> energized;              // per bus
    std::vector<std::array<cplx, 3>> i_amps;  // per branch, receiving-side amps

    double substation_kw = 0.0;
    double substation_kvar = 0.0;
    double shed_kw = 0.0;  // energized load with no deliverable phase path
    bool voltage_limit_violation = false;
    double balance_mismatch_rel = 0.0;  // |S_sub - S_load - S_loss| / |S_sub|
};

/// Backward/forward sweep over the radial energized island(s). Throws
/// std::invalid_argument when closed_set is not radial.
PowerFlowSolution solve(const PowerFlowCase& pf_case, const PowerFlowOptions& options = {});

/// Hourly substation real power for the intact feeder, one profile year tiled
/// across the horizon. Lossless mode sums scaled consumer load instead of
/// solving power flow.
struct BaseSeries {
    std::vector<double> kw_year;  // 8760 entries
    int years = 1;
    bool lossless = false;
    std::vector<long> nonconverged_hours;
    std::size_t voltage_violation_count = 0;

    double at(long hour) const { return kw_year[static_cast<std::size_t>(hour % kHoursPerYear)]; }
    long horizon_hours() const { return static_cast<long>(kHoursPerYear) * years; }
};

BaseSeries base_year_run(const Feeder& f, int years, bool lossless = false,
                         const PowerFlowOptions& options = {});

}  // namespace mersim
