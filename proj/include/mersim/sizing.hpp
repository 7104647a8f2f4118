#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mersim/contingency.hpp"
#include "mersim/powerflow.hpp"
#include "mersim/reconfig.hpp"

namespace mersim {

struct ContingencyOutcome {
    std::size_t event_index = 0;
    bool needs_mer = false;
    bool route_unreachable = false;
    bool served_none = false;  // MER arrived at or after the contingency ended

    double event_duration_hours = 0.0;
    double response_delay_hours = 0.0;
    long first_hour = 0;
    std::vector<double> p_net_kw;  // per event hour, clamped at zero

    double served_duration_hours = 0.0;
    double e_net_kwh = 0.0;
    double p_max_kw = 0.0;  // max hourly deficit over served hours
    double p_avg_kw = 0.0;  // e_net / served duration
};

/// Hourly deficit max(0, P_base - P_after) over the event's hour footprint.
/// `after_first_hour` must equal the event's first hour and `p_after_kw` must
/// cover every event hour; misalignment throws std::logic_error.
std::vector<double> net_power_series(const BaseSeries& base, long after_first_hour,
                                     const std::vector<double>& p_after_kw,
                                     const ContingencyEvent& event);

/// Integrates the hourly deficit over the interval the MER actually serves,
/// [start + delay, end), prorating partial hours linearly. A nullopt delay
/// marks an unreachable route (zero served energy).
ContingencyOutcome contingency_outcome(const ContingencyEvent& event, const RestorationPlan& plan,
                                       std::optional<double> response_delay_hours,
                                       const std::vector<double>& p_net_kw);

struct SizingReport {
    std::size_t n_cont = 0;            // contingencies requiring a MER (reachable)
    std::size_t total_events = 0;
    std::size_t restored_events = 0;   // no load isolated after reconfiguration
    std::size_t unreachable_events = 0;
    std::size_t unserved_events = 0;   // needed a MER but it arrived too late

    double t_cont_hours = 0.0;
    double t_avg_hours = 0.0;
    double e_avg_kwh = 0.0;
    double p_max_kw = 0.0;
    double p_avg_kw = 0.0;
    double e_avg_over_t_avg_kw = 0.0;  // alternate average-power figure
    double restorable_fraction = 0.0;
    bool no_mer_needed = false;
};

/// Averages over needs-MER outcomes; unreachable outcomes are excluded from
/// n_cont and counted separately.
SizingReport aggregate(const std::vector<ContingencyOutcome>& outcomes);

}  // namespace mersim
