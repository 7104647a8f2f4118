#include "mersim/sizing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mersim {

std::vector<double> net_power_series(const BaseSeries& base, long after_first_hour,
                                     const std::vector<double>& p_after_kw,
                                     const ContingencyEvent& event) {
    const long first = event.first_hour();
    const long last = event.last_hour();
    const auto hours = static_cast<std::size_t>(last - first + 1);
    if (after_first_hour != first || p_after_kw.size() != hours)
        throw std::logic_error("post-contingency series is not aligned with the event hours");
    if (last >= base.horizon_hours() + kHoursPerYear)  // allow spill past the horizon edge
        throw std::logic_error("event extends beyond the base series horizon");

    std::vector<double> p_net(hours, 0.0);
    for (std::size_t k = 0; k < hours; ++k) {
        double deficit = base.at(first + static_cast<long>(k)) - p_after_kw[k];
        p_net[k] = std::max(0.0, deficit);
    }
    return p_net;
}

ContingencyOutcome contingency_outcome(const ContingencyEvent& event, const RestorationPlan& plan,
                                       std::optional<double> response_delay_hours,
                                       const std::vector<double>& p_net_kw) {
    ContingencyOutcome out;
    out.event_index = event.index;
    out.event_duration_hours = event.duration_hours;
    out.needs_mer = !plan.fully_restorable && plan.isolated_load_kw_base > 0.0;
    out.first_hour = event.first_hour();
    out.p_net_kw = p_net_kw;

    if (!out.needs_mer) return out;

    if (!response_delay_hours) {
        out.route_unreachable = true;
        out.served_none = true;
        return out;
    }
    out.response_delay_hours = *response_delay_hours;

    const double served_from = event.start_hour + out.response_delay_hours;
    const double served_to = event.end_hour();
    if (served_from >= served_to) {
        out.served_none = true;
        return out;
    }
    out.served_duration_hours = served_to - served_from;

    // Integrate the hourly deficit over the served interval; partial first and
    // last hours prorate linearly.
    const long first = event.first_hour();
    for (std::size_t k = 0; k < p_net_kw.size(); ++k) {
        double hour_begin = static_cast<double>(first + static_cast<long>(k));
        double hour_end = hour_begin + 1.0;
        double overlap = std::min(hour_end, served_to) - std::max(hour_begin, served_from);
        if (overlap <= 0.0) continue;
        out.e_net_kwh += p_net_kw[k] * overlap;
        out.p_max_kw = std::max(out.p_max_kw, p_net_kw[k]);
    }
    out.p_avg_kw = out.e_net_kwh / out.served_duration_hours;
    return out;
}

SizingReport aggregate(const std::vector<ContingencyOutcome>& outcomes) {
    SizingReport rep;
    rep.total_events = outcomes.size();
    for (const ContingencyOutcome& o : outcomes) {
        if (!o.needs_mer) {
            rep.restored_events++;
            continue;
        }
        if (o.route_unreachable) {
            rep.unreachable_events++;
            continue;
        }
        rep.n_cont++;
        if (o.served_none) rep.unserved_events++;
        rep.t_cont_hours += o.event_duration_hours;
        rep.e_avg_kwh += o.e_net_kwh;
        rep.p_max_kw += o.p_max_kw;
        rep.p_avg_kw += o.p_avg_kw;
    }
    if (rep.n_cont == 0) {
        rep.no_mer_needed = true;
        rep.t_cont_hours = 0.0;
    } else {
        auto n = static_cast<double>(rep.n_cont);
        rep.t_avg_hours = rep.t_cont_hours / n;
        rep.e_avg_kwh /= n;
        rep.p_max_kw /= n;
        rep.p_avg_kw /= n;
        if (rep.t_avg_hours > 0.0) rep.e_avg_over_t_avg_kw = rep.e_avg_kwh / rep.t_avg_hours;
    }
    if (rep.total_events > 0)
        rep.restorable_fraction =
            static_cast<double>(rep.restored_events) / static_cast<double>(rep.total_events);
    return rep;
}

}  // namespace mersim
