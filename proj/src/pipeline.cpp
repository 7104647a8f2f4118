#include "mersim/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace mersim {

namespace {

using ordered_json = nlohmann::ordered_json;

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

EventRecord analyze_one(const Feeder& feeder, const RoadNetwork& roads, const BaseSeries& base,
                        const ContingencyEvent& event, const AnalysisOptions& options,
                        std::atomic<std::size_t>& nonconverged, std::atomic<std::size_t>& violations) {
    EventRecord rec;
    rec.event = event;
    OperableGraph g = OperableGraph::make(feeder, event.failed_components, options.reconfiguration);
    rec.plan = build_restoration_plan(g);

    bool needs = !rec.plan.fully_restorable && rec.plan.isolated_load_kw_base > 0.0;
    if (!needs) {
        rec.outcome = contingency_outcome(event, rec.plan, 0.0, {});
        return rec;
    }

    std::optional<double> delay;
    if (std::optional<Route> route = route_from_nearest_depot(roads, rec.plan.mer_connection_bus))
        delay = response_delay_hours(*route, options.installation_minutes);

    // Hourly post-contingency substation flow on the reconfigured island.
    const long first = event.first_hour();
    const long last = event.last_hour();
    std::vector<double> p_after(static_cast<std::size_t>(last - first + 1), 0.0);
    const std::set<std::string> isolated(rec.plan.isolated_buses.begin(), rec.plan.isolated_buses.end());
    PowerFlowCase pf_case;
    pf_case.feeder = &feeder;
    pf_case.closed_set = rec.plan.closed_set;
    for (long h = first; h <= last; ++h) {
        auto k = static_cast<std::size_t>(h - first);
        if (base.lossless) {
            // lossless mode: served consumer load, scaled, no power flow
            double kw = 0.0;
            for (const LoadPoint& lp : feeder.loads) {
                if (lp.is_shunt_compensator() || isolated.count(lp.bus)) continue;
                kw += lp.total_kw() * feeder.profile_multiplier(lp.profile_id, h);
            }
            p_after[k] = kw;
            continue;
        }
        pf_case.hour = h;
        PowerFlowSolution sol = solve(pf_case);
        if (!sol.converged) {
            nonconverged.fetch_add(1, std::memory_order_relaxed);
            p_after[k] = base.at(h);  // skip the hour: zero deficit, reported
            continue;
        }
        if (sol.voltage_limit_violation) violations.fetch_add(1, std::memory_order_relaxed);
        p_after[k] = sol.substation_kw;
    }

    std::vector<double> p_net = net_power_series(base, first, p_after, event);
    rec.outcome = contingency_outcome(event, rec.plan, delay, p_net);
    return rec;
}

}  // namespace

RunResult analyze_events(const Feeder& feeder, const RoadNetwork& roads, const BaseSeries& base,
                         const std::vector<ContingencyEvent>& events, const AnalysisOptions& options) {
    RunResult result;
    result.records.resize(events.size());
    std::atomic<std::size_t> nonconverged{0}, violations{0};
    std::atomic<std::size_t> next{0};

    int n_threads = resolve_threads(options.threads);
    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= events.size()) break;
            result.records[i] =
                analyze_one(feeder, roads, base, events[i], options, nonconverged, violations);
        }
    };
    if (n_threads <= 1 || events.size() < 2) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    result.nonconverged_hours = nonconverged.load() + base.nonconverged_hours.size() * base.years;
    result.voltage_violation_hours = violations.load();

    std::vector<ContingencyOutcome> outcomes;
    outcomes.reserve(result.records.size());
    for (const EventRecord& rec : result.records) outcomes.push_back(rec.outcome);
    result.report = aggregate(outcomes);
    result.report_text = render_report_text(result.report);
    return result;
}

std::string render_report_text(const SizingReport& rep) {
    char buf[128];
    std::ostringstream os;
    auto row = [&](const char* label, const char* fmt, auto value) {
        std::snprintf(buf, sizeof buf, fmt, value);
        os << label;
        for (std::size_t pad = std::strlen(label); pad < 40; ++pad) os << ' ';
        os << buf << "\n";
    };
    os << "MER sizing summary\n";
    os << "------------------------------------------------\n";
    row("Average Size (kWh)", "%12.2f", rep.e_avg_kwh);
    row("Average Size (kW)", "%12.2f", rep.p_avg_kw);
    row("Maximum Size (kW)", "%12.2f", rep.p_max_kw);
    row("Average Duration Time (hours)", "%12.2f", rep.t_avg_hours);
    row("Average Size (kW, energy/duration)", "%12.2f", rep.e_avg_over_t_avg_kw);
    row("Contingencies requiring a MER", "%12zu", rep.n_cont);
    row("Total contingencies", "%12zu", rep.total_events);
    row("Fully restorable fraction", "%12.4f", rep.restorable_fraction);
    row("Unreachable contingencies", "%12zu", rep.unreachable_events);
    row("Unserved (late arrival)", "%12zu", rep.unserved_events);
    if (rep.no_mer_needed) os << "No MER needed over this horizon.\n";
    return os.str();
}

namespace {

ordered_json config_echo(const RunConfig& c) {
    ordered_json j;
    j["feeder"] = c.feeder_path;
    j["reliability"] = c.reliability_path;
    j["roads"] = c.roads_path;
    j["profile"] = c.profile_path;
    j["years"] = c.years;
    j["seed"] = c.seed;
    j["installation_minutes"] = c.installation_minutes;
    j["replications"] = c.replications;
    j["reconfiguration"] = c.reconfiguration;
    j["lossless_base"] = c.lossless_base;
    return j;
}

ordered_json report_body(const RunResult& result) {
    const SizingReport& rep = result.report;
    ordered_json j;
    j["sizing"] = {{"n_cont", rep.n_cont},
                   {"t_cont_hours", rep.t_cont_hours},
                   {"t_avg_hours", rep.t_avg_hours},
                   {"e_avg_kwh", rep.e_avg_kwh},
                   {"p_avg_kw", rep.p_avg_kw},
                   {"p_max_kw", rep.p_max_kw},
                   {"e_avg_over_t_avg_kw", rep.e_avg_over_t_avg_kw},
                   {"restorable_fraction", rep.restorable_fraction},
                   {"no_mer_needed", rep.no_mer_needed}};
    j["events"] = {{"total", rep.total_events},
                   {"restored", rep.restored_events},
                   {"needs_mer", rep.n_cont},
                   {"unreachable", rep.unreachable_events},
                   {"unserved_late_arrival", rep.unserved_events}};
    j["power_flow"] = {{"nonconverged_hours", result.nonconverged_hours},
                       {"voltage_limit_hours", result.voltage_violation_hours}};
    return j;
}

}  // namespace

std::string render_report_json(const RunConfig& config, const RunResult& result) {
    ordered_json j;
    j["config"] = config_echo(config);
    j.update(report_body(result));
    return j.dump(2) + "\n";
}

std::string render_diagnostics_jsonl(const RunResult& result) {
    std::ostringstream os;
    for (const EventRecord& rec : result.records) {
        const ContingencyOutcome& o = rec.outcome;
        const char* cls = !o.needs_mer ? "restored" : (o.route_unreachable ? "unreachable" : "needs_mer");
        ordered_json j;
        j["event_index"] = rec.event.index;
        j["start_hour"] = rec.event.start_hour;
        j["duration_hours"] = rec.event.duration_hours;
        j["failed_components"] = rec.event.failed_components;
        j["fully_restorable"] = rec.plan.fully_restorable;
        j["switch_ops"] = rec.plan.switch_operations;
        j["isolated_buses"] = rec.plan.isolated_buses;
        j["isolated_kw_base"] = rec.plan.isolated_load_kw_base;
        j["class"] = cls;
        j["response_delay_hours"] = o.response_delay_hours;
        j["e_net_kwh"] = o.e_net_kwh;
        j["p_max_kw"] = o.p_max_kw;
        j["p_avg_kw"] = o.p_avg_kw;
        os << j.dump() << "\n";
    }
    return os.str();
}

namespace {

std::vector<double> read_profile_csv_simple(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open profile file '" + path + "'");
    std::vector<double> vals;
    std::string row;
    while (std::getline(in, row)) {
        std::string t = row;
        if (auto hash = t.find('#'); hash != std::string::npos) t.erase(hash);
        auto b = t.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = t.find_last_not_of(" \t\r");
        t = t.substr(b, e - b + 1);
        if (t.empty()) continue;
        if (auto comma = t.find(','); comma != std::string::npos) t = t.substr(0, comma);
        vals.push_back(std::stod(t));
    }
    return vals;
}

void dump_base_voltages(const Feeder& feeder, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write voltage dump '" + path + "'");
    out << "hour,bus,phase,v_pu,angle_deg\n";
    PowerFlowCase pf_case;
    pf_case.feeder = &feeder;
    pf_case.closed_set = feeder.normally_closed_ids();
    char buf[64];
    for (long h = 0; h < kHoursPerYear; ++h) {
        pf_case.hour = h;
        PowerFlowSolution sol = solve(pf_case);
        for (std::size_t b = 0; b < feeder.buses.size(); ++b) {
            if (!sol.energized[b]) continue;
            for (Phase p : kPhases) {
                auto i = static_cast<std::size_t>(static_cast<int>(p));
                if (!feeder.buses[b].phases.has(p)) continue;
                cplx v = sol.v_pu[b][i];
                if (v == cplx{0.0, 0.0}) continue;
                std::snprintf(buf, sizeof buf, "%.6f,%.3f", std::abs(v),
                              std::arg(v) * 180.0 / std::numbers::pi);
                out << h << ',' << feeder.buses[b].id << ',' << "abc"[static_cast<int>(p)] << ',' << buf
                    << '\n';
            }
        }
    }
}

}  // namespace

RunResult run_pipeline(const RunConfig& config) {
    if (config.years < 1) throw std::invalid_argument("years must be >= 1");
    if (config.replications < 1) throw std::invalid_argument("replications must be >= 1");

    Feeder feeder = load_feeder_file(config.feeder_path);
    ReliabilityTable table = load_reliability_file(config.reliability_path);
    assign_reliability(feeder, table);
    RoadNetwork roads = load_road_network_file(config.roads_path);
    validate_road_coverage(roads, feeder);

    if (!config.profile_path.empty()) {
        LoadProfile prof;
        prof.id = "default";
        prof.multipliers = read_profile_csv_simple(config.profile_path);
        if (prof.multipliers.size() != kHoursPerYear)
            throw std::runtime_error("profile override must have exactly 8760 rows, found " +
                                     std::to_string(prof.multipliers.size()));
        for (double m : prof.multipliers)
            if (!(m >= 0.0)) throw std::runtime_error("profile override has a negative multiplier");
        feeder.profiles["default"] = std::move(prof);
    }

    BaseSeries base = base_year_run(feeder, config.years, config.lossless_base);

    SimulationHorizon horizon{config.years, config.seed};
    std::vector<ContingencyEvent> events = sample_system_events(feeder, horizon, config.replications);

    AnalysisOptions options;
    options.installation_minutes = config.installation_minutes;
    options.reconfiguration = config.reconfiguration;
    options.threads = config.threads;
    RunResult result = analyze_events(feeder, roads, base, events, options);
    result.report_json = render_report_json(config, result);

    std::filesystem::create_directories(config.out_dir);
    {
        std::ofstream out(std::filesystem::path(config.out_dir) / "report.json", std::ios::binary);
        out << result.report_json;
    }
    {
        std::ofstream out(std::filesystem::path(config.out_dir) / "report.txt", std::ios::binary);
        out << result.report_text;
    }
    if (!config.diagnostics_path.empty()) {
        std::ofstream out(config.diagnostics_path, std::ios::binary);
        out << render_diagnostics_jsonl(result);
    }
    if (!config.voltage_dump_path.empty()) dump_base_voltages(feeder, config.voltage_dump_path);
    return result;
}

}  // namespace mersim
