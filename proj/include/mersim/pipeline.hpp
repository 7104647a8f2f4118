#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mersim/contingency.hpp"
#include "mersim/feeder.hpp"
#include "mersim/powerflow.hpp"
#include "mersim/routing.hpp"
#include "mersim/sizing.hpp"

namespace mersim {

struct RunConfig {
    std::string feeder_path;
    std::string reliability_path;
    std::string roads_path;
    std::string profile_path;  // optional override for profile "default"

    int years = 1;
    std::uint64_t seed = 0;
    double installation_minutes = 15.0;
    int replications = 1;
    int threads = 0;  // 0 = hardware concurrency; never affects results

    bool reconfiguration = true;
    bool lossless_base = false;

    std::string out_dir = ".";
    std::string diagnostics_path;   // optional JSON-lines dump
    std::string voltage_dump_path;  // optional base-year per-hour CSV
};

struct EventRecord {
    ContingencyEvent event;
    RestorationPlan plan;
    ContingencyOutcome outcome;
};

struct RunResult {
    SizingReport report;
    std::vector<EventRecord> records;  // ordered by event index
    std::size_t nonconverged_hours = 0;
    std::size_t voltage_violation_hours = 0;
    std::string report_json;  // deterministic serialization
    std::string report_text;
};

/// Full pipeline: load data, base-year power flow, outage sampling, per-event
/// reconfiguration / power flow / routing / sizing, aggregation, artifacts.
RunResult run_pipeline(const RunConfig& config);

struct AnalysisOptions {
    double installation_minutes = 15.0;
    bool reconfiguration = true;
    int threads = 0;
};

/// The per-event analysis stage on a caller-supplied event list (used by the
/// sampled path and by scripted scenarios alike).
RunResult analyze_events(const Feeder& feeder, const RoadNetwork& roads, const BaseSeries& base,
                         const std::vector<ContingencyEvent>& events, const AnalysisOptions& options);

std::string render_report_text(const SizingReport& report);
std::string render_report_json(const RunConfig& config, const RunResult& result);
std::string render_diagnostics_jsonl(const RunResult& result);

}  // namespace mersim
