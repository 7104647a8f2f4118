#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mersim/feeder.hpp"

namespace mersim {

struct ComponentReliability {
    std::string component_id;
    double failure_rate_per_year = 0.0;  // lambda
    double mttr_hours = 1.0;
};

struct SimulationHorizon {
    int years = 1;
    std::uint64_t seed = 0;
    double hours() const { return static_cast<double>(kHoursPerYear) * years; }
};

struct OutageInterval {
    double start_hour = 0.0;
    double duration_hours = 0.0;
    double end_hour() const { return start_hour + duration_hours; }
};

/// One system contingency: the union of overlapping component down-intervals.
struct ContingencyEvent {
    std::size_t index = 0;
    std::vector<std::string> failed_components;  // sorted, unique
    double start_hour = 0.0;
    double duration_hours = 0.0;

    double end_hour() const { return start_hour + duration_hours; }
    // Hourly footprint used for power-flow coordination.
    long first_hour() const;
    long last_hour() const;
};

/// Deterministic substream: every draw depends only on (seed, replication, key).
class SubstreamRng {
  public:
    SubstreamRng(std::uint64_t master_seed, std::uint64_t replication, const std::string& key);
    explicit SubstreamRng(std::uint64_t raw_seed) : engine_(raw_seed) {}

    double uniform01();               // in [0, 1), 53-bit
    double exponential(double mean);  // inverse-CDF, portable across stdlibs

  private:
    std::mt19937_64 engine_;
};

/// Alternating up/down renewal history for one component, truncated at the
/// horizon. Up times are exponential with mean 1/lambda years, repair times
/// exponential with mean mttr hours. lambda = 0 yields an empty history.
std::vector<OutageInterval> sample_component_history(const ComponentReliability& rel,
                                                     const SimulationHorizon& horizon,
                                                     SubstreamRng& rng);

/// Unions overlapping component down-intervals into disjoint system events,
/// sorted by start hour.
std::vector<ContingencyEvent> merge_system_contingencies(
    const std::vector<std::pair<std::string, std::vector<OutageInterval>>>& per_component,
    const SimulationHorizon& horizon);

/// Reliability table: per-class rows ("line", "transformer", "switch") with
/// optional per-id overrides.
struct ReliabilityTable {
    struct Row {
        double failure_rate_per_year = 0.0;
        double mttr_hours = 1.0;
    };
    std::map<std::string, Row> by_class;
    std::map<std::string, Row> by_id;

    Row lookup(BranchKind kind, const std::string& id) const;
};

ReliabilityTable parse_reliability_csv(const std::string& text, const std::string& origin = "<csv>");
ReliabilityTable load_reliability_file(const std::string& path);

/// Copies table rates onto every branch of the feeder.
void assign_reliability(Feeder& f, const ReliabilityTable& table);

/// Samples all branch histories and merges them into the system event list.
/// Replications partition the horizon into contiguous, independently seeded
/// segments; each (replication, component) pair draws from its own substream.
std::vector<ContingencyEvent> sample_system_events(const Feeder& f,
                                                   const SimulationHorizon& horizon,
                                                   int replications = 1);

}  // namespace mersim
