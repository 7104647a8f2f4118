#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mersim/feeder.hpp"

namespace mersim {

struct RoadNetwork {
    struct Edge {
        std::size_t a = 0;
        std::size_t b = 0;
        double minutes = 0.0;
    };

    std::vector<std::string> node_ids;
    std::unordered_map<std::string, std::size_t> node_index;
    std::vector<Edge> edges;
    std::vector<std::vector<std::pair<std::size_t, double>>> adjacency;  // (node, minutes)
    std::vector<std::string> depots;                                     // sorted
    std::unordered_map<std::string, std::string> bus_to_node;            // feeder bus -> road node

    std::size_t index_of(const std::string& node_id) const;
    void rebuild_adjacency();
};

RoadNetwork parse_road_network(const std::string& text, const std::string& origin = "<roads>");
RoadNetwork load_road_network_file(const std::string& path);

/// Every feeder bus must map to exactly one road node; >= 1 depot required.
void validate_road_coverage(const RoadNetwork& net, const Feeder& f);

struct Route {
    std::string depot;
    std::string target;
    std::vector<std::string> path;  // depot..target inclusive; single node when depot == target
    double travel_minutes = 0.0;
};

/// Minimal-travel-time route (Dijkstra, nonnegative weights). Among equal-cost
/// routes the lexicographically smallest node sequence is returned. nullopt
/// when the target is unreachable.
std::optional<Route> shortest_route(const RoadNetwork& net, const std::string& depot,
                                    const std::string& target);

/// Best route over all depots to the road node mapped to `feeder_bus`;
/// travel-time ties break by depot id.
std::optional<Route> route_from_nearest_depot(const RoadNetwork& net, const std::string& feeder_bus);

double response_delay_hours(const Route& route, double installation_minutes);

}  // namespace mersim
