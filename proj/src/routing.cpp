#include "mersim/routing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

namespace mersim {

std::size_t RoadNetwork::index_of(const std::string& node_id) const {
    auto it = node_index.find(node_id);
    if (it == node_index.end()) throw std::out_of_range("unknown road node '" + node_id + "'");
    return it->second;
}

void RoadNetwork::rebuild_adjacency() {
    adjacency.assign(node_ids.size(), {});
    for (const Edge& e : edges) {
        adjacency[e.a].push_back({e.b, e.minutes});
        adjacency[e.b].push_back({e.a, e.minutes});
    }
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> cells;
    std::istringstream is(s);
    std::string cell;
    while (std::getline(is, cell, ',')) cells.push_back(trim(cell));
    return cells;
}

}  // namespace

// Format: an [edges] section of `node_a,node_b,minutes` rows and a [tags]
// section of `node,depot` or `node,bus=<feeder bus>` rows. '#' comments.
RoadNetwork parse_road_network(const std::string& text, const std::string& origin) {
    RoadNetwork net;
    auto intern = [&](const std::string& id) {
        auto it = net.node_index.find(id);
        if (it != net.node_index.end()) return it->second;
        std::size_t idx = net.node_ids.size();
        net.node_ids.push_back(id);
        net.node_index[id] = idx;
        return idx;
    };

    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    enum class Mode { none, edges, tags } mode = Mode::none;
    std::set<std::string> depot_set;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line == "[edges]") {
            mode = Mode::edges;
            continue;
        }
        if (line == "[tags]") {
            mode = Mode::tags;
            continue;
        }
        if (line.front() == '[') throw ParseError(origin, line_no, "unknown section '" + line + "'");
        std::vector<std::string> cells = split_csv(line);
        if (mode == Mode::edges) {
            if (cells.size() != 3) throw ParseError(origin, line_no, "edge rows need node_a,node_b,minutes");
            if (cells[0] == "node_a") continue;  // header
            double minutes = 0.0;
            try {
                minutes = std::stod(cells[2]);
            } catch (const std::exception&) {
                throw ParseError(origin, line_no, "invalid travel time '" + cells[2] + "'");
            }
            if (!(minutes > 0.0) || !std::isfinite(minutes))
                throw ParseError(origin, line_no, "travel time must be positive and finite");
            if (cells[0] == cells[1]) throw ParseError(origin, line_no, "self-loop road edge");
            net.edges.push_back({intern(cells[0]), intern(cells[1]), minutes});
        } else if (mode == Mode::tags) {
            if (cells.size() != 2) throw ParseError(origin, line_no, "tag rows need node,tag");
            std::size_t node = intern(cells[0]);
            (void)node;
            if (cells[1] == "depot") {
                depot_set.insert(cells[0]);
            } else if (cells[1].rfind("bus=", 0) == 0) {
                std::string bus = cells[1].substr(4);
                if (bus.empty()) throw ParseError(origin, line_no, "empty bus mapping");
                if (net.bus_to_node.count(bus))
                    throw ParseError(origin, line_no, "feeder bus '" + bus + "' mapped to two road nodes");
                net.bus_to_node[bus] = cells[0];
            } else {
                throw ParseError(origin, line_no, "unknown tag '" + cells[1] + "'");
            }
        } else {
            throw ParseError(origin, line_no, "row before any section header");
        }
    }
    net.depots.assign(depot_set.begin(), depot_set.end());
    if (net.depots.empty()) throw ParseError(origin, 0, "road network declares no depot");
    net.rebuild_adjacency();
    return net;
}

RoadNetwork load_road_network_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open road network file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_road_network(buf.str(), path);
}

void validate_road_coverage(const RoadNetwork& net, const Feeder& f) {
    for (const Bus& b : f.buses)
        if (!net.bus_to_node.count(b.id))
            throw std::runtime_error("road network maps no node to feeder bus '" + b.id + "'");
}

namespace {

std::vector<double> dijkstra(const RoadNetwork& net, std::size_t source) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(net.node_ids.size(), inf);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[source] = 0.0;
    heap.push({0.0, source});
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[u]) continue;
        for (auto [v, w] : net.adjacency[u]) {
            if (dist[u] + w < dist[v]) {
                dist[v] = dist[u] + w;
                heap.push({dist[v], v});
            }
        }
    }
    return dist;
}

}  // namespace

std::optional<Route> shortest_route(const RoadNetwork& net, const std::string& depot,
                                    const std::string& target) {
    std::size_t s = net.index_of(depot);
    std::size_t t = net.index_of(target);

    Route route;
    route.depot = depot;
    route.target = target;
    if (s == t) {
        route.path = {depot};
        route.travel_minutes = 0.0;
        return route;
    }

    // Distances measured to the target, then a greedy forward walk picks the
    // lexicographically smallest node sequence among cost-optimal paths.
    std::vector<double> to_target = dijkstra(net, t);
    if (!std::isfinite(to_target[s])) return std::nullopt;

    route.travel_minutes = to_target[s];
    std::size_t cur = s;
    route.path.push_back(net.node_ids[cur]);
    const double eps = 1e-9;
    while (cur != t) {
        std::size_t best = cur;
        bool found = false;
        for (auto [v, w] : net.adjacency[cur]) {
            if (std::abs(w + to_target[v] - to_target[cur]) > eps * std::max(1.0, to_target[cur])) continue;
            if (!found || net.node_ids[v] < net.node_ids[best]) {
                best = v;
                found = true;
            }
        }
        if (!found) return std::nullopt;  // numerical dead end; cannot happen with exact weights
        cur = best;
        route.path.push_back(net.node_ids[cur]);
    }
    return route;
}

std::optional<Route> route_from_nearest_depot(const RoadNetwork& net, const std::string& feeder_bus) {
    auto it = net.bus_to_node.find(feeder_bus);
    if (it == net.bus_to_node.end()) return std::nullopt;
    std::optional<Route> best;
    for (const std::string& depot : net.depots) {  // depots sorted: ties pick the first id
        std::optional<Route> r = shortest_route(net, depot, it->second);
        if (!r) continue;
        if (!best || r->travel_minutes < best->travel_minutes) best = r;
    }
    return best;
}

double response_delay_hours(const Route& route, double installation_minutes) {
    if (installation_minutes < 0.0) throw std::invalid_argument("installation time must be >= 0");
    return (route.travel_minutes + installation_minutes) / 60.0;
}

}  // namespace mersim
