#include "mersim/contingency.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace mersim {

long ContingencyEvent::first_hour() const { return static_cast<long>(std::floor(start_hour)); }

long ContingencyEvent::last_hour() const {
    return static_cast<long>(std::ceil(start_hour + duration_hours)) - 1;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace

// Substream rule: seed' = mix(mix(master ^ mix(replication)) ^ fnv1a(key)).
// Streams depend only on (seed, replication, key), never on sampling order.
SubstreamRng::SubstreamRng(std::uint64_t master_seed, std::uint64_t replication, const std::string& key)
    : engine_(splitmix64(splitmix64(master_seed ^ splitmix64(replication)) ^ fnv1a(key))) {}

double SubstreamRng::uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double SubstreamRng::exponential(double mean) {
    // inverse CDF on (0,1]; never returns +inf
    double u = uniform01();
    return -mean * std::log1p(-u);
}

namespace {

// Renewal history over [0, hours), shifted by `offset` into the horizon.
std::vector<OutageInterval> sample_renewal(const ComponentReliability& rel, double hours, double offset,
                                           SubstreamRng& rng) {
    std::vector<OutageInterval> out;
    if (rel.failure_rate_per_year <= 0.0) return out;
    const double mean_up = static_cast<double>(kHoursPerYear) / rel.failure_rate_per_year;
    double t = 0.0;
    while (true) {
        t += rng.exponential(mean_up);
        if (t >= hours) break;
        double down = rng.exponential(rel.mttr_hours);
        double clipped = std::min(down, hours - t);
        if (clipped > 0.0) out.push_back({offset + t, clipped});
        t += down;
        if (t >= hours) break;
    }
    return out;
}

}  // namespace

std::vector<OutageInterval> sample_component_history(const ComponentReliability& rel,
                                                     const SimulationHorizon& horizon,
                                                     SubstreamRng& rng) {
    return sample_renewal(rel, horizon.hours(), 0.0, rng);
}

std::vector<ContingencyEvent> merge_system_contingencies(
    const std::vector<std::pair<std::string, std::vector<OutageInterval>>>& per_component,
    const SimulationHorizon& horizon) {
    struct Tagged {
        double start, end;
        const std::string* id;
    };
    std::vector<Tagged> all;
    for (const auto& [id, intervals] : per_component)
        for (const OutageInterval& iv : intervals) {
            if (iv.duration_hours <= 0.0) continue;
            all.push_back({iv.start_hour, std::min(iv.end_hour(), horizon.hours()), &id});
        }
    std::sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) {
        if (a.start != b.start) return a.start < b.start;
        return *a.id < *b.id;
    });

    std::vector<ContingencyEvent> events;
    std::size_t i = 0;
    while (i < all.size()) {
        double start = all[i].start;
        double end = all[i].end;
        std::set<std::string> components{*all[i].id};
        std::size_t j = i + 1;
        while (j < all.size() && all[j].start < end) {
            end = std::max(end, all[j].end);
            components.insert(*all[j].id);
            ++j;
        }
        ContingencyEvent ev;
        ev.index = events.size();
        ev.failed_components.assign(components.begin(), components.end());
        ev.start_hour = start;
        ev.duration_hours = end - start;
        events.push_back(std::move(ev));
        i = j;
    }
    return events;
}

ReliabilityTable::Row ReliabilityTable::lookup(BranchKind kind, const std::string& id) const {
    if (auto it = by_id.find(id); it != by_id.end()) return it->second;
    const char* cls = kind == BranchKind::line          ? "line"
                      : kind == BranchKind::transformer ? "transformer"
                                                        : "switch";
    if (auto it = by_class.find(cls); it != by_class.end()) return it->second;
    throw std::runtime_error("reliability table has no row for class '" + std::string(cls) +
                             "' or id '" + id + "'");
}

ReliabilityTable parse_reliability_csv(const std::string& text, const std::string& origin) {
    ReliabilityTable table;
    std::istringstream in(text);
    std::string row;
    int line_no = 0;
    while (std::getline(in, row)) {
        ++line_no;
        std::string t = row;
        if (auto hash = t.find('#'); hash != std::string::npos) t.erase(hash);
        // strip whitespace
        t.erase(std::remove_if(t.begin(), t.end(), [](unsigned char c) { return std::isspace(c); }), t.end());
        if (t.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream rs(t);
        std::string cell;
        while (std::getline(rs, cell, ',')) cells.push_back(cell);
        if (cells.size() != 3)
            throw ParseError(origin, line_no, "expected 3 columns (component, failure_rate_per_year, mttr_hours)");
        if (cells[0] == "component_class_or_id" || cells[0] == "component") continue;  // header
        ReliabilityTable::Row r;
        try {
            r.failure_rate_per_year = std::stod(cells[1]);
            r.mttr_hours = std::stod(cells[2]);
        } catch (const std::exception&) {
            throw ParseError(origin, line_no, "invalid number in reliability row");
        }
        if (r.failure_rate_per_year < 0.0) throw ParseError(origin, line_no, "failure rate must be >= 0");
        if (r.mttr_hours <= 0.0) throw ParseError(origin, line_no, "mttr must be > 0");
        if (cells[0] == "line" || cells[0] == "transformer" || cells[0] == "switch")
            table.by_class[cells[0]] = r;
        else
            table.by_id[cells[0]] = r;
    }
    return table;
}

ReliabilityTable load_reliability_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open reliability file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_reliability_csv(buf.str(), path);
}

void assign_reliability(Feeder& f, const ReliabilityTable& table) {
    for (Branch& br : f.branches) {
        ReliabilityTable::Row r = table.lookup(br.kind, br.id);
        br.failure_rate_per_year = r.failure_rate_per_year;
        br.mttr_hours = r.mttr_hours;
    }
}

std::vector<ContingencyEvent> sample_system_events(const Feeder& f, const SimulationHorizon& horizon,
                                                   int replications) {
    if (replications < 1) throw std::invalid_argument("replications must be >= 1");
    const double total_hours = horizon.hours();
    std::vector<std::pair<std::string, std::vector<OutageInterval>>> histories;
    histories.reserve(f.branches.size());

    for (const Branch& br : f.branches) {
        ComponentReliability rel{br.id, br.failure_rate_per_year, br.mttr_hours};
        std::vector<OutageInterval> history;
        for (int r = 0; r < replications; ++r) {
            // contiguous horizon segment; the renewal process restarts per segment
            double seg_start = std::floor(total_hours * r / replications);
            double seg_end = std::floor(total_hours * (r + 1) / replications);
            if (r + 1 == replications) seg_end = total_hours;
            if (seg_end <= seg_start) continue;
            SubstreamRng rng(horizon.seed, static_cast<std::uint64_t>(r), br.id);
            std::vector<OutageInterval> seg = sample_renewal(rel, seg_end - seg_start, seg_start, rng);
            history.insert(history.end(), seg.begin(), seg.end());
        }
        histories.emplace_back(br.id, std::move(history));
    }
    return merge_system_contingencies(histories, horizon);
}

}  // namespace mersim
