#include "mersim/reconfig.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>

namespace mersim {

namespace {

struct Dsu {
    std::vector<std::size_t> parent;
    explicit Dsu(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[b] = a;
        return true;
    }
};

}  // namespace

OperableGraph OperableGraph::make(const Feeder& f, const std::vector<std::string>& failed,
                                  bool ties_available) {
    OperableGraph g;
    g.feeder = &f;
    g.failed_components = failed;
    std::sort(g.failed_components.begin(), g.failed_components.end());
    g.ties_available = ties_available;
    std::set<std::string> failed_set(failed.begin(), failed.end());
    for (const std::string& id : failed_set) (void)f.branch_index(id);  // reject unknown ids
    for (std::size_t i = 0; i < f.branches.size(); ++i) {
        const Branch& br = f.branches[i];
        if (failed_set.count(br.id)) continue;
        if (!ties_available && br.normally_open) continue;
        g.usable.push_back(i);
    }
    return g;
}

bool is_fully_restorable(const OperableGraph& g) {
    const Feeder& f = *g.feeder;
    Dsu dsu(f.buses.size());
    for (std::size_t bi : g.usable) {
        const Branch& br = f.branches[bi];
        dsu.unite(f.bus_index(br.from), f.bus_index(br.to));
    }
    std::set<std::size_t> roots;
    for (std::size_t s : f.substations()) roots.insert(dsu.find(s));
    for (const LoadPoint& lp : f.loads)
        if (!roots.count(dsu.find(f.bus_index(lp.bus)))) return false;
    return true;
}

RestorationPlan build_restoration_plan(const OperableGraph& g) {
    const Feeder& f = *g.feeder;
    const std::size_t n = f.buses.size();

    // Kruskal over usable branches. Non-switch branches stay in circuit and go
    // first (they are acyclic by construction); then normally-closed switches,
    // then ties; id order within each class keeps the result deterministic.
    std::vector<std::size_t> order = g.usable;
    auto rank = [&](std::size_t bi) {
        const Branch& br = f.branches[bi];
        if (!br.is_switch()) return 0;
        return br.normally_open ? 2 : 1;
    };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        int ra = rank(a), rb = rank(b);
        if (ra != rb) return ra < rb;
        return f.branches[a].id < f.branches[b].id;
    });

    Dsu dsu(n);
    // Substations are pre-joined so no radial path ever ties two of them together.
    std::vector<std::size_t> subs = f.substations();
    for (std::size_t i = 1; i < subs.size(); ++i) dsu.unite(subs[0], subs[i]);

    std::vector<std::size_t> selected;
    for (std::size_t bi : order) {
        const Branch& br = f.branches[bi];
        if (dsu.unite(f.bus_index(br.from), f.bus_index(br.to))) selected.push_back(bi);
    }

    std::vector<char> energized(n, 0);
    if (!subs.empty()) {
        std::size_t root = dsu.find(subs[0]);
        for (std::size_t b = 0; b < n; ++b) energized[b] = (dsu.find(b) == root);
    }

    RestorationPlan plan;
    for (std::size_t bi : selected) {
        const Branch& br = f.branches[bi];
        if (energized[f.bus_index(br.from)] && energized[f.bus_index(br.to)])
            plan.closed_set.push_back(br.id);
    }
    std::sort(plan.closed_set.begin(), plan.closed_set.end());
    std::set<std::string> closed(plan.closed_set.begin(), plan.closed_set.end());

    for (std::size_t b = 0; b < n; ++b)
        if (!energized[b]) plan.isolated_buses.push_back(f.buses[b].id);
    std::sort(plan.isolated_buses.begin(), plan.isolated_buses.end());
    plan.fully_restorable = plan.isolated_buses.empty();

    for (std::size_t b = 0; b < n; ++b)
        if (!energized[b]) plan.isolated_load_kw_base += f.consumer_kw_at(b);

    // Switching operations vs. the normal state: ties closed plus live
    // sectionalizing switches opened to keep the island radial.
    for (std::size_t bi : g.usable) {
        const Branch& br = f.branches[bi];
        if (!br.is_switch()) continue;
        bool live = energized[f.bus_index(br.from)] && energized[f.bus_index(br.to)];
        if (!live) continue;
        bool in_tree = closed.count(br.id) != 0;
        if (br.normally_open && in_tree) plan.switch_operations++;
        if (!br.normally_open && !in_tree) plan.switch_operations++;
    }

    // MER connection point: the isolated endpoint of the boundary branch whose
    // energized endpoint sits closest (intact-feeder hops) to a substation.
    if (!plan.fully_restorable) {
        std::vector<std::vector<std::size_t>> adj(n);
        for (const Branch& br : f.branches) {
            adj[f.bus_index(br.from)].push_back(f.bus_index(br.to));
            adj[f.bus_index(br.to)].push_back(f.bus_index(br.from));
        }
        std::vector<long> dist(n, -1);
        std::deque<std::size_t> queue;
        for (std::size_t s : subs) {
            dist[s] = 0;
            queue.push_back(s);
        }
        while (!queue.empty()) {
            std::size_t u = queue.front();
            queue.pop_front();
            for (std::size_t v : adj[u])
                if (dist[v] < 0) {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
        }
        long best = -1;
        std::string best_branch, best_bus;
        for (const Branch& br : f.branches) {
            std::size_t u = f.bus_index(br.from), v = f.bus_index(br.to);
            if (energized[u] == energized[v]) continue;
            std::size_t live = energized[u] ? u : v;
            std::size_t dead = energized[u] ? v : u;
            if (dist[live] < 0) continue;
            if (best < 0 || dist[live] < best || (dist[live] == best && br.id < best_branch)) {
                best = dist[live];
                best_branch = br.id;
                best_bus = f.buses[dead].id;
            }
        }
        if (best_bus.empty() && !plan.isolated_buses.empty()) best_bus = plan.isolated_buses.front();
        plan.mer_connection_bus = best_bus;
    }
    return plan;
}

namespace {

// det of the reduced Laplacian via Gaussian elimination
double component_tree_count(const std::vector<std::size_t>& vertices,
                            const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    const std::size_t k = vertices.size();
    if (k <= 1) return 1.0;
    std::vector<std::size_t> pos(*std::max_element(vertices.begin(), vertices.end()) + 1, 0);
    for (std::size_t i = 0; i < k; ++i) pos[vertices[i]] = i;

    const std::size_t m = k - 1;  // drop the last row/column
    std::vector<long double> a(m * m, 0.0L);
    auto at = [&](std::size_t r, std::size_t c) -> long double& { return a[r * m + c]; };
    for (const auto& [u, v] : edges) {
        std::size_t pu = pos[u], pv = pos[v];
        if (pu < m) at(pu, pu) += 1.0L;
        if (pv < m) at(pv, pv) += 1.0L;
        if (pu < m && pv < m) {
            at(pu, pv) -= 1.0L;
            at(pv, pu) -= 1.0L;
        }
    }
    long double det = 1.0L;
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < m; ++r)
            if (std::abs(at(r, col)) > std::abs(at(pivot, col))) pivot = r;
        if (at(pivot, col) == 0.0L) return 0.0;
        if (pivot != col) {
            for (std::size_t c = col; c < m; ++c) std::swap(at(pivot, c), at(col, c));
            det = -det;
        }
        det *= at(col, col);
        for (std::size_t r = col + 1; r < m; ++r) {
            long double factor = at(r, col) / at(col, col);
            for (std::size_t c = col; c < m; ++c) at(r, c) -= factor * at(col, c);
        }
    }
    return static_cast<double>(std::llround(static_cast<double>(det)));
}

}  // namespace

double spanning_tree_count(const OperableGraph& g) {
    const Feeder& f = *g.feeder;
    const std::size_t n = f.buses.size();
    Dsu dsu(n);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t bi : g.usable) {
        const Branch& br = f.branches[bi];
        std::size_t u = f.bus_index(br.from), v = f.bus_index(br.to);
        edges.push_back({u, v});
        dsu.unite(u, v);
    }
    std::map<std::size_t, std::vector<std::size_t>> comps;
    for (std::size_t b = 0; b < n; ++b) comps[dsu.find(b)].push_back(b);

    double product = 1.0;
    for (auto& [root, vertices] : comps) {
        std::vector<std::pair<std::size_t, std::size_t>> comp_edges;
        for (const auto& e : edges)
            if (dsu.find(e.first) == root) comp_edges.push_back(e);
        product *= component_tree_count(vertices, comp_edges);
    }
    return product;
}

}  // namespace mersim
