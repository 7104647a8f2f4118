#include "mersim/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

namespace mersim {

namespace {

// Per-unit system: 1 MVA three-phase power base, so the per-phase power base
// is 1000/3 kVA and Zbase in ohms equals (nominal kV_LL)^2.
constexpr double kPhaseBaseKva = 1000.0 / 3.0;

std::array<cplx, 3> source_rotation() {
    const double a = 2.0 * std::numbers::pi / 3.0;
    return {cplx{1.0, 0.0}, std::polar(1.0, -a), std::polar(1.0, a)};
}

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

struct Topology {
    std::vector<std::size_t> closed;           // branch indices
    std::vector<char> energized;               // per bus
    std::vector<std::size_t> bfs_order;        // energized buses, roots first
    std::vector<long> parent_bus;              // -1 at roots
    std::vector<long> parent_branch;           // -1 at roots
    std::vector<PhaseSet> deliverable;         // phases fed from the root
};

Topology build_topology(const Feeder& f, const std::vector<std::string>& closed_set) {
    const std::size_t n = f.buses.size();
    Topology topo;
    topo.energized.assign(n, 0);
    topo.parent_bus.assign(n, -1);
    topo.parent_branch.assign(n, -1);
    topo.deliverable.assign(n, PhaseSet{});

    Dsu dsu(n);
    std::vector<std::size_t> subs = f.substations();
    // Two substations on one radial island would fight over the slack role.
    Dsu sub_guard(n);
    for (std::size_t i = 1; i < subs.size(); ++i) sub_guard.unite(subs[0], subs[i]);

    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(n);  // (bus, branch)
    for (const std::string& id : closed_set) {
        std::size_t bi = f.branch_index(id);
        const Branch& br = f.branches[bi];
        std::size_t u = f.bus_index(br.from), v = f.bus_index(br.to);
        if (!dsu.unite(u, v)) throw std::invalid_argument("closed set is not radial: loop through '" + id + "'");
        if (!sub_guard.unite(u, v))
            throw std::invalid_argument("closed set connects two substations through '" + id + "'");
        topo.closed.push_back(bi);
        adj[u].push_back({v, bi});
        adj[v].push_back({u, bi});
    }

    for (std::size_t s : subs) {
        if (topo.energized[s]) continue;
        topo.energized[s] = 1;
        topo.deliverable[s] = f.buses[s].phases;
        topo.bfs_order.push_back(s);
        std::size_t head = topo.bfs_order.size() - 1;
        while (head < topo.bfs_order.size()) {
            std::size_t u = topo.bfs_order[head++];
            for (auto [v, bi] : adj[u]) {
                if (topo.energized[v]) continue;
                topo.energized[v] = 1;
                topo.parent_bus[v] = static_cast<long>(u);
                topo.parent_branch[v] = static_cast<long>(bi);
                topo.deliverable[v] =
                    topo.deliverable[u].intersect(f.branches[bi].phases).intersect(f.buses[v].phases);
                topo.bfs_order.push_back(v);
            }
        }
    }
    return topo;
}

cplx load_current(LoadModel model, cplx s_pu, cplx v) {
    double mag = std::abs(v);
    if (mag < 1e-9) return {0.0, 0.0};
    switch (model) {
        case LoadModel::constant_power: return std::conj(s_pu / v);
        case LoadModel::constant_current: return std::conj(s_pu) * (v / mag);
        case LoadModel::constant_impedance: return std::conj(s_pu) * v;
    }
    return {0.0, 0.0};
}

cplx drawn_power(LoadModel model, cplx s_pu, cplx v) {
    double mag = std::abs(v);
    switch (model) {
        case LoadModel::constant_power: return s_pu;
        case LoadModel::constant_current: return s_pu * mag;
        case LoadModel::constant_impedance: return s_pu * (mag * mag);
    }
    return {0.0, 0.0};
}

}  // namespace

PowerFlowSolution solve(const PowerFlowCase& pf_case, const PowerFlowOptions& options) {
    const Feeder& f = *pf_case.feeder;
    const std::size_t n_bus = f.buses.size();
    const std::size_t n_br = f.branches.size();
    const std::array<cplx, 3> rot = source_rotation();

    Topology topo = build_topology(f, pf_case.closed_set);

    // Scaled per-phase loads (pu), grouped by bus; deliverability decides shed.
    struct BusLoad {
        LoadModel model;
        std::array<cplx, 3> s_pu{};
    };
    std::vector<std::vector<BusLoad>> bus_loads(n_bus);
    double shed_kw = 0.0;
    for (const LoadPoint& lp : f.loads) {
        std::size_t b = f.bus_index(lp.bus);
        if (!topo.energized[b]) continue;
        double mult = f.profile_multiplier(lp.profile_id, pf_case.hour);
        BusLoad bl;
        bl.model = lp.model;
        bool any = false;
        for (Phase p : kPhases) {
            auto i = static_cast<std::size_t>(static_cast<int>(p));
            if (!lp.phases.has(p)) continue;
            cplx s{lp.kw[i] * mult / kPhaseBaseKva, lp.kvar[i] * mult / kPhaseBaseKva};
            if (topo.deliverable[b].has(p)) {
                bl.s_pu[i] = s;
                any = true;
            } else {
                shed_kw += lp.kw[i] * mult;
            }
        }
        if (any) bus_loads[b].push_back(bl);
    }

    PowerFlowSolution sol;
    sol.v_pu.assign(n_bus, {});
    sol.energized.assign(n_bus, false);
    sol.i_amps.assign(n_br, {});
    sol.shed_kw = shed_kw;

    // Flat start at the source rotation on deliverable phases.
    for (std::size_t b : topo.bfs_order) {
        sol.energized[b] = true;
        for (Phase p : kPhases) {
            auto i = static_cast<std::size_t>(static_cast<int>(p));
            if (topo.deliverable[b].has(p)) sol.v_pu[b][i] = rot[i];
        }
    }

    std::vector<std::array<cplx, 3>> branch_i(n_br, std::array<cplx, 3>{});
    std::vector<std::array<cplx, 3>> inject(n_bus);

    double mismatch = 0.0;
    int iter = 0;
    for (iter = 1; iter <= options.max_iterations; ++iter) {
        // backward: accumulate load currents from the leaves toward the roots
        for (std::size_t b = 0; b < n_bus; ++b) inject[b] = {};
        for (std::size_t b : topo.bfs_order)
            for (const BusLoad& bl : bus_loads[b])
                for (int i = 0; i < 3; ++i) {
                    auto ui = static_cast<std::size_t>(i);
                    if (bl.s_pu[ui] != cplx{0.0, 0.0})
                        inject[b][ui] += load_current(bl.model, bl.s_pu[ui], sol.v_pu[b][ui]);
                }
        for (std::size_t k = topo.bfs_order.size(); k-- > 0;) {
            std::size_t b = topo.bfs_order[k];
            long pb = topo.parent_branch[b];
            if (pb < 0) continue;
            auto bi = static_cast<std::size_t>(pb);
            branch_i[bi] = inject[b];
            std::size_t parent = static_cast<std::size_t>(topo.parent_bus[b]);
            for (int i = 0; i < 3; ++i) inject[parent][static_cast<std::size_t>(i)] += inject[b][static_cast<std::size_t>(i)];
        }

        // forward: propagate voltage drops from the roots
        mismatch = 0.0;
        for (std::size_t b : topo.bfs_order) {
            long pb = topo.parent_branch[b];
            if (pb < 0) continue;
            auto bi = static_cast<std::size_t>(pb);
            const Branch& br = f.branches[bi];
            Mat3c z = br.series_impedance();
            double z_base = f.buses[f.bus_index(br.to)].nominal_kv;
            z_base *= z_base;
            std::size_t parent = static_cast<std::size_t>(topo.parent_bus[b]);
            for (int r = 0; r < 3; ++r) {
                auto ri = static_cast<std::size_t>(r);
                if (!topo.deliverable[b].has(static_cast<Phase>(r))) {
                    sol.v_pu[b][ri] = {0.0, 0.0};
                    continue;
                }
                cplx drop{0.0, 0.0};
                for (int c = 0; c < 3; ++c)
                    drop += z(r, c) / z_base * branch_i[bi][static_cast<std::size_t>(c)];
                cplx v_new = sol.v_pu[parent][ri] - drop;
                mismatch = std::max(mismatch, std::abs(v_new - sol.v_pu[b][ri]));
                sol.v_pu[b][ri] = v_new;
            }
        }
        if (mismatch < options.tolerance_pu) break;
    }

    sol.iterations = std::min(iter, options.max_iterations);
    sol.max_mismatch_pu = mismatch;
    sol.converged = mismatch < options.tolerance_pu;

    // Substation injection, drawn loads, and branch losses (all per-unit).
    cplx s_sub{0.0, 0.0};
    for (std::size_t b : topo.bfs_order)
        if (topo.parent_bus[b] < 0)
            for (int i = 0; i < 3; ++i) {
                auto ui = static_cast<std::size_t>(i);
                s_sub += sol.v_pu[b][ui] * std::conj(inject[b][ui]);
            }
    cplx s_load{0.0, 0.0};
    for (std::size_t b : topo.bfs_order)
        for (const BusLoad& bl : bus_loads[b])
            for (int i = 0; i < 3; ++i) {
                auto ui = static_cast<std::size_t>(i);
                if (bl.s_pu[ui] != cplx{0.0, 0.0}) s_load += drawn_power(bl.model, bl.s_pu[ui], sol.v_pu[b][ui]);
            }
    cplx s_loss{0.0, 0.0};
    for (std::size_t b : topo.bfs_order) {
        long pb = topo.parent_branch[b];
        if (pb < 0) continue;
        auto bi = static_cast<std::size_t>(pb);
        std::size_t parent = static_cast<std::size_t>(topo.parent_bus[b]);
        for (int i = 0; i < 3; ++i) {
            auto ui = static_cast<std::size_t>(i);
            s_loss += (sol.v_pu[parent][ui] - sol.v_pu[b][ui]) * std::conj(branch_i[bi][ui]);
        }
    }
    sol.substation_kw = s_sub.real() * kPhaseBaseKva;
    sol.substation_kvar = s_sub.imag() * kPhaseBaseKva;
    double denom = std::max(std::abs(s_sub), 1e-12);
    sol.balance_mismatch_rel = std::abs(s_sub - s_load - s_loss) / denom;

    for (std::size_t b : topo.bfs_order) {
        for (Phase p : kPhases) {
            auto i = static_cast<std::size_t>(static_cast<int>(p));
            if (!topo.deliverable[b].has(p)) continue;
            double mag = std::abs(sol.v_pu[b][i]);
            if (mag < options.v_low_pu || mag > options.v_high_pu) sol.voltage_limit_violation = true;
        }
    }

    // Branch currents in amps at the receiving-side voltage base.
    for (std::size_t b : topo.bfs_order) {
        long pb = topo.parent_branch[b];
        if (pb < 0) continue;
        auto bi = static_cast<std::size_t>(pb);
        const Branch& br = f.branches[bi];
        double kv = f.buses[f.bus_index(br.to)].nominal_kv;
        double i_base = kPhaseBaseKva / (kv * 1000.0 / std::sqrt(3.0));  // kA·1000 = A
        i_base *= 1000.0;
        for (int i = 0; i < 3; ++i)
            sol.i_amps[bi][static_cast<std::size_t>(i)] = branch_i[bi][static_cast<std::size_t>(i)] * i_base;
    }
    return sol;
}

BaseSeries base_year_run(const Feeder& f, int years, bool lossless, const PowerFlowOptions& options) {
    if (years < 1) throw std::invalid_argument("years must be >= 1");
    BaseSeries series;
    series.years = years;
    series.lossless = lossless;
    series.kw_year.resize(kHoursPerYear, 0.0);

    if (lossless) {
        for (long h = 0; h < kHoursPerYear; ++h) {
            double kw = 0.0;
            for (const LoadPoint& lp : f.loads) {
                if (lp.is_shunt_compensator()) continue;
                kw += lp.total_kw() * f.profile_multiplier(lp.profile_id, h);
            }
            series.kw_year[static_cast<std::size_t>(h)] = kw;
        }
        return series;
    }

    PowerFlowCase pf_case;
    pf_case.feeder = &f;
    pf_case.closed_set = f.normally_closed_ids();
    for (long h = 0; h < kHoursPerYear; ++h) {
        pf_case.hour = h;
        PowerFlowSolution sol = solve(pf_case, options);
        series.kw_year[static_cast<std::size_t>(h)] = sol.substation_kw;
        if (!sol.converged) series.nonconverged_hours.push_back(h);
        if (sol.voltage_limit_violation) series.voltage_violation_count++;
    }
    return series;
}

}  // namespace mersim
