#include <random>

#include "doctest.h"
#include "mersim/reconfig.hpp"
#include "oracle_helpers.hpp"

using namespace mersim;

namespace {

struct EdgeSpec {
    std::size_t u, v;
    bool is_switch = false;
    bool open = false;
};

// Small single-phase feeder, bus 0 = substation, for algorithm tests.
Feeder make_graph_feeder(std::size_t n, const std::vector<EdgeSpec>& edges,
                         const std::vector<double>& load_kw) {
    Feeder f;
    f.name = "toy";
    for (std::size_t i = 0; i < n; ++i) {
        Bus b;
        b.id = "b" + std::to_string(i);
        b.phases = PhaseSet::parse("a");
        b.kind = i == 0 ? BusKind::substation : (load_kw[i] > 0 ? BusKind::load : BusKind::junction);
        b.nominal_kv = 4.16;
        f.buses.push_back(b);
    }
    for (std::size_t k = 0; k < edges.size(); ++k) {
        Branch br;
        br.id = (edges[k].is_switch ? "s" : "e") + std::string(k < 10 ? "0" : "") + std::to_string(k);
        br.from = "b" + std::to_string(edges[k].u);
        br.to = "b" + std::to_string(edges[k].v);
        br.kind = edges[k].is_switch ? BranchKind::sw : BranchKind::line;
        br.switch_role = edges[k].is_switch
                             ? (edges[k].open ? SwitchRole::tie : SwitchRole::sectionalizing)
                             : SwitchRole::none;
        br.normally_open = edges[k].open;
        br.phases = PhaseSet::parse("a");
        br.z(0, 0) = edges[k].is_switch ? cplx{0, 0} : cplx{0, 0.1};
        f.branches.push_back(br);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (load_kw[i] <= 0) continue;
        LoadPoint lp;
        lp.bus = "b" + std::to_string(i);
        lp.phases = PhaseSet::parse("a");
        lp.kw[0] = load_kw[i];
        lp.kvar[0] = load_kw[i] * 0.3;
        f.loads.push_back(lp);
    }
    f.rebuild_indexes();
    return f;
}

double restored_kw(const Feeder& f, const RestorationPlan& plan) {
    auto [total_kw, total_kvar] = f.total_consumer_load();
    return total_kw - plan.isolated_load_kw_base;
}

Feeder fivebus() {
    return load_feeder_file(std::string(MERSIM_TEST_DATA_DIR) + "/fivebus.feeder");
}

}  // namespace

TEST_CASE("no failures: the plan is the normal configuration") {
    Feeder f = fivebus();
    OperableGraph g = OperableGraph::make(f, {});
    CHECK(is_fully_restorable(g));
    RestorationPlan plan = build_restoration_plan(g);
    CHECK(plan.fully_restorable);
    CHECK(plan.isolated_buses.empty());
    CHECK(plan.switch_operations == 0);
    std::vector<std::string> expected = f.normally_closed_ids();
    std::sort(expected.begin(), expected.end());
    CHECK(plan.closed_set == expected);
}

TEST_CASE("tie switch bridges a mid-feeder cut") {
    Feeder f = fivebus();
    OperableGraph g = OperableGraph::make(f, {"L2"});
    CHECK(is_fully_restorable(g));
    RestorationPlan plan = build_restoration_plan(g);
    CHECK(plan.fully_restorable);
    CHECK(plan.switch_operations == 1);  // close T1
    CHECK(std::count(plan.closed_set.begin(), plan.closed_set.end(), "T1") == 1);
}

TEST_CASE("losing both paths isolates the end bus") {
    Feeder f = fivebus();
    OperableGraph g = OperableGraph::make(f, {"L3", "T1"});
    CHECK_FALSE(is_fully_restorable(g));
    RestorationPlan plan = build_restoration_plan(g);
    CHECK(plan.isolated_buses == std::vector<std::string>{"B3"});
    CHECK(plan.isolated_load_kw_base == doctest::Approx(60.0));
    CHECK(plan.mer_connection_bus == "B3");
}

TEST_CASE("reconfiguration disabled: ties are not candidates") {
    Feeder f = fivebus();
    OperableGraph g = OperableGraph::make(f, {"L2"}, /*ties_available=*/false);
    CHECK_FALSE(is_fully_restorable(g));
    RestorationPlan plan = build_restoration_plan(g);
    CHECK(plan.isolated_load_kw_base == doctest::Approx(160.0));  // B2 and B3
}

TEST_CASE("ieee13 has no reconfiguration options") {
    Feeder f = load_feeder_file(std::string(MERSIM_DATA_DIR) + "/ieee13.feeder");
    OperableGraph g = OperableGraph::make(f, {"L632-670"});
    CHECK_FALSE(is_fully_restorable(g));
    RestorationPlan plan = build_restoration_plan(g);
    CHECK(plan.isolated_load_kw_base > 2000.0);
}

TEST_CASE("spanning tree counts") {
    SUBCASE("a tree has exactly one spanning tree") {
        Feeder f = make_graph_feeder(4, {{0, 1}, {1, 2}, {1, 3}}, {0, 1, 1, 1});
        CHECK(spanning_tree_count(OperableGraph::make(f, {})) == doctest::Approx(1.0));
    }
    SUBCASE("a single n-cycle has n spanning trees") {
        for (std::size_t n : {3u, 5u, 8u}) {
            std::vector<EdgeSpec> edges;
            for (std::size_t i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n});
            Feeder f = make_graph_feeder(n, edges, std::vector<double>(n, 1.0));
            CHECK(spanning_tree_count(OperableGraph::make(f, {})) ==
                  doctest::Approx(static_cast<double>(n)));
        }
    }
    SUBCASE("K4 has 16, agreeing with brute-force enumeration") {
        std::vector<EdgeSpec> edges;
        std::vector<std::pair<std::size_t, std::size_t>> plain;
        for (std::size_t u = 0; u < 4; ++u)
            for (std::size_t v = u + 1; v < 4; ++v) {
                edges.push_back({u, v});
                plain.push_back({u, v});
            }
        Feeder f = make_graph_feeder(4, edges, {1, 1, 1, 1});
        CHECK(spanning_tree_count(OperableGraph::make(f, {})) == doctest::Approx(16.0));
        CHECK(oracle::count_spanning_trees_brute(4, plain) == 16);
    }
    SUBCASE("disconnected graphs return the product over components") {
        // two triangles, no bridge: 3 * 3
        std::vector<EdgeSpec> edges = {{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 3}};
        Feeder f = make_graph_feeder(6, edges, {1, 1, 1, 1, 1, 1});
        CHECK(spanning_tree_count(OperableGraph::make(f, {})) == doctest::Approx(9.0));
    }
}

TEST_CASE("random graphs: plan optimality, tree counts, and consistency") {
    std::mt19937_64 gen(2024);
    for (int trial = 0; trial < 120; ++trial) {
        std::size_t n = 5 + gen() % 5;  // 5..9 buses
        std::vector<EdgeSpec> edges;
        for (std::size_t v = 1; v < n; ++v) {
            std::size_t u = gen() % v;
            bool sw = (gen() % 4) == 0;
            edges.push_back({u, v, sw, false});
        }
        std::size_t extra = 1 + gen() % 8;  // tie switches; up to 8 independent loops
        for (std::size_t k = 0; k < extra; ++k) {
            std::size_t u = gen() % n, v = gen() % n;
            if (u == v) continue;
            edges.push_back({u, v, true, true});
        }
        std::vector<double> load(n, 0.0);
        for (std::size_t b = 1; b < n; ++b) load[b] = static_cast<double>(gen() % 200);

        Feeder f = make_graph_feeder(n, edges, load);
        std::vector<std::string> failed;
        for (const Branch& br : f.branches)
            if ((gen() % 5) == 0) failed.push_back(br.id);

        OperableGraph g = OperableGraph::make(f, failed);
        RestorationPlan plan = build_restoration_plan(g);

        // oracle: exhaustive acyclic-subset search over usable branches
        std::vector<oracle::SmallEdge> oedges;
        std::vector<std::pair<std::size_t, std::size_t>> plain;
        for (std::size_t bi : g.usable) {
            const Branch& br = f.branches[bi];
            oracle::SmallEdge e;
            e.u = f.bus_index(br.from);
            e.v = f.bus_index(br.to);
            e.fixed = !br.is_switch();
            oedges.push_back(e);
            plain.push_back({e.u, e.v});
        }
        double best = oracle::max_restorable_kw_brute(n, oedges, load, {0});
        CHECK(restored_kw(f, plan) == doctest::Approx(best).epsilon(1e-12));

        // fully-restorable flag consistent with the plan
        CHECK(is_fully_restorable(g) == plan.isolated_buses.empty());

        // the closed set is radial: acyclic and spanning the energized island
        {
            std::set<std::string> closed(plan.closed_set.begin(), plan.closed_set.end());
            CHECK(validate_radiality(f, closed) ==
                  (plan.isolated_load_kw_base == 0.0));  // strands exactly the isolated loads
        }

        // matrix-tree count vs brute enumeration (connected usable graphs only)
        OperableGraph intact = OperableGraph::make(f, {});
        double mt = spanning_tree_count(intact);
        std::vector<std::pair<std::size_t, std::size_t>> all_edges;
        for (const Branch& br : f.branches)
            all_edges.push_back({f.bus_index(br.from), f.bus_index(br.to)});
        CHECK(mt == doctest::Approx(static_cast<double>(
                  oracle::count_spanning_trees_brute(n, all_edges))));

        // determinism
        RestorationPlan again = build_restoration_plan(g);
        CHECK(again.closed_set == plan.closed_set);
        CHECK(again.mer_connection_bus == plan.mer_connection_bus);

        // monotonicity: un-failing one branch never lowers restored load
        if (!failed.empty()) {
            std::vector<std::string> fewer(failed.begin() + 1, failed.end());
            RestorationPlan bigger = build_restoration_plan(OperableGraph::make(f, fewer));
            CHECK(restored_kw(f, bigger) >= restored_kw(f, plan) - 1e-9);
        }
    }
}

TEST_CASE("ieee123 single-failure restoration census") {
    // Pins the bundled topology: the restorable share of sampled contingencies
    // follows directly from these counts and the class failure rates.
    Feeder f = load_feeder_file(std::string(MERSIM_DATA_DIR) + "/ieee123.feeder");
    int total = 0, restorable_by_load = 0, strictly_full = 0, restorable_lines = 0;
    for (const Branch& br : f.branches) {
        RestorationPlan p = build_restoration_plan(OperableGraph::make(f, {br.id}));
        ++total;
        if (p.isolated_load_kw_base == 0.0) {
            ++restorable_by_load;
            if (br.kind == BranchKind::line) ++restorable_lines;
        }
        if (p.fully_restorable) ++strictly_full;
    }
    CHECK(total == 130);
    CHECK(restorable_by_load == 43);  // 32 lines, 5 ties, 4+1 sectionalizers, transformer
    CHECK(strictly_full == 35);       // stub-end ties and zero-load laterals excluded
    CHECK(restorable_lines == 32);

    // losing the substation switch curtails the whole feeder
    RestorationPlan worst = build_restoration_plan(OperableGraph::make(f, {"SW150-149"}));
    CHECK(worst.isolated_load_kw_base == doctest::Approx(3490.0));
}

TEST_CASE("ieee13 single-failure restoration census") {
    Feeder f = load_feeder_file(std::string(MERSIM_DATA_DIR) + "/ieee13.feeder");
    int total = 0, restorable_by_load = 0, strictly_full = 0;
    for (const Branch& br : f.branches) {
        RestorationPlan p = build_restoration_plan(OperableGraph::make(f, {br.id}));
        ++total;
        if (p.isolated_load_kw_base == 0.0) ++restorable_by_load;
        if (p.fully_restorable) ++strictly_full;
    }
    CHECK(total == 13);
    CHECK(restorable_by_load == 1);  // only the line to the unloaded end bus 680
    CHECK(strictly_full == 0);       // no tie switches at all
}

TEST_CASE("mer connection bus picks the boundary nearest the substation") {
    // chain b0-b1-b2-b3 with a lateral b1-b4; fail both b1-b2 and b1-b4:
    // boundary branches e1 (live b1) and e3 (live b1), tie broken by id -> e1,
    // whose dead endpoint is b2.
    Feeder f = make_graph_feeder(5, {{0, 1}, {1, 2}, {2, 3}, {1, 4}}, {0, 0, 5, 5, 5});
    RestorationPlan plan = build_restoration_plan(OperableGraph::make(f, {"e01", "e03"}));
    CHECK(plan.isolated_buses == std::vector<std::string>{"b2", "b3", "b4"});
    CHECK(plan.mer_connection_bus == "b2");
}
