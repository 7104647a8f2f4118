#include <set>

#include "doctest.h"
#include "mersim/feeder.hpp"

using namespace mersim;

namespace {

const char* kTwoBus = R"(
[feeder]
name = tiny

[bus]
id = src
phases = abc
kind = substation
kv = 4.16

[bus]
id = end
phases = abc
kind = load
kv = 4.16

[branch]
id = main
from = src
to = end
kind = line
phases = abc
length = 0.5
z = 0.3465+1.0179j 0.1560+0.5017j 0.1580+0.4236j 0.3375+1.0478j 0.1535+0.3849j 0.3414+1.0348j

[load]
bus = end
phases = abc
kw = 100 100 100
kvar = 50 50 50
model = constant_power
)";

Feeder bundled(const char* name) {
    return load_feeder_file(std::string(MERSIM_DATA_DIR) + "/" + name);
}

// independent reachability check used against validate_radiality
bool loads_reachable_bfs(const Feeder& f, const std::set<std::string>& closed) {
    std::vector<std::vector<std::size_t>> adj(f.buses.size());
    for (const std::string& id : closed) {
        const Branch& br = f.branches[f.branch_index(id)];
        adj[f.bus_index(br.from)].push_back(f.bus_index(br.to));
        adj[f.bus_index(br.to)].push_back(f.bus_index(br.from));
    }
    std::vector<char> seen(f.buses.size(), 0);
    std::vector<std::size_t> stack;
    for (std::size_t s : f.substations()) {
        seen[s] = 1;
        stack.push_back(s);
    }
    while (!stack.empty()) {
        std::size_t u = stack.back();
        stack.pop_back();
        for (std::size_t v : adj[u])
            if (!seen[v]) {
                seen[v] = 1;
                stack.push_back(v);
            }
    }
    for (const LoadPoint& lp : f.loads)
        if (!seen[f.bus_index(lp.bus)]) return false;
    return true;
}

}  // namespace

TEST_CASE("smallest valid feeder parses") {
    Feeder f = parse_feeder(kTwoBus);
    CHECK(f.buses.size() == 2);
    CHECK(f.branches.size() == 1);
    CHECK(f.substations().size() == 1);
    CHECK(f.branches[0].z(0, 1) == f.branches[0].z(1, 0));
    auto [kw, kvar] = f.total_consumer_load();
    CHECK(kw == doctest::Approx(300.0));
    CHECK(kvar == doctest::Approx(150.0));
}

TEST_CASE("bundled ieee13 matches the documented totals") {
    Feeder f = bundled("ieee13.feeder");
    CHECK(f.substations().size() == 1);
    auto [kw, kvar] = f.total_consumer_load();
    CHECK(kw == doctest::Approx(3466.0));
    CHECK(kvar == doctest::Approx(2102.0));

    int lines = 0, switches = 0, xfmrs = 0;
    for (const Branch& b : f.branches) {
        if (b.kind == BranchKind::line) ++lines;
        if (b.kind == BranchKind::sw) ++switches;
        if (b.kind == BranchKind::transformer) ++xfmrs;
    }
    CHECK(lines == 11);
    CHECK(switches == 1);  // a single sectionalizing switch, no ties
    CHECK(xfmrs == 1);
}

TEST_CASE("bundled ieee123 matches the documented inventory") {
    Feeder f = bundled("ieee123.feeder");
    int lines = 0, sect = 0, tie = 0, xfmrs = 0;
    for (const Branch& b : f.branches) {
        if (b.kind == BranchKind::line) ++lines;
        if (b.kind == BranchKind::transformer) ++xfmrs;
        if (b.kind == BranchKind::sw) (b.switch_role == SwitchRole::tie ? tie : sect)++;
    }
    CHECK(lines == 118);
    CHECK(sect == 6);
    CHECK(tie == 5);
    CHECK(xfmrs == 1);
    auto [kw, kvar] = f.total_consumer_load();
    CHECK(kw == doctest::Approx(3490.0));
    CHECK(kvar == doctest::Approx(1925.0));
}

TEST_CASE("parse errors carry line numbers") {
    SUBCASE("syntax error") {
        try {
            parse_feeder("[bus]\nid = a\nphases abc\n");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line == 3);
        }
    }
    SUBCASE("dangling bus reference") {
        std::string text = kTwoBus;
        text += "\n[branch]\nid = ghost\nfrom = src\nto = nowhere\nkind = line\nphases = a\n"
                "z = 1j 0 0 0 0 0\n";
        CHECK_THROWS_AS(parse_feeder(text), ParseError);
    }
    SUBCASE("duplicate id") {
        std::string text = kTwoBus;
        text += "\n[bus]\nid = end\nphases = a\nkind = load\nkv = 4.16\n";
        CHECK_THROWS_WITH_AS(parse_feeder(text), doctest::Contains("duplicate bus id"), ParseError);
    }
    SUBCASE("radiality violation") {
        std::string text = kTwoBus;
        text += "\n[branch]\nid = second\nfrom = src\nto = end\nkind = line\nphases = abc\n"
                "z = 1j 0 0 1j 0 1j\n";
        CHECK_THROWS_WITH_AS(parse_feeder(text), doctest::Contains("loop"), ParseError);
    }
    SUBCASE("profile length enforced") {
        std::string text = kTwoBus;
        text += "\n[profile short]\nmultipliers = 1 1 1\n";
        CHECK_THROWS_WITH_AS(parse_feeder(text), doctest::Contains("8760"), ParseError);
    }
    SUBCASE("load on a phase the bus lacks") {
        std::string text = kTwoBus;
        text += "\n[bus]\nid = lat\nphases = a\nkind = load\nkv = 4.16\n"
                "[branch]\nid = lat1\nfrom = end\nto = lat\nkind = line\nphases = a\nz = 1j 0 0 0 0 0\n"
                "[load]\nbus = lat\nphases = b\nkw = 5\nkvar = 1\n";
        CHECK_THROWS_AS(parse_feeder(text), ParseError);
    }
}

TEST_CASE("validate_radiality") {
    Feeder f = bundled("ieee123.feeder");
    std::set<std::string> closed;
    for (const std::string& id : f.normally_closed_ids()) closed.insert(id);

    SUBCASE("the normal configuration is radial") {
        CHECK(validate_radiality(f, closed));
        CHECK(loads_reachable_bfs(f, closed));
    }
    SUBCASE("closing one tie creates a loop") {
        std::set<std::string> with_tie = closed;
        with_tie.insert("SW54-94");
        CHECK_FALSE(validate_radiality(f, with_tie));
    }
    SUBCASE("dropping a mid-feeder line strands loads") {
        std::set<std::string> cut = closed;
        cut.erase("L1-7");
        CHECK_FALSE(validate_radiality(f, cut));
        CHECK_FALSE(loads_reachable_bfs(f, cut));  // traversal oracle agrees
    }
    SUBCASE("unknown branch id is rejected") {
        std::set<std::string> bad = {"no-such-branch"};
        CHECK_THROWS_AS(validate_radiality(f, bad), std::out_of_range);
    }
}

TEST_CASE("serialize round-trips structurally") {
    for (const char* name : {"ieee13.feeder", "ieee123.feeder"}) {
        Feeder f = bundled(name);
        Feeder g = parse_feeder(serialize_feeder(f));
        CHECK(structurally_equal(f, g));
    }
    Feeder tiny = parse_feeder(kTwoBus);
    CHECK(structurally_equal(tiny, parse_feeder(serialize_feeder(tiny))));
}

TEST_CASE("shunt compensators are excluded from consumer totals") {
    Feeder f = bundled("ieee13.feeder");
    int caps = 0;
    for (const LoadPoint& lp : f.loads)
        if (lp.is_shunt_compensator()) ++caps;
    CHECK(caps == 2);  // 675 (three-phase) and 611 (phase c)
}
