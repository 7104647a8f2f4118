#include "mersim/feeder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mersim {

PhaseSet PhaseSet::all() {
    PhaseSet s;
    s.add(Phase::A);
    s.add(Phase::B);
    s.add(Phase::C);
    return s;
}

PhaseSet PhaseSet::parse(const std::string& text) {
    PhaseSet s;
    for (char c : text) {
        switch (std::tolower(static_cast<unsigned char>(c))) {
            case 'a': s.add(Phase::A); break;
            case 'b': s.add(Phase::B); break;
            case 'c': s.add(Phase::C); break;
            case ' ': break;
            default:
                throw std::invalid_argument("invalid phase letter '" + std::string(1, c) + "'");
        }
    }
    return s;
}

int PhaseSet::count() const {
    int n = 0;
    for (Phase p : kPhases)
        if (has(p)) ++n;
    return n;
}

PhaseSet PhaseSet::intersect(PhaseSet other) const {
    PhaseSet s;
    s.mask_ = mask_ & other.mask_;
    return s;
}

std::string PhaseSet::to_string() const {
    std::string s;
    if (has(Phase::A)) s += 'a';
    if (has(Phase::B)) s += 'b';
    if (has(Phase::C)) s += 'c';
    return s;
}

bool Mat3c::symmetric(double tol) const {
    for (int r = 0; r < 3; ++r)
        for (int c = r + 1; c < 3; ++c)
            if (std::abs((*this)(r, c) - (*this)(c, r)) > tol) return false;
    return true;
}

bool Mat3c::zero_outside(PhaseSet phases) const {
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            bool inside = phases.has(static_cast<Phase>(r)) && phases.has(static_cast<Phase>(c));
            if (!inside && (*this)(r, c) != cplx{0.0, 0.0}) return false;
        }
    }
    return true;
}

Mat3c Mat3c::scaled(double factor) const {
    Mat3c out;
    for (std::size_t i = 0; i < 9; ++i) out.m[i] = m[i] * factor;
    return out;
}

bool LoadPoint::is_shunt_compensator() const {
    bool any_negative_q = false;
    for (Phase p : kPhases) {
        int i = static_cast<int>(p);
        if (kw[static_cast<std::size_t>(i)] != 0.0) return false;
        if (kvar[static_cast<std::size_t>(i)] > 0.0) return false;
        if (kvar[static_cast<std::size_t>(i)] < 0.0) any_negative_q = true;
    }
    return any_negative_q;
}

std::size_t Feeder::bus_index(const std::string& id) const {
    auto it = bus_lookup_.find(id);
    if (it == bus_lookup_.end()) throw std::out_of_range("unknown bus id '" + id + "'");
    return it->second;
}

std::size_t Feeder::branch_index(const std::string& id) const {
    auto it = branch_lookup_.find(id);
    if (it == branch_lookup_.end()) throw std::out_of_range("unknown branch id '" + id + "'");
    return it->second;
}

std::vector<std::size_t> Feeder::substations() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].kind == BusKind::substation) out.push_back(i);
    return out;
}

std::vector<std::string> Feeder::normally_closed_ids() const {
    std::vector<std::string> out;
    for (const Branch& b : branches)
        if (!b.normally_open) out.push_back(b.id);
    return out;
}

std::pair<double, double> Feeder::total_consumer_load() const {
    double kw = 0.0, kvar = 0.0;
    for (const LoadPoint& lp : loads) {
        if (lp.is_shunt_compensator()) continue;
        for (int i = 0; i < 3; ++i) {
            kw += lp.kw[static_cast<std::size_t>(i)];
            kvar += lp.kvar[static_cast<std::size_t>(i)];
        }
    }
    return {kw, kvar};
}

double Feeder::consumer_kw_at(std::size_t bus_idx) const {
    double kw = 0.0;
    const std::string& id = buses[bus_idx].id;
    for (const LoadPoint& lp : loads)
        if (lp.bus == id && !lp.is_shunt_compensator()) kw += lp.total_kw();
    return kw;
}

double Feeder::profile_multiplier(const std::string& profile_id, long hour) const {
    if (profile_id.empty()) return 1.0;
    auto it = profiles.find(profile_id);
    if (it == profiles.end()) throw std::out_of_range("unknown profile '" + profile_id + "'");
    return it->second.multipliers[static_cast<std::size_t>(hour % kHoursPerYear)];
}

void Feeder::rebuild_indexes() {
    bus_lookup_.clear();
    branch_lookup_.clear();
    for (std::size_t i = 0; i < buses.size(); ++i) bus_lookup_[buses[i].id] = i;
    for (std::size_t i = 0; i < branches.size(); ++i) branch_lookup_[branches[i].id] = i;
}

ParseError::ParseError(const std::string& origin_, int line_, const std::string& what_)
    : std::runtime_error(origin_ + ":" + std::to_string(line_) + ": " + what_),
      origin(origin_),
      line(line_) {}

namespace {

// Union-find over bus indices.
struct Dsu {
    std::vector<std::size_t> parent;
    explicit Dsu(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    // false if already joined (cycle)
    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[b] = a;
        return true;
    }
};

}  // namespace

bool validate_radiality(const Feeder& f, const std::set<std::string>& closed_set) {
    Dsu dsu(f.buses.size());
    for (const std::string& id : closed_set) {
        const Branch& b = f.branches[f.branch_index(id)];
        if (!dsu.unite(f.bus_index(b.from), f.bus_index(b.to))) return false;  // loop
    }
    std::set<std::size_t> sub_roots;
    for (std::size_t s : f.substations()) sub_roots.insert(dsu.find(s));
    for (const LoadPoint& lp : f.loads) {
        if (!sub_roots.count(dsu.find(f.bus_index(lp.bus)))) return false;  // stranded load
    }
    return true;
}

void validate_feeder(const Feeder& f, const std::string& origin) {
    auto fail = [&](const std::string& msg) { throw ParseError(origin, 0, msg); };

    if (f.substations().empty()) fail("feeder has no substation bus");
    for (const Bus& b : f.buses) {
        if (b.phases.empty()) fail("bus '" + b.id + "' has no phases");
        if (b.nominal_kv <= 0.0) fail("bus '" + b.id + "' nominal_kv must be > 0");
    }
    for (const Branch& br : f.branches) {
        const Bus& from = f.buses[f.bus_index(br.from)];
        const Bus& to = f.buses[f.bus_index(br.to)];
        if (br.from == br.to) fail("branch '" + br.id + "' connects a bus to itself");
        if (br.phases.empty()) fail("branch '" + br.id + "' has no phases");
        if (!br.phases.subset_of(from.phases) || !br.phases.subset_of(to.phases))
            fail("branch '" + br.id + "' uses phases missing at its endpoints");
        if (!br.z.symmetric(1e-9)) fail("branch '" + br.id + "' impedance matrix is not symmetric");
        if (!br.z.zero_outside(br.phases))
            fail("branch '" + br.id + "' has impedance entries on absent phases");
        if (br.normally_open && (br.kind != BranchKind::sw || br.switch_role != SwitchRole::tie))
            fail("branch '" + br.id + "' is normally open but not a tie switch");
        if (br.kind == BranchKind::sw && br.switch_role == SwitchRole::none)
            fail("switch '" + br.id + "' is missing its role");
        if (br.failure_rate_per_year < 0.0) fail("branch '" + br.id + "' has negative failure rate");
        if (br.mttr_hours <= 0.0) fail("branch '" + br.id + "' mttr_hours must be > 0");
    }
    for (const LoadPoint& lp : f.loads) {
        const Bus& bus = f.buses[f.bus_index(lp.bus)];
        if (lp.phases.empty()) fail("load at bus '" + lp.bus + "' has no phases");
        if (!lp.phases.subset_of(bus.phases))
            fail("load at bus '" + lp.bus + "' lists phases the bus does not carry");
        for (int i = 0; i < 3; ++i) {
            Phase p = static_cast<Phase>(i);
            double pw = lp.kw[static_cast<std::size_t>(i)];
            double qv = lp.kvar[static_cast<std::size_t>(i)];
            if (!std::isfinite(pw) || !std::isfinite(qv))
                fail("load at bus '" + lp.bus + "' has non-finite power");
            if (!lp.phases.has(p) && (pw != 0.0 || qv != 0.0))
                fail("load at bus '" + lp.bus + "' has power on an absent phase");
        }
        if (!lp.profile_id.empty() && !f.profiles.count(lp.profile_id))
            fail("load at bus '" + lp.bus + "' references unknown profile '" + lp.profile_id + "'");
    }
    for (const auto& [id, prof] : f.profiles) {
        if (prof.multipliers.size() != kHoursPerYear)
            fail("profile '" + id + "' must have exactly 8760 multipliers, found " +
                 std::to_string(prof.multipliers.size()));
        for (double m : prof.multipliers)
            if (!(m >= 0.0) || !std::isfinite(m)) fail("profile '" + id + "' has a negative or invalid multiplier");
    }

    // Normal configuration: acyclic, every load bus fed, one substation per island.
    std::set<std::string> closed;
    for (const Branch& br : f.branches)
        if (!br.normally_open) closed.insert(br.id);
    {
        Dsu dsu(f.buses.size());
        for (const std::string& id : closed) {
            const Branch& br = f.branches[f.branch_index(id)];
            if (!dsu.unite(f.bus_index(br.from), f.bus_index(br.to)))
                fail("normal configuration contains a loop through branch '" + id + "'");
        }
        std::map<std::size_t, int> subs_per_island;
        for (std::size_t s : f.substations()) subs_per_island[dsu.find(s)]++;
        for (const auto& [root, n] : subs_per_island)
            if (n > 1) fail("normal configuration connects two substations");
        for (const LoadPoint& lp : f.loads) {
            std::size_t root = dsu.find(f.bus_index(lp.bus));
            if (!subs_per_island.count(root))
                fail("load bus '" + lp.bus + "' is not fed by any substation in the normal configuration");
        }
        // Every bus's phases must be deliverable from its feeding branch chain.
        // Checked tree-wise: child phases ⊆ parent branch phases.
        std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(f.buses.size());
        for (const std::string& id : closed) {
            std::size_t bi = f.branch_index(id);
            const Branch& br = f.branches[bi];
            adj[f.bus_index(br.from)].push_back({f.bus_index(br.to), bi});
            adj[f.bus_index(br.to)].push_back({f.bus_index(br.from), bi});
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
            for (auto [v, bi] : adj[u]) {
                if (seen[v]) continue;
                seen[v] = 1;
                if (!f.buses[v].phases.subset_of(
                        f.branches[bi].phases.intersect(f.buses[u].phases)))
                    fail("bus '" + f.buses[v].id + "' carries phases its feeding branch '" +
                         f.branches[bi].id + "' cannot deliver");
                stack.push_back(v);
            }
        }
    }
    if (!validate_radiality(f, closed)) fail("normal configuration is not radial");
}

// ---------------------------------------------------------------------------
// Serialization (canonical form; inlines profiles)

namespace {

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string fmt_cplx(cplx z) {
    if (z.imag() == 0.0) return fmt_double(z.real());
    std::string s = fmt_double(z.real());
    s += (z.imag() < 0 ? "-" : "+");
    s += fmt_double(std::abs(z.imag()));
    s += "j";
    return s;
}

const char* bus_kind_name(BusKind k) {
    switch (k) {
        case BusKind::substation: return "substation";
        case BusKind::load: return "load";
        case BusKind::junction: return "junction";
    }
    return "?";
}

const char* branch_kind_name(BranchKind k) {
    switch (k) {
        case BranchKind::line: return "line";
        case BranchKind::transformer: return "transformer";
        case BranchKind::sw: return "switch";
    }
    return "?";
}

const char* load_model_name(LoadModel m) {
    switch (m) {
        case LoadModel::constant_power: return "constant_power";
        case LoadModel::constant_current: return "constant_current";
        case LoadModel::constant_impedance: return "constant_impedance";
    }
    return "?";
}

}  // namespace

std::string serialize_feeder(const Feeder& f) {
    std::ostringstream os;
    os << "[feeder]\n";
    os << "name = " << f.name << "\n\n";
    for (const Bus& b : f.buses) {
        os << "[bus]\n";
        os << "id = " << b.id << "\n";
        os << "phases = " << b.phases.to_string() << "\n";
        os << "kind = " << bus_kind_name(b.kind) << "\n";
        os << "kv = " << fmt_double(b.nominal_kv) << "\n\n";
    }
    for (const Branch& br : f.branches) {
        os << "[branch]\n";
        os << "id = " << br.id << "\n";
        os << "from = " << br.from << "\n";
        os << "to = " << br.to << "\n";
        os << "kind = " << branch_kind_name(br.kind) << "\n";
        if (br.kind == BranchKind::sw) {
            os << "role = " << (br.switch_role == SwitchRole::tie ? "tie" : "sectionalizing") << "\n";
            os << "normally_open = " << (br.normally_open ? "true" : "false") << "\n";
        }
        os << "phases = " << br.phases.to_string() << "\n";
        os << "length = " << fmt_double(br.length) << "\n";
        os << "z =";
        for (int r = 0; r < 3; ++r)
            for (int c = r; c < 3; ++c) os << " " << fmt_cplx(br.z(r, c));
        os << "\n\n";
    }
    for (const LoadPoint& lp : f.loads) {
        os << "[load]\n";
        os << "bus = " << lp.bus << "\n";
        os << "phases = " << lp.phases.to_string() << "\n";
        os << "kw =";
        for (Phase p : kPhases)
            if (lp.phases.has(p)) os << " " << fmt_double(lp.kw[static_cast<std::size_t>(static_cast<int>(p))]);
        os << "\n";
        os << "kvar =";
        for (Phase p : kPhases)
            if (lp.phases.has(p)) os << " " << fmt_double(lp.kvar[static_cast<std::size_t>(static_cast<int>(p))]);
        os << "\n";
        os << "model = " << load_model_name(lp.model) << "\n";
        if (!lp.profile_id.empty()) os << "profile = " << lp.profile_id << "\n";
        os << "\n";
    }
    for (const auto& [id, prof] : f.profiles) {
        os << "[profile " << id << "]\n";
        os << "multipliers =";
        for (double m : prof.multipliers) os << " " << fmt_double(m);
        os << "\n\n";
    }
    return os.str();
}

bool structurally_equal(const Feeder& a, const Feeder& b) {
    if (a.name != b.name || a.buses.size() != b.buses.size() ||
        a.branches.size() != b.branches.size() || a.loads.size() != b.loads.size() ||
        a.profiles.size() != b.profiles.size())
        return false;
    for (std::size_t i = 0; i < a.buses.size(); ++i) {
        const Bus &x = a.buses[i], &y = b.buses[i];
        if (x.id != y.id || !(x.phases == y.phases) || x.kind != y.kind ||
            x.nominal_kv != y.nominal_kv)
            return false;
    }
    for (std::size_t i = 0; i < a.branches.size(); ++i) {
        const Branch &x = a.branches[i], &y = b.branches[i];
        if (x.id != y.id || x.from != y.from || x.to != y.to || x.kind != y.kind ||
            x.switch_role != y.switch_role || x.normally_open != y.normally_open ||
            !(x.phases == y.phases) || x.length != y.length || x.z.m != y.z.m)
            return false;
    }
    for (std::size_t i = 0; i < a.loads.size(); ++i) {
        const LoadPoint &x = a.loads[i], &y = b.loads[i];
        if (x.bus != y.bus || !(x.phases == y.phases) || x.kw != y.kw || x.kvar != y.kvar ||
            x.model != y.model || x.profile_id != y.profile_id)
            return false;
    }
    for (auto ia = a.profiles.begin(), ib = b.profiles.begin(); ia != a.profiles.end(); ++ia, ++ib) {
        if (ia->first != ib->first || ia->second.multipliers != ib->second.multipliers) return false;
    }
    return true;
}

}  // namespace mersim
