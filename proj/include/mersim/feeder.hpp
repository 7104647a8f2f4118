#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mersim {

using cplx = std::complex<double>;

constexpr int kHoursPerYear = 8760;

enum class Phase : int { A = 0, B = 1, C = 2 };

/// Subset of the three phases, stored as a bitmask.
class PhaseSet {
  public:
    PhaseSet() = default;
    static PhaseSet all();
    static PhaseSet parse(const std::string& text);  // "abc", "bc", "a", case-insensitive

    void add(Phase p) { mask_ |= bit(p); }
    bool has(Phase p) const { return (mask_ & bit(p)) != 0; }
    bool empty() const { return mask_ == 0; }
    int count() const;
    bool subset_of(PhaseSet other) const { return (mask_ & ~other.mask_) == 0; }
    PhaseSet intersect(PhaseSet other) const;
    std::string to_string() const;  // canonical lowercase "abc" order

    bool operator==(const PhaseSet&) const = default;

  private:
    static std::uint8_t bit(Phase p) { return static_cast<std::uint8_t>(1u << static_cast<int>(p)); }
    std::uint8_t mask_ = 0;
};

inline const std::array<Phase, 3> kPhases = {Phase::A, Phase::B, Phase::C};

/// 3x3 complex matrix in phase order A,B,C. Absent phases hold structural zeros.
struct Mat3c {
    std::array<cplx, 9> m{};

    cplx& operator()(int r, int c) { return m[static_cast<std::size_t>(r * 3 + c)]; }
    const cplx& operator()(int r, int c) const { return m[static_cast<std::size_t>(r * 3 + c)]; }

    bool symmetric(double tol = 1e-12) const;
    bool zero_outside(PhaseSet phases) const;
    Mat3c scaled(double factor) const;
};

enum class BusKind { substation, load, junction };

struct Bus {
    std::string id;
    PhaseSet phases;
    BusKind kind = BusKind::junction;
    double nominal_kv = 0.0;  // line-to-line kV
};

enum class BranchKind { line, transformer, sw };
enum class SwitchRole { none, sectionalizing, tie };

struct Branch {
    std::string id;
    std::string from;
    std::string to;
    BranchKind kind = BranchKind::line;
    SwitchRole switch_role = SwitchRole::none;
    bool normally_open = false;
    PhaseSet phases;
    Mat3c z;             // ohms per unit length; transformers referred to the `to` side
    double length = 1.0; // multiplier applied to z

    // Filled from the reliability table; defaults mean "never fails".
    double failure_rate_per_year = 0.0;
    double mttr_hours = 1.0;

    bool is_switch() const { return kind == BranchKind::sw; }
    Mat3c series_impedance() const { return z.scaled(length); }
};

enum class LoadModel { constant_power, constant_current, constant_impedance };

struct LoadPoint {
    std::string bus;
    PhaseSet phases;
    std::array<double, 3> kw{};    // indexed by Phase; zero on absent phases
    std::array<double, 3> kvar{};  // negative kvar = shunt compensation
    LoadModel model = LoadModel::constant_power;
    std::string profile_id;        // empty = constant multiplier 1.0

    // Shunt capacitor banks are entered as zero-kW, negative-kvar load points.
    bool is_shunt_compensator() const;
    double total_kw() const { return kw[0] + kw[1] + kw[2]; }
};

struct LoadProfile {
    std::string id;
    std::vector<double> multipliers;  // exactly 8760
};

struct Feeder {
    std::string name;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<LoadPoint> loads;
    std::map<std::string, LoadProfile> profiles;

    std::size_t bus_index(const std::string& id) const;
    std::size_t branch_index(const std::string& id) const;
    bool has_bus(const std::string& id) const { return bus_lookup_.count(id) != 0; }

    std::vector<std::size_t> substations() const;
    std::vector<std::string> normally_closed_ids() const;

    /// Consumer load totals (kW, kvar); shunt compensators excluded.
    std::pair<double, double> total_consumer_load() const;

    /// Base kW of consumer load at a bus, summed over phases.
    double consumer_kw_at(std::size_t bus_idx) const;

    double profile_multiplier(const std::string& profile_id, long hour) const;

    void rebuild_indexes();

  private:
    std::unordered_map<std::string, std::size_t> bus_lookup_;
    std::unordered_map<std::string, std::size_t> branch_lookup_;
};

struct ParseError : std::runtime_error {
    ParseError(const std::string& origin, int line, const std::string& what);
    std::string origin;
    int line;
};

/// Parses the feeder text format and validates all structural invariants.
/// `base_dir` resolves profile file references; empty forbids them.
Feeder parse_feeder(const std::string& text, const std::string& base_dir = "",
                    const std::string& origin = "<string>");

Feeder load_feeder_file(const std::string& path);

/// Canonical text form; parse_feeder(serialize_feeder(f)) is structurally equal to f.
std::string serialize_feeder(const Feeder& f);

bool structurally_equal(const Feeder& a, const Feeder& b);

/// True iff the closed branches form an acyclic subgraph that connects every
/// load bus to some substation bus. Throws on unknown branch ids.
bool validate_radiality(const Feeder& f, const std::set<std::string>& closed_set);

/// Full invariant check used by the parser; throws ParseError on violation.
void validate_feeder(const Feeder& f, const std::string& origin = "<feeder>");

}  // namespace mersim
