#pragma once

#include <string>
#include <vector>

#include "mersim/feeder.hpp"

namespace mersim {

/// The post-contingency switching problem: every branch not failed is usable;
/// tie-switches count as candidate edges (unless reconfiguration is disabled).
struct OperableGraph {
    const Feeder* feeder = nullptr;
    std::vector<std::string> failed_components;
    bool ties_available = true;
    std::vector<std::size_t> usable;  // branch indices, ascending

    static OperableGraph make(const Feeder& f, const std::vector<std::string>& failed,
                              bool ties_available = true);
};

struct RestorationPlan {
    bool fully_restorable = false;
    std::vector<std::string> closed_set;      // radial configuration of the energized part
    std::vector<std::string> isolated_buses;  // sorted
    double isolated_load_kw_base = 0.0;
    std::string mer_connection_bus;           // empty when nothing is isolated
    int switch_operations = 0;                // state changes vs. the normal configuration
};

/// True iff every load bus can be connected to a substation using usable
/// branches with switch states free.
bool is_fully_restorable(const OperableGraph& g);

/// Chooses a radial configuration that restores every substation-reachable
/// load. All usable non-switch branches stay in circuit; switches are picked
/// normally-closed first, then ties, then by id, which minimizes switching
/// operations.
RestorationPlan build_restoration_plan(const OperableGraph& g);

/// Number of spanning trees of the usable-branch multigraph, computed with the
/// Kirchhoff matrix-tree determinant. Disconnected graphs return the product
/// over components (isolated buses contribute a factor of one).
double spanning_tree_count(const OperableGraph& g);

}  // namespace mersim
