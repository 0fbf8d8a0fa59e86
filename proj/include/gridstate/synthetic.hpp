#pragma once

#include <cstdint>
#include <string>

#include "gridstate/network.hpp"

namespace gridstate {

struct SyntheticSpec {
    int n_buses = 1000;
    int n_branches = 0;  // 0: n_buses + n_buses/10 (ring backbone + chords)
    int gen_every = 10;  // a generator roughly every this many buses
    double load_scale = 1.0;
    uint64_t seed = 1;
};

/// Deterministic synthetic transmission-style network: a meshed backbone
/// ring, radial feeder chains hanging off it, extra chords up to the
/// requested branch count, distributed loads and generators sized to cover
/// them. Solvable by AC and DC power flow.
NetworkModel make_synthetic_network(const SyntheticSpec& spec);

/// Case-file text of a network in the supported MATPOWER subset.
std::string to_matpower_text(const NetworkModel& net, const std::string& name);

}  // namespace gridstate
