#pragma once

#include <string>
#include <vector>

#include "gridstate/lp.hpp"
#include "gridstate/measurement.hpp"
#include "gridstate/network.hpp"

namespace gridstate {

struct IslandPartition {
    enum class Kind { Flow, Maximal };
    Kind kind = Kind::Flow;
    std::vector<std::vector<int>> islands;  // internal bus indices, sorted
    std::vector<int> island_of;             // per internal bus index
    std::vector<int> tie_branches;          // in-service branches crossing islands
    std::vector<int> tie_buses;             // internal indices touching tie branches
    // Injection measurements consumed while forming the islands; the rest
    // are retained for the restoration step.
    std::vector<int> used_injections;

    int size() const { return static_cast<int>(islands.size()); }
};

/// Flow observable islands: connected components over branches carrying an
/// in-service active flow measurement, then fixpoint merging driven by
/// boundary injection measurements whose incidence spans exactly two islands.
IslandPartition find_flow_islands(const NetworkModel& net, const MeasurementSet& meas);

/// Maximal observable islands: extends the flow islands by the remaining
/// unused injection measurements, merging island groups whose angle
/// differences the injections pin down (null-space grouping of the reduced
/// rows, refined by connectivity), to a fixpoint.
IslandPartition find_maximal_islands(const NetworkModel& net, const MeasurementSet& meas);

/// Restoration candidate. Only active flows between tie buses, active
/// injections at tie buses, and bus voltage angles participate.
struct PseudoMeasurement {
    MeasurementKind kind = MeasurementKind::Pinj;  // Pflow | Pinj | VphasorAng
    int element = 0;                               // bus id or 1-based branch
    BranchSide side = BranchSide::From;
    double value = 0.0;
    double variance = 1e-2;
};

struct RestorationResult {
    std::vector<int> selected;  // indices into the pseudo candidate list
    bool observable_after = false;
    std::vector<std::vector<int>> remaining_groups;  // island groups still separate
    std::vector<double> r_diagonal;                  // |R_ii| of the Gram factor
    double pivot_threshold = 0.0;                    // epsilon * max |R_ii|
};

/// Gram-matrix restoration over the reduced s-column network: stacks the
/// retained rows (unused tie injections, angle phasors, the slack
/// reference) over the pseudo rows, QR-factors D = H H^T and selects the
/// pseudo rows whose pivots |R_ii| clear the relative threshold.
RestorationResult restore_observability(const NetworkModel& net, const MeasurementSet& meas,
                                        const IslandPartition& partition,
                                        const std::vector<PseudoMeasurement>& pseudo,
                                        double epsilon_rel = 1e-5);

/// Appends the selected pseudo-measurements to the set (ids pseudo1, ...).
void transfer_pseudos(MeasurementSet& set, const std::vector<PseudoMeasurement>& pseudo,
                      const std::vector<int>& selected);

struct PmuPlacementResult {
    std::vector<int> buses;  // external ids, sorted
    bool optimal = false;
    int nodes = 0;
    std::string error;
};

/// Optimal PMU placement. Without legacy measurements: minimum set cover of
/// the binary admittance-adjacency. With a legacy set: the extended
/// formulation whose rows couple the coverage counts of a bus and its
/// neighbors depending on the measurement present (flow at a branch end,
/// injection, or none).
PmuPlacementResult place_pmus(NetworkModel& net, const MeasurementSet* legacy = nullptr,
                              const IlpOptions& opts = {});

}  // namespace gridstate
