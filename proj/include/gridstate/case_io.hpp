#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gridstate/measurement.hpp"
#include "gridstate/network.hpp"

namespace gridstate {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line(line) {}
    int line;
};

/// Raw MATPOWER case tables, row-major, extra columns preserved.
struct CaseFile {
    std::string name;
    double base_mva = 0.0;
    std::vector<std::vector<double>> bus;
    std::vector<std::vector<double>> gen;
    std::vector<std::vector<double>> branch;
    std::vector<std::vector<double>> gencost;
};

/// Parses the MATPOWER subset: `function mpc = name`, `mpc.baseMVA = <num>;`,
/// `mpc.version = '<n>';`, and bracketed numeric matrices with rows split by
/// newlines or semicolons. `%` comments run to end of line. Anything else is
/// rejected with a line number.
CaseFile parse_matpower(const std::string& text);
CaseFile parse_matpower_file(const std::string& path);

/// Case tables to a validated network; angles come in as degrees and leave
/// as radians, tau = 0 normalizes to 1, powers divide by baseMVA.
NetworkModel to_network(const CaseFile& cf);

// Versioned JSON snapshot: write/read round-trips every numeric field
// bit-exactly (shortest-representation float printing).
void snapshot_write(const NetworkModel& network, const MeasurementSet* measurements,
                    const std::string& path);
struct Snapshot {
    NetworkModel network;
    std::optional<MeasurementSet> measurements;
};
Snapshot snapshot_read(const std::string& path);

// Measurement CSV: `id,kind,element,side,value,variance,status,coordinates`.
MeasurementSet read_measurements_csv(const std::string& path,
                                     const NetworkModel* network = nullptr);
void write_measurements_csv(const MeasurementSet& set, const std::string& path);

}  // namespace gridstate
