#pragma once

#include <string>

#include "json.hpp"

#include "gridstate/bad_data.hpp"
#include "gridstate/dc_opf.hpp"
#include "gridstate/estimation.hpp"
#include "gridstate/measurement.hpp"
#include "gridstate/network.hpp"
#include "gridstate/observability.hpp"
#include "gridstate/power_flow.hpp"

namespace gridstate {

using json = nlohmann::json;

json to_json(const ReuseEvents& e);
json to_json(const PowerFlowResult& r, const NetworkModel& net);
json to_json(const DcPowerFlowResult& r, const NetworkModel& net);
json to_json(const DcOpfResult& r, const NetworkModel& net);
json to_json(const EstimationResult& r, const NetworkModel& net);
json to_json(const ChiSquaredOutcome& c);
json to_json(const BadDataReport& r, const NetworkModel& net);
json to_json(const IslandPartition& p, const NetworkModel& net);
json to_json(const RestorationResult& r);
json to_json(const PmuPlacementResult& r);

/// FNV-1a 64-bit content hash, hex encoded; pins input fixtures in reports.
std::string file_digest(const std::string& path);

/// Report envelope: schema_version, command, input digests, results.
json make_report(const std::string& command, const std::vector<std::string>& input_files,
                 json results);

void write_report(const json& report, const std::string& path);

}  // namespace gridstate
